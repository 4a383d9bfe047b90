# -*- coding: utf-8 -*-
# Copyright 2024 The apriori-mr Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""
Comparative experiments: the same mining workload run under a matrix of
cluster, placement, split or store configurations.
"""
import logging
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import attr

from apriori_mr.candidates import StoreVariant
from apriori_mr.dataset import TransactionDatabase, partition_into_blocks
from apriori_mr.exceptions import ConfigException
from apriori_mr.jobs import MiningConfig, MiningResult, run_apriori
from apriori_mr.report import ExperimentRun, node_speeds_to_json
from apriori_mr.runtime.cluster import (
    BlockPlacement,
    ClusterSpec,
    NodeKind,
    PlacementMode,
    place_blocks,
)
from apriori_mr.runtime.metrics import JobMetrics, pool_node_speeds
from apriori_mr.runtime.scheduler import TaskKind

logger = logging.getLogger(__name__)


@attr.s(slots=True, frozen=True, auto_attribs=True)
class Workload:
    """The baseline every configuration of an experiment varies."""

    db: TransactionDatabase
    config: MiningConfig
    cluster: ClusterSpec
    placement: BlockPlacement


Outcome = Tuple[List[ExperimentRun], Dict[str, Any]]


def _mine(
    name: str,
    db: TransactionDatabase,
    config: MiningConfig,
    cluster: ClusterSpec,
    placement: BlockPlacement,
    notes: Optional[Dict[str, Any]] = None,
) -> Tuple[ExperimentRun, MiningResult]:
    logger.info("Running configuration %s", name)
    result = run_apriori(db, config, cluster, placement)
    run_notes = {"frequent_itemsets": len(result.frequent_itemsets())}
    run_notes.update(notes or {})
    return ExperimentRun(name=name, jobs=result.jobs, notes=run_notes), result


def local_map_tasks(metrics: JobMetrics, cluster: ClusterSpec, kind: NodeKind) -> int:
    """Committed data-local map tasks that ran on nodes of the given kind."""
    nodes = {node.name for node in cluster.nodes if node.kind is kind}
    return sum(
        1
        for task in metrics.committed
        if task.kind is TaskKind.MAP and task.was_local and task.node in nodes
    )


def map_tasks_per_node(jobs: Sequence[JobMetrics]) -> Dict[str, int]:
    """Committed map tasks per node name, summed over the jobs."""
    counts: Dict[str, int] = {}
    for metrics in jobs:
        for task in metrics.committed:
            if task.kind is TaskKind.MAP:
                counts[task.node] = counts.get(task.node, 0) + 1
    return counts


def busiest_node(jobs: Sequence[JobMetrics], cluster: ClusterSpec) -> str:
    """The node that committed the most map tasks; ties go to the first declared."""
    counts = map_tasks_per_node(jobs)
    return max(cluster.nodes, key=lambda node: counts.get(node.name, 0)).name


def speculation_experiment(
    workload: Workload,
    straggler_speed: Optional[float] = None,
    straggler_node: Optional[str] = None,
) -> Outcome:
    """
    Runs with speculative execution off, then on.

    With a straggler speed, one node is slowed down to it for both runs:
    `straggler_node`, or else the node that committed the most map tasks in a
    baseline run at the declared speeds. Task assignment does not look at
    speed, so the slowed node keeps the tasks it ran in the baseline.
    """
    cluster = workload.cluster
    summary: Dict[str, Any] = {}
    if straggler_speed is None:
        if straggler_node is not None:
            raise ConfigException("A straggler node needs a straggler speed")
    else:
        if straggler_speed <= 0:
            raise ConfigException("The straggler speed must be positive")
        if straggler_node is None:
            baseline, _ = _mine(
                "baseline",
                workload.db,
                workload.config,
                attr.evolve(cluster, speculation_enabled=False),
                workload.placement,
            )
            straggler_node = busiest_node(baseline.jobs, cluster)
            summary["baseline_makespan"] = round(baseline.makespan, 2)
        elif straggler_node not in cluster.node_names:
            raise ConfigException(f"Unknown straggler node {straggler_node!r}")
        logger.info("Slowing %s down to %s", straggler_node, straggler_speed)
        cluster = attr.evolve(
            cluster,
            nodes=tuple(
                attr.evolve(node, speed_factor=straggler_speed)
                if node.name == straggler_node
                else node
                for node in cluster.nodes
            ),
        )
        summary["straggler_node"] = straggler_node

    runs = []
    for enabled in (False, True):
        run, _ = _mine(
            "speculation-on" if enabled else "speculation-off",
            workload.db,
            workload.config,
            attr.evolve(cluster, speculation_enabled=enabled),
            workload.placement,
        )
        runs.append(run)
    summary["speculative_launches"] = runs[1].speculative_launches
    return runs, summary


def placement_experiment(
    workload: Workload, placements: Sequence[Tuple[str, Mapping[int, Sequence[str]]]]
) -> Outcome:
    """Runs once per named explicit block placement of the input file."""
    if not placements:
        raise ConfigException("The placement experiment needs at least one placement")
    blocks = partition_into_blocks(workload.db, workload.config.block_lines)
    runs = []
    for name, explicit in placements:
        placement = place_blocks(
            blocks, workload.cluster, PlacementMode.EXPLICIT, explicit=explicit
        )
        run, result = _mine(
            name, workload.db, workload.config, workload.cluster, placement
        )
        run.notes["virtual_local_map_tasks"] = local_map_tasks(
            result.jobs[0], workload.cluster, NodeKind.VIRTUAL
        )
        run.notes["replication"] = placement.replication_factor
        runs.append(run)
    return runs, {}


def split_experiment(workload: Workload, splits: Sequence[Optional[int]]) -> Outcome:
    """
    Runs once per split size; None splits on blocks. The placement is shared,
    as the blocks do not change.
    """
    if not splits:
        raise ConfigException("The split experiment needs at least one split size")
    runs = []
    for split_lines in splits:
        config = attr.evolve(workload.config, split_lines=split_lines)
        run, result = _mine(
            "blocks" if split_lines is None else f"split-{split_lines}",
            workload.db,
            config,
            workload.cluster,
            workload.placement,
        )
        run.notes["map_tasks"] = sum(
            1 for task in result.jobs[0].committed if task.kind is TaskKind.MAP
        )
        runs.append(run)
    return runs, {}


def _first_counting_job(run: ExperimentRun) -> JobMetrics:
    return next(
        (metrics for metrics in run.jobs if metrics.name.startswith("job2-")),
        run.jobs[0],
    )


def nodes_experiment(workload: Workload) -> Outcome:
    """
    Runs on the whole cluster, then once with each node removed. Blocks are
    placed afresh on every reduced cluster with one replica fewer than there
    are nodes left, so a block never sits on every node of a reduced cluster
    of two or more.

    The summary ranks the nodes by the mean duration of the map tasks they
    committed in the first counting job of every configuration, slowest first.
    Those tasks have the same cost in every configuration.
    """
    blocks = partition_into_blocks(workload.db, workload.config.block_lines)
    runs = []
    run, _ = _mine(
        "all-nodes",
        workload.db,
        workload.config,
        workload.cluster,
        workload.placement,
    )
    runs.append(run)

    if len(workload.cluster.nodes) > 1:
        for node in workload.cluster.nodes:
            cluster = workload.cluster.without_node(node.name)
            replication = max(
                1,
                min(workload.placement.replication_factor, len(cluster.nodes) - 1),
            )
            placement = place_blocks(
                blocks,
                cluster,
                PlacementMode.SEEDED_RANDOM,
                replication_factor=replication,
            )
            run, _ = _mine(
                f"without-{node.name}",
                workload.db,
                workload.config,
                cluster,
                placement,
                notes={"replication": replication},
            )
            runs.append(run)

    speeds = pool_node_speeds(_first_counting_job(run) for run in runs)
    summary: Dict[str, Any] = {"node_speeds": node_speeds_to_json(speeds)}
    if speeds:
        summary["slowest_node"] = speeds[0].name
    return runs, summary


def structures_experiment(workload: Workload) -> Outcome:
    """
    Runs every candidate store variant on the raw input and on filtered
    transactions. The itemsets must not differ.
    """
    runs = []
    outputs = []
    for variant in StoreVariant:
        for use_ft in (False, True):
            config = attr.evolve(
                workload.config, variant=variant, use_filtered_transactions=use_ft
            )
            run, result = _mine(
                f"{variant.value}+ft" if use_ft else variant.value,
                workload.db,
                config,
                workload.cluster,
                workload.placement,
                notes={"input_lines": workload.db.line_count},
            )
            if result.filtered_transactions is not None:
                run.notes["weighted_lines"] = result.filtered_transactions.line_count
            runs.append(run)
            outputs.append(result.frequent_itemsets())
    identical = all(output == outputs[0] for output in outputs)
    if not identical:
        logger.error("Store variants disagree on the frequent itemsets")
    return runs, {"identical_itemsets": identical}


EXPERIMENTS: Dict[str, Callable[..., Outcome]] = {
    "speculation": speculation_experiment,
    "placement": placement_experiment,
    "split": split_experiment,
    "nodes": nodes_experiment,
    "structures": structures_experiment,
}
