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
import statistics
from typing import Dict, Iterable, List, Sequence, Tuple

import attr

from apriori_mr.runtime.cluster import ClusterSpec, NodeKind
from apriori_mr.runtime.scheduler import Schedule, TaskKind, TaskRecord


@attr.s(slots=True, frozen=True, auto_attribs=True)
class NodeAggregate:
    name: str
    kind: NodeKind
    map_tasks: int
    mean_map_duration: float
    busy_time: float


@attr.s(slots=True, frozen=True, auto_attribs=True)
class JobMetrics:
    """
    Every attempt of one simulated job plus aggregates derived from them.
    `counters` holds the job-wide sums of the task counters.
    """

    name: str
    tasks: Tuple[TaskRecord, ...]
    per_node: Tuple[NodeAggregate, ...]
    counters: Dict[str, int] = attr.Factory(dict)
    task_counters: Dict[str, Dict[str, int]] = attr.Factory(dict)

    @property
    def committed(self) -> List[TaskRecord]:
        return [task for task in self.tasks if not task.was_killed]

    @property
    def start(self) -> float:
        return min((task.start for task in self.tasks), default=0.0)

    @property
    def end(self) -> float:
        return max((task.end for task in self.committed), default=self.start)

    @property
    def makespan(self) -> float:
        return self.end - self.start

    @property
    def speculative_launches(self) -> int:
        return sum(1 for task in self.tasks if task.is_speculative)

    @classmethod
    def from_schedules(
        cls,
        name: str,
        schedules: Sequence[Schedule],
        cluster: ClusterSpec,
        task_counters: Dict[str, Dict[str, int]],
    ) -> "JobMetrics":
        tasks = tuple(record for schedule in schedules for record in schedule.records)
        counters: Dict[str, int] = {}
        for per_task in task_counters.values():
            for counter, value in per_task.items():
                counters[counter] = counters.get(counter, 0) + value
        return cls(
            name=name,
            tasks=tasks,
            per_node=aggregate_nodes(tasks, cluster),
            counters=counters,
            task_counters=task_counters,
        )


def aggregate_nodes(
    tasks: Sequence[TaskRecord], cluster: ClusterSpec
) -> Tuple[NodeAggregate, ...]:
    """Per-node aggregates, in node declaration order."""
    aggregates = []
    for node in cluster.nodes:
        on_node = [task for task in tasks if task.node == node.name]
        committed_maps = [
            task.duration
            for task in on_node
            if task.kind is TaskKind.MAP and not task.was_killed
        ]
        aggregates.append(
            NodeAggregate(
                name=node.name,
                kind=node.kind,
                map_tasks=len(committed_maps),
                mean_map_duration=(
                    statistics.mean(committed_maps) if committed_maps else 0.0
                ),
                busy_time=sum(task.duration for task in on_node),
            )
        )
    return tuple(aggregates)


@attr.s(slots=True, frozen=True, auto_attribs=True)
class NodeSpeed:
    name: str
    kind: NodeKind
    map_tasks: int
    mean_map_duration: float


def summarize_node_speeds(metrics: JobMetrics) -> List[NodeSpeed]:
    """
    Ranks the nodes that committed at least one map task by mean map task
    duration, slowest first. Killed attempts do not count.
    """
    return pool_node_speeds([metrics])


def pool_node_speeds(jobs: Iterable[JobMetrics]) -> List[NodeSpeed]:
    """
    Like `summarize_node_speeds`, over the committed map tasks of several
    jobs. Nodes are matched by name, so jobs may come from different clusters.
    """
    kinds: Dict[str, NodeKind] = {}
    counts: Dict[str, int] = {}
    totals: Dict[str, float] = {}
    for metrics in jobs:
        for node in metrics.per_node:
            if not node.map_tasks:
                continue
            kinds[node.name] = node.kind
            counts[node.name] = counts.get(node.name, 0) + node.map_tasks
            totals[node.name] = (
                totals.get(node.name, 0.0) + node.mean_map_duration * node.map_tasks
            )
    rows = [
        NodeSpeed(
            name=name,
            kind=kinds[name],
            map_tasks=counts[name],
            mean_map_duration=totals[name] / counts[name],
        )
        for name in counts
    ]
    rows.sort(key=lambda row: (-row.mean_map_duration, row.name))
    return rows
