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
The modelled cluster: DataNodes, HDFS-style block placement and the cost model
that turns a task's workload into simulated time on a given node.
"""
import logging
import random
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Type, TypeVar

import attr

from apriori_mr.dataset import Block
from apriori_mr.exceptions import ConfigException, PlacementException

logger = logging.getLogger(__name__)

T = TypeVar("T")


def get_key(raw: Mapping[str, Any], key: str, type_: Type[T], default: T) -> T:
    if key not in raw or raw[key] is None:
        return default
    value = raw[key]
    # ints are acceptable wherever floats are
    if type_ is float and isinstance(value, int) and not isinstance(value, bool):
        return type_(value)  # type: ignore[call-arg]
    if not isinstance(value, type_) or (type_ is int and isinstance(value, bool)):
        raise ConfigException(f"{key} is of invalid type")
    return value


class NodeKind(Enum):
    PHYSICAL = "physical"
    VIRTUAL = "virtual"


@attr.s(slots=True, frozen=True, auto_attribs=True)
class NodeSpec:
    name: str
    cores: int = 4
    speed_factor: float = 1.0
    kind: NodeKind = NodeKind.PHYSICAL

    def __attrs_post_init__(self) -> None:
        if self.cores < 1:
            raise ConfigException(f"Node {self.name} needs at least one core")
        if self.speed_factor <= 0:
            raise ConfigException(f"Node {self.name} needs a positive speed")


@attr.s(slots=True, frozen=True, auto_attribs=True)
class CostModel:
    """
    Simulated task duration is
    `(startup + alpha * records + beta * records * candidates) / speed`,
    multiplied by `remote_penalty` when the input block is not local.
    """

    startup: float = 2.0
    alpha: float = 1.0
    beta: float = 0.001
    remote_penalty: float = 1.1


@attr.s(slots=True, frozen=True, auto_attribs=True)
class ClusterSpec:
    nodes: Tuple[NodeSpec, ...]
    replication_factor: int = 3
    speculation_enabled: bool = True
    speculation_ratio: float = 1.5
    cost: CostModel = attr.Factory(CostModel)
    seed: int = 0

    def __attrs_post_init__(self) -> None:
        if not self.nodes:
            raise ConfigException("A cluster needs at least one node")
        names = [node.name for node in self.nodes]
        if len(set(names)) != len(names):
            raise ConfigException(f"Node names must be unique: {names}")
        if self.replication_factor < 1:
            raise ConfigException("replication must be >= 1")
        if self.replication_factor > len(self.nodes):
            raise PlacementException(
                f"Replication factor {self.replication_factor} exceeds the "
                f"{len(self.nodes)} node(s) of the cluster"
            )

    @property
    def node_names(self) -> List[str]:
        return [node.name for node in self.nodes]

    def node(self, name: str) -> NodeSpec:
        for node in self.nodes:
            if node.name == name:
                return node
        raise ConfigException(f"Unknown node {name!r}")

    def without_node(self, name: str) -> "ClusterSpec":
        """
        The same cluster with one node removed. The replication factor is
        capped at the remaining node count.
        """
        nodes = tuple(node for node in self.nodes if node.name != name)
        return attr.evolve(
            self,
            nodes=nodes,
            replication_factor=min(self.replication_factor, len(nodes)),
        )

    @classmethod
    def from_config(cls, raw: Mapping[str, Any]) -> "ClusterSpec":
        """
        Builds a cluster from the `nodes`, `replication`, `speculation`,
        `remote_penalty`, `cost` and `seed` fields of a cluster file.
        """
        raw_nodes = raw.get("nodes")
        if not isinstance(raw_nodes, list) or not raw_nodes:
            raise ConfigException("Expected a non-empty list in 'nodes'")

        nodes = []
        for raw_node in raw_nodes:
            if not isinstance(raw_node, dict) or not isinstance(
                raw_node.get("name"), str
            ):
                raise ConfigException("Node with missing or non-string name")
            try:
                kind = NodeKind(get_key(raw_node, "kind", str, "physical"))
            except ValueError:
                raise ConfigException(
                    f"Node {raw_node['name']} has an unknown kind {raw_node['kind']!r}"
                )
            nodes.append(
                NodeSpec(
                    name=raw_node["name"],
                    cores=get_key(raw_node, "cores", int, 4),
                    speed_factor=get_key(raw_node, "speed", float, 1.0),
                    kind=kind,
                )
            )

        speculation = get_key(raw, "speculation", dict, {})
        cost = get_key(raw, "cost", dict, {})
        return cls(
            nodes=tuple(nodes),
            replication_factor=get_key(raw, "replication", int, 3),
            speculation_enabled=get_key(speculation, "enabled", bool, True),
            speculation_ratio=get_key(speculation, "ratio", float, 1.5),
            cost=CostModel(
                startup=get_key(cost, "startup", float, 2.0),
                alpha=get_key(cost, "alpha", float, 1.0),
                beta=get_key(cost, "beta", float, 0.001),
                remote_penalty=get_key(raw, "remote_penalty", float, 1.1),
            ),
            seed=get_key(raw, "seed", int, 0),
        )


def estimate_task_duration(
    records: int,
    candidates: int,
    node: NodeSpec,
    is_local: bool,
    cost: CostModel,
) -> float:
    """
    Returns the simulated time a task takes on `node`.

    Args:
        records: Input records (lines, or values for a reduce task).
        candidates: Size of the candidate set each record is matched against.
        node: The node running the task.
        is_local: Whether the node holds a replica of the task's input block.
        cost: The cost model constants.
    """
    work = cost.startup + cost.alpha * records + cost.beta * records * candidates
    duration = work / node.speed_factor
    if not is_local:
        duration *= cost.remote_penalty
    return duration


class PlacementMode(Enum):
    EXPLICIT = "explicit"
    SEEDED_RANDOM = "seeded_random"


@attr.s(slots=True, frozen=True, auto_attribs=True)
class BlockPlacement:
    """Maps each block id to the ordered names of the nodes holding a replica."""

    holders: Dict[int, Tuple[str, ...]]

    @property
    def replication_factor(self) -> int:
        counts = {len(names) for names in self.holders.values()}
        return counts.pop() if counts else 0

    def holds(self, node_name: str, block_id: int) -> bool:
        return node_name in self.holders.get(block_id, ())

    def blocks_on(self, node_name: str) -> List[int]:
        return sorted(
            block_id for block_id, names in self.holders.items() if node_name in names
        )

    def to_json_dict(self) -> Dict[str, List[str]]:
        return {str(block_id): list(names) for block_id, names in self.holders.items()}


def parse_placement(raw: Any) -> Dict[int, List[str]]:
    """
    Reads a block -> nodes map as found in cluster or placement files, either
    bare or under a `placement` key.
    """
    if not isinstance(raw, Mapping):
        raise PlacementException("A placement must map block ids to node names")
    if "placement" in raw and isinstance(raw["placement"], dict):
        raw = raw["placement"]
    parsed = {}
    for key, names in raw.items():
        try:
            block_id = int(key)
        except ValueError:
            raise PlacementException(f"Block id {key!r} is not an integer")
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise PlacementException(f"Block {key} needs a list of node names")
        parsed[block_id] = names
    return parsed


def place_blocks(
    blocks: Sequence[Block],
    cluster: ClusterSpec,
    mode: PlacementMode,
    explicit: Optional[Mapping[int, Sequence[str]]] = None,
    replication_factor: Optional[int] = None,
) -> BlockPlacement:
    """
    Decides which nodes hold a replica of each block.

    EXPLICIT validates and returns `explicit` as given; any uniform replica count
    up to the node count is accepted. SEEDED_RANDOM draws the holders of each
    block uniformly without replacement from a generator seeded with the
    cluster seed, so the same seed always yields the same placement.

    Args:
        blocks: The blocks of the file being put.
        cluster: The cluster the file is put on.
        mode: How to place.
        explicit: The placement to use in EXPLICIT mode.
        replication_factor: Overrides the cluster's replication factor in
            SEEDED_RANDOM mode.

    Raises:
        PlacementException: on unknown or repeated holders, a missing block, or
            more replicas than nodes.
    """
    if mode is PlacementMode.EXPLICIT:
        if explicit is None:
            raise PlacementException("EXPLICIT placement needs a block map")
        return _validate_explicit(blocks, cluster, explicit)

    rf = cluster.replication_factor if replication_factor is None else replication_factor
    if rf > len(cluster.nodes):
        raise PlacementException(
            f"Replication factor {rf} exceeds the {len(cluster.nodes)} node(s)"
        )
    rng = random.Random(cluster.seed)
    names = cluster.node_names
    return BlockPlacement(
        holders={block.block_id: tuple(rng.sample(names, rf)) for block in blocks}
    )


def _validate_explicit(
    blocks: Sequence[Block],
    cluster: ClusterSpec,
    explicit: Mapping[int, Sequence[str]],
) -> BlockPlacement:
    known = set(cluster.node_names)
    wanted = {block.block_id for block in blocks}

    extra = sorted(set(explicit) - wanted)
    if extra:
        logger.warning("Ignoring placement of unknown block(s) %s", extra)

    holders: Dict[int, Tuple[str, ...]] = {}
    for block_id in sorted(wanted):
        if block_id not in explicit:
            raise PlacementException(f"Block {block_id} has no replica holders")
        names = tuple(explicit[block_id])
        if not names:
            raise PlacementException(f"Block {block_id} has no replica holders")
        if len(set(names)) != len(names):
            raise PlacementException(f"Block {block_id} lists a holder twice")
        unknown = [name for name in names if name not in known]
        if unknown:
            raise PlacementException(f"Block {block_id} is on unknown node(s) {unknown}")
        holders[block_id] = names

    if len({len(names) for names in holders.values()}) > 1:
        raise PlacementException("Every block must have the same number of replicas")
    return BlockPlacement(holders=holders)
