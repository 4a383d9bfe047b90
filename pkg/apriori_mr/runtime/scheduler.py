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
Event-driven task scheduling in simulated time.

A phase (all map tasks, or all reduce tasks, of one job) is played out on a
`twisted.internet.task.Clock`: every running attempt is a delayed call firing
at its simulated completion time, and the scheduler reacts to each completion
instant by filling free slots and, when enabled, launching speculative
backups for stragglers.
"""
import logging
import statistics
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import attr
from prometheus_client import Counter, Histogram
from twisted.internet.interfaces import IDelayedCall
from twisted.internet.task import Clock

from apriori_mr.exceptions import SchedulingException
from apriori_mr.runtime.cluster import (
    BlockPlacement,
    ClusterSpec,
    CostModel,
    NodeSpec,
    estimate_task_duration,
)
from apriori_mr.utils import advance_clock_to

logger = logging.getLogger(__name__)

SPECULATIVE_LAUNCHES = Counter(
    "apriori_mr_speculative_tasks",
    "Number of speculative backup attempts launched",
    labelnames=["kind"],
)

TASK_DURATION_HISTOGRAM = Histogram(
    "apriori_mr_simulated_task_duration",
    "Simulated duration of committed task attempts",
    labelnames=["kind"],
)

# simulated-time comparisons tolerate float rounding of this size
EPSILON = 1e-9


class TaskKind(Enum):
    MAP = "map"
    REDUCE = "reduce"


@attr.s(slots=True, frozen=True, auto_attribs=True)
class SimTask:
    """
    The workload of one logical task. Map tasks name the block their split
    belongs to; reduce tasks have no block and can run anywhere.
    """

    task_id: str
    kind: TaskKind
    records: int
    candidates: int = 0
    block_id: Optional[int] = None


@attr.s(slots=True, frozen=True, auto_attribs=True)
class TaskRecord:
    task_id: str
    kind: TaskKind
    node: str
    start: float
    end: float
    is_speculative: bool = False
    was_killed: bool = False
    was_local: bool = True

    @property
    def duration(self) -> float:
        return self.end - self.start


@attr.s(slots=True, frozen=True, auto_attribs=True)
class Schedule:
    records: Tuple[TaskRecord, ...]

    @property
    def committed(self) -> List[TaskRecord]:
        return [record for record in self.records if not record.was_killed]

    @property
    def start(self) -> float:
        return min((record.start for record in self.records), default=0.0)

    @property
    def end(self) -> float:
        return max((record.end for record in self.committed), default=self.start)

    @property
    def makespan(self) -> float:
        return self.end - self.start

    def assignment(self) -> Dict[str, str]:
        """Maps each logical task to the node whose attempt committed."""
        return {record.task_id: record.node for record in self.committed}


class _Attempt:
    __slots__ = ("task", "node", "start", "local", "speculative", "call")

    def __init__(
        self, task: SimTask, node: NodeSpec, start: float, local: bool, speculative: bool
    ) -> None:
        self.task = task
        self.node = node
        self.start = start
        self.local = local
        self.speculative = speculative
        self.call: Optional[IDelayedCall] = None

    def record(self, end: float, killed: bool) -> TaskRecord:
        return TaskRecord(
            task_id=self.task.task_id,
            kind=self.task.kind,
            node=self.node.name,
            start=self.start,
            end=end,
            is_speculative=self.speculative,
            was_killed=killed,
            was_local=self.local,
        )


class PhaseSimulation:
    """
    Plays out one phase of a job.

    Assignment rules, applied at every completion instant:
      1. a node with a free slot takes pending tasks whose block it holds,
         nodes in declaration order, tasks in id order;
      2. tasks still pending then run remote on any node with a free slot;
      3. if every node holds every block of the phase, all tasks are pinned to
         the first node and run in waves of its core count.

    Speculation starts once no task is pending: an attempt whose elapsed time
    reaches `speculation_ratio` times the median committed duration gets one
    backup on the fastest idle node. The first attempt to finish commits and
    the other is killed.
    """

    def __init__(
        self,
        tasks: Sequence[SimTask],
        placement: Optional[BlockPlacement],
        cluster: ClusterSpec,
        cost: CostModel,
        start: float = 0.0,
    ):
        self._cluster = cluster
        self._placement = placement
        self._cost = cost
        self._clock = Clock()
        advance_clock_to(self._clock, start)

        for task in tasks:
            if task.block_id is None:
                continue
            if placement is None or not placement.holders.get(task.block_id):
                raise SchedulingException(
                    f"Task {task.task_id} reads block {task.block_id}, "
                    "which has no replica"
                )

        self._pending: List[SimTask] = list(tasks)
        self._free: Dict[str, int] = {node.name: node.cores for node in cluster.nodes}
        self._running: Dict[str, List[_Attempt]] = {}
        self._committed_durations: List[float] = []
        self._records: List[TaskRecord] = []
        self._wakeup: Optional[IDelayedCall] = None
        self._pinned = self._pinned_node(tasks)

    def _pinned_node(self, tasks: Sequence[SimTask]) -> Optional[NodeSpec]:
        if len(self._cluster.nodes) < 2 or not tasks or self._placement is None:
            return None
        everyone = set(self._cluster.node_names)
        for task in tasks:
            if task.block_id is None:
                return None
            if set(self._placement.holders[task.block_id]) != everyone:
                return None
        first = self._cluster.nodes[0]
        logger.info(
            "Every node holds every block: pinning %d task(s) to %s",
            len(tasks),
            first.name,
        )
        return first

    def _is_local(self, task: SimTask, node: NodeSpec) -> bool:
        if task.block_id is None:
            return True
        assert self._placement is not None
        return self._placement.holds(node.name, task.block_id)

    def run(self) -> Schedule:
        self._dispatch()
        while self._clock.getDelayedCalls():
            next_time = min(call.getTime() for call in self._clock.getDelayedCalls())
            advance_clock_to(self._clock, next_time)
            self._dispatch()

        return Schedule(
            records=tuple(
                sorted(self._records, key=lambda r: (r.task_id, r.start, r.end))
            )
        )

    def _dispatch(self) -> None:
        if self._pinned is not None:
            node = self._pinned
            while self._pending and self._free[node.name]:
                self._launch(self._pending.pop(0), node, speculative=False)
        else:
            for node in self._cluster.nodes:
                for task in list(self._pending):
                    if not self._free[node.name]:
                        break
                    if self._is_local(task, node):
                        self._pending.remove(task)
                        self._launch(task, node, speculative=False)

            for task in list(self._pending):
                idle = [node for node in self._cluster.nodes if self._free[node.name]]
                if not idle:
                    break
                logger.debug(
                    "No holder of block %s is free: running %s remote on %s",
                    task.block_id,
                    task.task_id,
                    idle[0].name,
                )
                self._pending.remove(task)
                self._launch(task, idle[0], speculative=False)

        self._speculate()

    def _launch(self, task: SimTask, node: NodeSpec, speculative: bool) -> None:
        now = self._clock.seconds()
        local = self._is_local(task, node)
        duration = estimate_task_duration(
            task.records, task.candidates, node, local, self._cost
        )
        attempt = _Attempt(task, node, now, local, speculative)
        attempt.call = self._clock.callLater(duration, self._finished, attempt)
        self._free[node.name] -= 1
        self._running.setdefault(task.task_id, []).append(attempt)

    def _finished(self, attempt: _Attempt) -> None:
        now = self._clock.seconds()
        self._free[attempt.node.name] += 1
        self._records.append(attempt.record(now, killed=False))
        self._committed_durations.append(now - attempt.start)
        TASK_DURATION_HISTOGRAM.labels(kind=attempt.task.kind.value).observe(
            now - attempt.start
        )

        for other in self._running.pop(attempt.task.task_id):
            if other is attempt:
                continue
            assert other.call is not None
            other.call.cancel()
            self._free[other.node.name] += 1
            self._records.append(other.record(now, killed=True))
            logger.info(
                "%s finished first on %s; killed the attempt on %s",
                attempt.task.task_id,
                attempt.node.name,
                other.node.name,
            )

    def _speculate(self) -> None:
        if self._wakeup is not None and self._wakeup.active():
            self._wakeup.cancel()
        self._wakeup = None

        if not self._cluster.speculation_enabled:
            return
        if self._pending or not self._committed_durations:
            return

        now = self._clock.seconds()
        threshold = self._cluster.speculation_ratio * statistics.median(
            self._committed_durations
        )
        next_crossing: Optional[float] = None
        for attempts in list(self._running.values()):
            if len(attempts) > 1:
                continue
            original = attempts[0]
            crossing = original.start + threshold
            if crossing > now + EPSILON:
                if next_crossing is None or crossing < next_crossing:
                    next_crossing = crossing
                continue

            node = self._backup_node(original)
            if node is None:
                # re-examined when a slot frees up
                continue
            logger.info(
                "%s on %s exceeded %.2f: launching a backup on %s",
                original.task.task_id,
                original.node.name,
                threshold,
                node.name,
            )
            SPECULATIVE_LAUNCHES.labels(kind=original.task.kind.value).inc()
            self._launch(original.task, node, speculative=True)

        if next_crossing is not None:
            # nothing to do when it fires: the next _dispatch re-examines
            self._wakeup = self._clock.callLater(next_crossing - now, lambda: None)

    def _backup_node(self, original: _Attempt) -> Optional[NodeSpec]:
        idle = [
            (index, node)
            for index, node in enumerate(self._cluster.nodes)
            if self._free[node.name] and node.name != original.node.name
        ]
        if not idle:
            return None
        _, node = min(
            idle,
            key=lambda entry: (
                -entry[1].speed_factor,
                not self._is_local(original.task, entry[1]),
                entry[0],
            ),
        )
        return node


def plan_schedule(
    tasks: Sequence[SimTask],
    placement: Optional[BlockPlacement],
    cluster: ClusterSpec,
    start: float = 0.0,
    cost: Optional[CostModel] = None,
) -> Schedule:
    """
    Assigns tasks to nodes in simulated time and returns every attempt made.

    Args:
        tasks: The tasks of one phase, in task id order.
        placement: Where the tasks' blocks live. Only needed for map tasks.
        cluster: Nodes, speculation settings and default cost model.
        start: Simulated time the phase starts at.
        cost: Overrides the cluster's cost model.

    Raises:
        SchedulingException: if a map task's block has no replica.
    """
    simulation = PhaseSimulation(
        tasks, placement, cluster, cost or cluster.cost, start=start
    )
    return simulation.run()
