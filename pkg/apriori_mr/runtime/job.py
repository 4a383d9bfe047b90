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
Simulated MapReduce jobs: map, combine, shuffle and reduce over input splits,
timed by the scheduler against a modelled cluster.

The user functions run exactly once per logical task, in task id order, and
their outputs are sorted before they are combined or shuffled. Scheduling only
decides where and when a task ran in simulated time; it never changes what a
job computes.
"""
import logging
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import attr
import opentracing
from opentracing import Tracer
from prometheus_client import Counter

from apriori_mr.dataset import Split
from apriori_mr.exceptions import ConfigException, JobFailedException
from apriori_mr.itemsets import Itemset
from apriori_mr.runtime.cluster import BlockPlacement, ClusterSpec, CostModel
from apriori_mr.runtime.metrics import JobMetrics
from apriori_mr.runtime.scheduler import SimTask, TaskKind, plan_schedule
from apriori_mr.utils import JobLoggerAdapter

logger = logging.getLogger(__name__)

JOBS_RUN_COUNTER = Counter("apriori_mr_jobs", "Number of simulated MapReduce jobs run")

Pair = Tuple[Itemset, int]


class TaskContext:
    """Hadoop-style named counters for one task."""

    def __init__(self, task_id: str):
        self.task_id = task_id
        self.counters: Dict[str, int] = {}

    def increment(self, name: str, amount: int = 1) -> None:
        self.counters[name] = self.counters.get(name, 0) + amount

    def get(self, name: str) -> int:
        return self.counters.get(name, 0)


# (1-based file line number, line text) records of a split, the task cache,
# the task context
MapFunction = Callable[[Sequence[Tuple[int, str]], Any, TaskContext], Iterable[Pair]]
ReduceFunction = Callable[[Itemset, List[int]], Optional[Pair]]


@attr.s(slots=True, frozen=True, auto_attribs=True)
class JobInput:
    """
    Attributes:
        lines: The text of the file, one entry per line.
        splits: Contiguous line ranges, one per map task.
        line_numbers: The file line number of each entry of `lines`. Empty
            when the lines are numbered consecutively from 1.
    """

    lines: Tuple[str, ...]
    splits: Tuple[Split, ...]
    line_numbers: Tuple[int, ...] = ()

    def line_number(self, index: int) -> int:
        if self.line_numbers:
            return self.line_numbers[index]
        return index + 1


@attr.s(slots=True, frozen=True, auto_attribs=True)
class JobSpec:
    """
    Attributes:
        name: Used in logs, metrics and errors.
        map_fn: Turns the records of one split into key-value pairs.
        reduce_fn: Folds the values of one key; returning None drops the key.
        input: The file lines and the splits cut from them.
        reducers: Number of reduce tasks (partitions).
        combine_fn: Applied once to each map task's output, grouped by key.
        cache: Read-only payload handed to every map task.
        map_cost: Cost model for map tasks, defaulting to the cluster's.
        reduce_cost: Cost model for reduce tasks, defaulting to the cluster's.
    """

    name: str
    map_fn: MapFunction
    reduce_fn: ReduceFunction
    input: JobInput
    reducers: int = 1
    combine_fn: Optional[ReduceFunction] = None
    cache: Any = None
    map_cost: Optional[CostModel] = None
    reduce_cost: Optional[CostModel] = None


def partition_key(key: Itemset, reducers: int) -> int:
    """
    Routes a key to a reducer: the byte sum of the key's space-separated
    decimal rendering, modulo the reducer count.
    """
    rendered = " ".join(str(item) for item in key).encode("ascii")
    return sum(rendered) % reducers


def _group_apply(pairs: Sequence[Pair], fn: ReduceFunction) -> List[Pair]:
    # pairs are sorted, so equal keys are adjacent
    out: List[Pair] = []
    index = 0
    while index < len(pairs):
        key = pairs[index][0]
        values = []
        while index < len(pairs) and pairs[index][0] == key:
            values.append(pairs[index][1])
            index += 1
        result = fn(key, values)
        if result is not None:
            out.append(result)
    return out


def run_job(
    job: JobSpec,
    placement: BlockPlacement,
    cluster: ClusterSpec,
    tracer: Tracer = opentracing.tracer,
) -> Tuple[List[Pair], JobMetrics]:
    """
    Runs a job on the simulated cluster.

    Returns:
        The reduced key-value pairs sorted by key, and the job's metrics.

    Raises:
        JobFailedException: if a map, combine or reduce function raised.
        SchedulingException: if a split's block has no replica.
    """
    if job.reducers < 1:
        raise ConfigException(f"A job needs at least one reducer, got {job.reducers}")

    log = JobLoggerAdapter(logger, {"job": job.name})
    JOBS_RUN_COUNTER.inc()

    with tracer.start_active_span("run_job") as scope:
        scope.span.set_tag("job", job.name)
        task_counters: Dict[str, Dict[str, int]] = {}

        map_tasks = []
        map_outputs = []
        for split in job.input.splits:
            task_id = f"m_{split.split_id:06d}"
            context = TaskContext(task_id)
            records = [
                (job.input.line_number(index), job.input.lines[index])
                for index in range(split.start, split.end)
            ]
            try:
                pairs = sorted(job.map_fn(records, job.cache, context))
                if job.combine_fn is not None:
                    pairs = _group_apply(pairs, job.combine_fn)
            except Exception as e:
                raise JobFailedException(
                    f"Map task failed: {e}", job_name=job.name, task_id=task_id
                ) from e

            context.increment("input_records", len(records))
            context.increment("output_records", len(pairs))
            task_counters[task_id] = context.counters
            map_outputs.append(pairs)
            map_tasks.append(
                SimTask(
                    task_id=task_id,
                    kind=TaskKind.MAP,
                    records=len(records),
                    candidates=context.get("candidates"),
                    block_id=split.block_id,
                )
            )

        log.info(
            "Submitted with %d map task(s) and %d reducer(s)",
            len(map_tasks),
            job.reducers,
        )
        map_schedule = plan_schedule(map_tasks, placement, cluster, cost=job.map_cost)

        partitions: List[Dict[Itemset, List[int]]] = [{} for _ in range(job.reducers)]
        for pairs in map_outputs:
            for key, value in pairs:
                partitions[partition_key(key, job.reducers)].setdefault(
                    key, []
                ).append(value)

        output: List[Pair] = []
        reduce_tasks = []
        for partition_number, partition in enumerate(partitions):
            task_id = f"r_{partition_number:06d}"
            input_records = sum(len(values) for values in partition.values())
            reduced = 0
            for key in sorted(partition):
                try:
                    result = job.reduce_fn(key, partition[key])
                except Exception as e:
                    raise JobFailedException(
                        f"Reduce task failed on key {key}: {e}",
                        job_name=job.name,
                        task_id=task_id,
                    ) from e
                if result is not None:
                    output.append(result)
                    reduced += 1
            task_counters[task_id] = {
                "input_records": input_records,
                "output_records": reduced,
            }
            reduce_tasks.append(
                SimTask(task_id=task_id, kind=TaskKind.REDUCE, records=input_records)
            )

        # reducers start only once every map task has committed
        reduce_schedule = plan_schedule(
            reduce_tasks, None, cluster, start=map_schedule.end, cost=job.reduce_cost
        )

        output.sort()
        metrics = JobMetrics.from_schedules(
            job.name, [map_schedule, reduce_schedule], cluster, task_counters
        )
        scope.span.set_tag("makespan", metrics.makespan)
        log.info(
            "Finished: %d output pair(s), makespan %.2f, %d speculative attempt(s)",
            len(output),
            metrics.makespan,
            metrics.speculative_launches,
        )
        return output, metrics
