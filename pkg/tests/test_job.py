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
import random
from functools import partial
from typing import Iterator, List, Optional, Sequence, Tuple

import attr

from apriori_mr.dataset import (
    TransactionDatabase,
    make_line_splits,
    partition_into_blocks,
)
from apriori_mr.exceptions import JobFailedException
from apriori_mr.jobs import one_itemset_map, sum_reduce
from apriori_mr.runtime.cluster import (
    BlockPlacement,
    ClusterSpec,
    CostModel,
    PlacementMode,
    place_blocks,
)
from apriori_mr.runtime.job import (
    JobInput,
    JobSpec,
    Pair,
    TaskContext,
    partition_key,
    run_job,
)
from apriori_mr.runtime.scheduler import TaskKind

from tests import testutils
from tests.testutils import node


def job_input(
    db: TransactionDatabase, block_lines: int, split_lines: Optional[int] = None
) -> Tuple[JobInput, list]:
    blocks = partition_into_blocks(db, block_lines)
    splits = make_line_splits(db, split_lines, blocks)
    return JobInput(lines=db.lines, splits=tuple(splits)), blocks


def count_job(
    db: TransactionDatabase,
    block_lines: int = 2,
    split_lines: Optional[int] = None,
    reducers: int = 1,
    combine: bool = True,
) -> Tuple[JobSpec, list]:
    spec_input, blocks = job_input(db, block_lines, split_lines)
    return (
        JobSpec(
            name="count",
            map_fn=one_itemset_map,
            reduce_fn=sum_reduce,
            input=spec_input,
            reducers=reducers,
            combine_fn=sum_reduce if combine else None,
        ),
        blocks,
    )


def place(blocks: list, cluster: ClusterSpec) -> BlockPlacement:
    return place_blocks(blocks, cluster, PlacementMode.SEEDED_RANDOM)


class PartitionTestCase(testutils.TestCase):
    def test_partition_key(self) -> None:
        self.assertEqual(partition_key((1, 2), 4), 3)
        self.assertEqual(partition_key((7,), 4), 3)
        self.assertEqual(partition_key((123, 4567), 1), 0)


class RunJobTestCase(testutils.TestCase):
    def test_counts_items_of_db4(self) -> None:
        cluster = testutils.heterogeneous_cluster()
        job, blocks = count_job(testutils.fixture_db4())
        output, metrics = run_job(job, place(blocks, cluster), cluster)
        self.assertEqual(output, [((1,), 3), ((2,), 3), ((3,), 2), ((4,), 2)])
        self.assertEqual(metrics.name, "count")

    def test_every_key_lands_in_one_partition(self) -> None:
        cluster = testutils.heterogeneous_cluster()
        db = testutils.random_database(random.Random(4), 40, 30)
        job, blocks = count_job(db, block_lines=7, reducers=4)
        output, metrics = run_job(job, place(blocks, cluster), cluster)

        reducers = [t for t in metrics.committed if t.kind is TaskKind.REDUCE]
        self.assertEqual(len(reducers), 4)
        reduce_outputs = sum(
            metrics.task_counters[f"r_{i:06d}"]["output_records"] for i in range(4)
        )
        self.assertEqual(reduce_outputs, len(output))
        self.assertEqual(len({key for key, _ in output}), len(output))

    def test_combiner_does_not_change_output(self) -> None:
        cluster = testutils.heterogeneous_cluster()
        rng = random.Random(8)
        for _ in range(20):
            db = testutils.random_database(rng)
            with_combiner, blocks = count_job(db, block_lines=3, reducers=3)
            without, _ = count_job(db, block_lines=3, reducers=3, combine=False)
            placement = place(blocks, cluster)
            self.assertEqual(
                run_job(with_combiner, placement, cluster)[0],
                run_job(without, placement, cluster)[0],
            )

    def test_combiner_shrinks_shuffle(self) -> None:
        cluster = testutils.heterogeneous_cluster()
        db = TransactionDatabase.from_lines(["1 2"] * 6)
        with_combiner, blocks = count_job(db, block_lines=6)
        without, _ = count_job(db, block_lines=6, combine=False)
        placement = place(blocks, cluster)
        self.assertEqual(
            run_job(with_combiner, placement, cluster)[1].counters["output_records"],
            2 + 2,
        )
        self.assertEqual(
            run_job(without, placement, cluster)[1].counters["output_records"],
            12 + 2,
        )

    def test_output_is_independent_of_scheduling(self) -> None:
        db = testutils.random_database(random.Random(15), 40, 12)
        reference = None
        clusters = [
            testutils.heterogeneous_cluster(),
            testutils.heterogeneous_cluster(speculation=True, replication_factor=4),
            testutils.make_cluster(node("solo", speed=0.3)),
        ]
        for cluster in clusters:
            for block_lines, split_lines in ((3, None), (5, 2), (100, 7)):
                job, blocks = count_job(db, block_lines, split_lines, reducers=2)
                output, _ = run_job(job, place(blocks, cluster), cluster)
                if reference is None:
                    reference = output
                self.assertEqual(output, reference)

    def test_reducers_wait_for_every_map(self) -> None:
        cluster = testutils.heterogeneous_cluster(speculation=True)
        db = testutils.random_database(random.Random(16), 40, 12)
        job, blocks = count_job(db, block_lines=3, reducers=4)
        _, metrics = run_job(job, place(blocks, cluster), cluster)
        last_map = max(
            t.end for t in metrics.committed if t.kind is TaskKind.MAP
        )
        first_reduce = min(t.start for t in metrics.tasks if t.kind is TaskKind.REDUCE)
        self.assertGreaterEqual(first_reduce, last_map)
        self.assertAlmostEqual(metrics.makespan, metrics.end - metrics.start)

    def test_same_inputs_same_metrics(self) -> None:
        cluster = testutils.heterogeneous_cluster(speculation=True)
        db = testutils.random_database(random.Random(23), 40, 12)
        job, blocks = count_job(db, block_lines=4, reducers=2)
        placement = place(blocks, cluster)
        self.assertEqual(
            run_job(job, placement, cluster), run_job(job, placement, cluster)
        )

    def test_failing_map_names_job_and_task(self) -> None:
        cluster = testutils.heterogeneous_cluster()
        db = TransactionDatabase.from_lines(["1 2", "3", "4", "5"])
        spec_input, blocks = job_input(db, 2)
        lines = list(spec_input.lines)
        lines[3] = "5 x"
        job = JobSpec(
            name="broken",
            map_fn=one_itemset_map,
            reduce_fn=sum_reduce,
            input=JobInput(lines=tuple(lines), splits=spec_input.splits),
        )
        with self.assertRaises(JobFailedException) as cm:
            run_job(job, place(blocks, cluster), cluster)
        self.assertEqual(cm.exception.job_name, "broken")
        self.assertEqual(cm.exception.task_id, "m_000001")
        self.assertIn("line 4", str(cm.exception))

    def test_map_records_carry_file_line_numbers(self) -> None:
        seen: List[int] = []

        def note_lines(
            records: Sequence[Tuple[int, str]], cache: object, context: TaskContext
        ) -> Iterator[Pair]:
            seen.extend(line_number for line_number, _ in records)
            return iter(())

        db = TransactionDatabase.from_lines(["1", "", "2", "", "", "3"])
        self.assertEqual(db.line_numbers, (1, 3, 6))
        spec_input, blocks = job_input(db, 3)
        cluster = testutils.heterogeneous_cluster()
        job = JobSpec(
            name="lines",
            map_fn=note_lines,
            reduce_fn=sum_reduce,
            input=attr.evolve(spec_input, line_numbers=db.line_numbers),
        )
        run_job(job, place(blocks, cluster), cluster)
        self.assertEqual(seen, [1, 3, 6])

    def test_map_error_names_the_line_after_blank_lines(self) -> None:
        cluster = testutils.heterogeneous_cluster()
        db = TransactionDatabase.from_lines(["1", "", "", "2"])
        spec_input, blocks = job_input(db, 2)
        job = JobSpec(
            name="broken",
            map_fn=one_itemset_map,
            reduce_fn=sum_reduce,
            input=attr.evolve(
                spec_input, lines=("1", "2 x"), line_numbers=db.line_numbers
            ),
        )
        with self.assertRaises(JobFailedException) as cm:
            run_job(job, place(blocks, cluster), cluster)
        self.assertIn("line 4", str(cm.exception))

    def test_failing_reduce_names_the_reducer(self) -> None:
        def explode(key: tuple, values: List[int]) -> None:
            raise ValueError("boom")

        cluster = testutils.heterogeneous_cluster()
        spec_input, blocks = job_input(testutils.fixture_db4(), 4)
        job = JobSpec(
            name="explode",
            map_fn=one_itemset_map,
            reduce_fn=explode,
            input=spec_input,
        )
        with self.assertRaises(JobFailedException) as cm:
            run_job(job, place(blocks, cluster), cluster)
        self.assertEqual(cm.exception.task_id, "r_000000")


class SplitSizeTestCase(testutils.TestCase):
    def test_smaller_splits_shorten_the_map_phase(self) -> None:
        def emit_nothing(
            records: Sequence[Tuple[int, str]], cache: object, context: TaskContext
        ) -> Iterator[Pair]:
            return iter(())

        db = TransactionDatabase.from_lines(["1"] * 60000)
        cluster = testutils.make_cluster(
            *(node(f"n{i}", cores=4) for i in range(1, 5)),
            cost=CostModel(startup=2.0, alpha=1.0, beta=0.0, remote_penalty=1.1),
        )
        blocks = partition_into_blocks(db, 12000)
        placement = BlockPlacement(
            holders={0: ("n1",), 1: ("n2",), 2: ("n3",), 3: ("n4",), 4: ("n2",)}
        )

        def makespan(split_lines: Optional[int] = None) -> float:
            splits = make_line_splits(db, split_lines, blocks)
            job = JobSpec(
                name="scan",
                map_fn=emit_nothing,
                reduce_fn=sum_reduce,
                input=JobInput(lines=db.lines, splits=tuple(splits)),
            )
            output, metrics = run_job(job, placement, cluster)
            self.assertEqual(output, [])
            self.assertTrue(all(task.was_local for task in metrics.tasks))
            return metrics.makespan

        by_block = makespan()
        by_5000 = makespan(5000)
        self.assertAlmostEqual(by_block / by_5000, 12000 / 5000, delta=0.24)


class ThresholdReduceTestCase(testutils.TestCase):
    def test_sum_reduce(self) -> None:
        self.assertEqual(sum_reduce((1,), [1, 1, 1], min_count=2), ((1,), 3))
        self.assertIsNone(sum_reduce((3,), [1], min_count=2))
        self.assertEqual(sum_reduce((1, 2), [2, 1]), ((1, 2), 3))

    def test_threshold_reduce_in_a_job(self) -> None:
        cluster = testutils.heterogeneous_cluster()
        spec_input, blocks = job_input(testutils.fixture_db4(), 2)
        job = JobSpec(
            name="threshold",
            map_fn=one_itemset_map,
            reduce_fn=partial(sum_reduce, min_count=3),
            input=spec_input,
            reducers=2,
        )
        output, _ = run_job(job, place(blocks, cluster), cluster)
        self.assertEqual(output, [((1,), 3), ((2,), 3)])
