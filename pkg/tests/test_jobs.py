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
from typing import Dict, List, Union

import opentracing
import prometheus_client

from apriori_mr.candidates import StoreVariant, build_store
from apriori_mr.dataset import TransactionDatabase, WeightedTransaction
from apriori_mr.exceptions import ConfigException
from apriori_mr.itemsets import FrequentLevel, Itemset
from apriori_mr.jobs import (
    KItemsetCache,
    MiningConfig,
    MiningResult,
    filter_transaction,
    ft_map,
    k_itemset_map,
    one_itemset_map,
    run_apriori,
)
from apriori_mr.oracle import brute_force_frequent, support_of
from apriori_mr.runtime.job import TaskContext

from tests import testutils

DB4_L1 = {(1,): 3, (2,): 3, (3,): 2, (4,): 2}
DB4_L2 = {(1, 2): 2, (1, 3): 2, (2, 4): 2}


def records(*lines: str) -> list:
    return list(enumerate(lines, start=1))


def generations() -> float:
    return prometheus_client.REGISTRY.get_sample_value(
        "apriori_mr_candidate_generations_total"
    )


def mine(
    db: TransactionDatabase, min_support: Union[int, float] = 2, **kwargs: object
) -> MiningResult:
    config = MiningConfig(min_support=min_support, **kwargs)  # type: ignore[arg-type]
    return run_apriori(db, config, testutils.heterogeneous_cluster())


class MiningConfigTestCase(testutils.TestCase):
    def test_min_count(self) -> None:
        self.assertEqual(MiningConfig(min_support=2).min_count(4), 2)
        self.assertEqual(MiningConfig(min_support=0.5).min_count(4), 2)
        self.assertEqual(MiningConfig(min_support=0.3).min_count(10), 3)
        self.assertEqual(MiningConfig(min_support=0.01).min_count(4), 1)
        self.assertEqual(MiningConfig(min_support=1.0).min_count(7), 7)

    def test_invalid_min_support(self) -> None:
        for bad in (0, -1, 0.0, 1.5, True):
            self.assertRaises(ConfigException, MiningConfig, min_support=bad)


class MapFunctionTestCase(testutils.TestCase):
    def test_one_itemset_map(self) -> None:
        context = TaskContext("m")
        self.assertEqual(
            list(one_itemset_map(records("1 2 3"), None, context)),
            [((1,), 1), ((2,), 1), ((3,), 1)],
        )
        self.assertEqual(list(one_itemset_map(records(""), None, context)), [])
        self.assertEqual(
            list(one_itemset_map(records("1 2", "2"), None, context)),
            [((1,), 1), ((2,), 1), ((2,), 1)],
        )

    def test_filter_transaction(self) -> None:
        l1 = build_store([(1,), (2,), (4,)], StoreVariant.TRIE)
        self.assertEqual(filter_transaction(l1, (1, 3, 4, 9)), (1, 4))
        self.assertEqual(filter_transaction(l1, (3, 5)), ())
        self.assertEqual(filter_transaction(l1, (1, 2)), (1, 2))

    def test_ft_map_on_db4(self) -> None:
        l1 = build_store([(1,), (2,)], StoreVariant.HASH_TABLE_TRIE)
        context = TaskContext("m")
        emitted = list(ft_map(records("1 2 3", "1 2 4", "1 3", "2 4"), l1, context))
        self.assertEqual(emitted, [((1, 2), 1), ((1, 2), 1), ((1,), 1), ((2,), 1)])
        self.assertEqual(context.get("dropped_transactions"), 0)

    def test_ft_map_drops_empty_transactions(self) -> None:
        context = TaskContext("m")
        empty = build_store([], StoreVariant.TRIE)
        self.assertEqual(list(ft_map(records("3 4", "5"), empty, context)), [])
        self.assertEqual(context.get("dropped_transactions"), 2)

    def test_k_itemset_map_weighted(self) -> None:
        cache = KItemsetCache(
            prev=FrequentLevel(1, {(1,): 2, (2,): 2}),
            variant=StoreVariant.TRIE,
            weighted=True,
        )
        context = TaskContext("m")
        self.assertEqual(
            list(k_itemset_map(records("1 2 2", "3 5 1"), cache, context)),
            [((1, 2), 2)],
        )
        self.assertEqual(context.get("apriori_gen_calls"), 1)
        self.assertEqual(context.get("candidates"), 1)

    def test_k_itemset_map_raw_db4(self) -> None:
        cache = KItemsetCache(
            prev=FrequentLevel(1, DB4_L1),
            variant=StoreVariant.HASH_TREE,
            weighted=False,
        )
        context = TaskContext("m")
        counts: Dict[Itemset, int] = {}
        for candidate, weight in k_itemset_map(
            records("1 2 3", "1 2 4", "1 3", "2 4"), cache, context
        ):
            counts[candidate] = counts.get(candidate, 0) + weight
        self.assertEqual(
            counts, {(1, 2): 2, (1, 3): 2, (1, 4): 1, (2, 3): 1, (2, 4): 2}
        )
        self.assertEqual(context.get("candidates"), 6)

    def test_candidates_are_generated_once_per_task(self) -> None:
        cache = KItemsetCache(
            prev=FrequentLevel(1, {(1,): 5, (2,): 5, (3,): 5}),
            variant=StoreVariant.TRIE,
            weighted=False,
        )
        before = generations()
        for line_count in (0, 1, 50):
            context = TaskContext("m")
            list(k_itemset_map(records(*(["1 2 3"] * line_count)), cache, context))
            self.assertEqual(context.get("apriori_gen_calls"), 1)
        self.assertEqual(generations() - before, 3)


class RunAprioriTestCase(testutils.TestCase):
    def test_db4_levels(self) -> None:
        result = mine(testutils.fixture_db4())
        self.assertEqual([level.k for level in result.levels], [1, 2, 3])
        self.assertEqual(result.levels[0].entries, DB4_L1)
        self.assertEqual(result.levels[1].entries, DB4_L2)
        self.assertEqual(result.levels[2].entries, {})
        self.assertEqual(
            [job.name for job in result.jobs], ["job1", "job2-k2", "job2-k3"]
        )
        self.assertAlmostEqual(
            result.total_makespan, sum(job.makespan for job in result.jobs)
        )

    def test_db4_filtered_transactions(self) -> None:
        result = mine(
            testutils.fixture_db4(),
            variant=StoreVariant.HASH_TABLE_TRIE,
            use_filtered_transactions=True,
        )
        self.assertEqual(result.levels[0].entries, DB4_L1)
        self.assertEqual(result.levels[1].entries, DB4_L2)
        self.assertEqual(
            [job.name for job in result.jobs],
            ["job1", "jobft", "job2-k2", "job2-k3"],
        )

    def test_filtered_transactions_of_db4(self) -> None:
        result = mine(testutils.fixture_db4(), 3, use_filtered_transactions=True)
        filtered = result.filtered_transactions
        assert filtered is not None
        self.assertEqual(
            {wt.items: wt.weight for wt in filtered.transactions},
            {(1, 2): 2, (1,): 1, (2,): 1},
        )
        self.assertEqual(
            result.level(2).entries, mine(testutils.fixture_db4(), 3).level(2).entries
        )
        # (1, 2) has support 2 only
        self.assertEqual(result.level(2).entries, {})

    def test_threshold_above_database(self) -> None:
        result = mine(testutils.fixture_db4(), 5, use_filtered_transactions=True)
        self.assertEqual(len(result.levels), 1)
        self.assertEqual(len(result.levels[0]), 0)
        self.assertEqual([job.name for job in result.jobs], ["job1"])

    def test_fractional_support(self) -> None:
        result = mine(testutils.fixture_db4(), 0.5)
        self.assertEqual(result.min_count, 2)
        self.assertEqual(result.levels[1].entries, DB4_L2)

    def test_empty_database_is_rejected(self) -> None:
        self.assertRaises(
            ConfigException, mine, TransactionDatabase.from_lines(["", " "])
        )

    def test_weighted_database_is_rejected(self) -> None:
        self.assertRaises(
            ConfigException,
            mine,
            TransactionDatabase.from_weighted([WeightedTransaction((1,), 2)]),
        )

    def test_apriori_gen_once_per_level_map_task(self) -> None:
        db = testutils.random_database(random.Random(3), 40, 8)
        for split_lines in (1, 4, 40):
            result = mine(db, 2, split_lines=split_lines, block_lines=10)
            for job in result.jobs:
                if not job.name.startswith("job2"):
                    continue
                for task_id, counters in job.task_counters.items():
                    if task_id.startswith("m_"):
                        self.assertEqual(counters["apriori_gen_calls"], 1)

    def test_spans_wrap_every_job(self) -> None:
        tracer = opentracing.Tracer()
        result = run_apriori(
            testutils.fixture_db4(),
            MiningConfig(min_support=2),
            testutils.heterogeneous_cluster(),
            tracer=tracer,
        )
        self.assertEqual(len(result.jobs), 3)


class OracleEquivalenceTestCase(testutils.TestCase):
    def test_every_configuration_matches_the_oracle(self) -> None:
        rng = random.Random(20240601)
        cluster = testutils.heterogeneous_cluster(speculation=True, replication_factor=2)
        for _ in range(50):
            db = testutils.random_database(rng, max_transactions=40, universe=10)
            for min_count in (2, 3, 5):
                expected = brute_force_frequent(db, min_count).counts
                for variant in StoreVariant:
                    for use_ft in (False, True):
                        config = MiningConfig(
                            min_support=min_count,
                            variant=variant,
                            use_filtered_transactions=use_ft,
                            block_lines=8,
                            split_lines=5,
                            reducers=3,
                        )
                        result = run_apriori(db, config, cluster)
                        self.assertEqual(result.frequent_itemsets(), expected)
                        self.check_downward_closed(result)

    def test_larger_databases_match_the_oracle(self) -> None:
        rng = random.Random(20240602)
        cluster = testutils.heterogeneous_cluster(speculation=True, replication_factor=2)
        for _ in range(12):
            db = testutils.random_database(rng, max_transactions=200, universe=15)
            lowest = brute_force_frequent(db, 4).counts
            for min_count in (4, 9, 20):
                expected = {
                    itemset: count
                    for itemset, count in lowest.items()
                    if count >= min_count
                }
                for variant in StoreVariant:
                    for use_ft in (False, True):
                        config = MiningConfig(
                            min_support=min_count,
                            variant=variant,
                            use_filtered_transactions=use_ft,
                            block_lines=40,
                            split_lines=25,
                            reducers=4,
                        )
                        result = run_apriori(db, config, cluster)
                        self.assertEqual(result.frequent_itemsets(), expected)
                        self.check_downward_closed(result)

    def check_downward_closed(self, result: MiningResult) -> None:
        for lower, upper in zip(result.levels, result.levels[1:]):
            for itemset in upper.entries:
                for drop in range(len(itemset)):
                    self.assertIn(itemset[:drop] + itemset[drop + 1 :], lower)

    def test_filtered_transactions_preserve_supports(self) -> None:
        rng = random.Random(77)
        for _ in range(20):
            db = testutils.random_database(rng, max_transactions=40, universe=8)
            result = mine(db, 3, use_filtered_transactions=True)
            filtered = result.filtered_transactions
            if filtered is None:
                continue
            frequent_items = sorted(item for (item,) in result.levels[0].entries)
            with_a_frequent_item = sum(
                1
                for wt in db.transactions
                if any(item in frequent_items for item in wt.items)
            )
            self.assertLessEqual(len(filtered), with_a_frequent_item)
            self.assertEqual(
                sum(wt.weight for wt in filtered.transactions), with_a_frequent_item
            )
            pairs: List[Itemset] = [
                (a, b) for a in frequent_items for b in frequent_items if a < b
            ]
            for pair in pairs:
                self.assertEqual(support_of(pair, filtered), support_of(pair, db))
