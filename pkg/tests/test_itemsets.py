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
from itertools import combinations

from apriori_mr.exceptions import ItemsetException
from apriori_mr.itemsets import (
    FrequentLevel,
    apriori_gen,
    is_subset,
    join_step,
    make_itemset,
)

from tests import testutils


def level(*itemsets: tuple) -> FrequentLevel:
    return FrequentLevel(len(itemsets[0]), {itemset: 1 for itemset in itemsets})


def brute_force_candidates(prev: FrequentLevel) -> list:
    universe = sorted({item for itemset in prev.entries for item in itemset})
    return [
        candidate
        for candidate in combinations(universe, prev.k + 1)
        if all(subset in prev for subset in combinations(candidate, prev.k))
    ]


class ItemsetTestCase(testutils.TestCase):
    def test_make_itemset_sorts_and_dedupes(self) -> None:
        self.assertEqual(make_itemset([3, 1, 2, 3]), (1, 2, 3))
        self.assertEqual(make_itemset([]), ())
        self.assertEqual(make_itemset([7]), (7,))

    def test_make_itemset_rejects_negative_ids(self) -> None:
        self.assertRaises(ItemsetException, make_itemset, [1, -2])

    def test_is_subset(self) -> None:
        self.assertTrue(is_subset((1, 3), (1, 2, 3)))
        self.assertFalse(is_subset((1, 4), (1, 2, 3)))
        self.assertTrue(is_subset((), (5, 9)))
        self.assertFalse(is_subset((1, 2, 3), (1, 2)))

    def test_is_subset_is_a_partial_order(self) -> None:
        rng = random.Random(7)
        for _ in range(300):
            a, b, c = (
                testutils.random_transaction(rng, universe=6, max_length=6)
                for _ in range(3)
            )
            self.assertTrue(is_subset(a, a))
            if is_subset(a, b) and is_subset(b, a):
                self.assertEqual(a, b)
            if is_subset(a, b) and is_subset(b, c):
                self.assertTrue(is_subset(a, c))

    def test_join_step(self) -> None:
        self.assertEqual(join_step((1, 2, 5), (1, 2, 7)), (1, 2, 5, 7))
        self.assertIsNone(join_step((1, 2, 5), (1, 3, 7)))
        self.assertIsNone(join_step((1, 2, 7), (1, 2, 5)))
        self.assertEqual(join_step((1,), (4,)), (1, 4))

    def test_join_step_rejects_bad_lengths(self) -> None:
        self.assertRaises(ItemsetException, join_step, (1, 2), (1, 2, 3))
        self.assertRaises(ItemsetException, join_step, (), ())

    def test_join_step_is_one_sided(self) -> None:
        rng = random.Random(11)
        for _ in range(300):
            a, b = testutils.random_itemsets(rng, k=3, count=2, universe=6)
            if a == b:
                continue
            joined = [join_step(a, b), join_step(b, a)]
            self.assertLessEqual(sum(1 for j in joined if j is not None), 1)

    def test_frequent_level_rejects_wrong_lengths(self) -> None:
        self.assertRaises(ItemsetException, FrequentLevel, 2, {(1,): 3})

    def test_apriori_gen_pairs(self) -> None:
        self.assertEqual(
            apriori_gen(level((1,), (2,), (3,))), [(1, 2), (1, 3), (2, 3)]
        )

    def test_apriori_gen_prunes(self) -> None:
        # (1, 2, 3) joins but (2, 3) is not frequent
        self.assertEqual(apriori_gen(level((1, 2), (1, 3), (2, 4))), [])

    def test_apriori_gen_full_lattice(self) -> None:
        prev = level((1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4))
        self.assertEqual(apriori_gen(prev), [(1, 2, 3, 4)])

    def test_apriori_gen_of_empty_level(self) -> None:
        self.assertEqual(apriori_gen(FrequentLevel(2)), [])

    def test_apriori_gen_rejects_level_zero(self) -> None:
        self.assertRaises(ItemsetException, apriori_gen, FrequentLevel(0))

    def test_apriori_gen_matches_brute_force(self) -> None:
        rng = random.Random(1234)
        for _ in range(200):
            k = rng.randint(1, 5)
            itemsets = testutils.random_itemsets(
                rng, k=k, count=rng.randint(1, 40), universe=rng.randint(k, 12)
            )
            prev = FrequentLevel(k, {itemset: 1 for itemset in itemsets})
            candidates = apriori_gen(prev)
            self.assertEqual(candidates, brute_force_candidates(prev))
            self.assertEqual(len(set(candidates)), len(candidates))
            for candidate in candidates:
                self.assertEqual(candidate, make_itemset(candidate))
