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
Itemset algebra: canonical itemsets, subset testing and candidate generation.

An itemset is a plain tuple of non-negative ints in strictly ascending order,
so Python's tuple ordering is the lexicographic order used everywhere else.
"""
from itertools import groupby
from typing import Dict, Iterable, List, Optional, Tuple

import attr

from apriori_mr.exceptions import ItemsetException

Item = int
Itemset = Tuple[Item, ...]


def make_itemset(raw_ids: Iterable[int]) -> Itemset:
    """
    Canonicalises a collection of item ids: sorted, without duplicates.

    Raises:
        ItemsetException: if an id is negative.
    """
    ids = set(raw_ids)
    for item in ids:
        if item < 0:
            raise ItemsetException(f"Item ids must be non-negative, got {item}")
    return tuple(sorted(ids))


def is_subset(a: Itemset, b: Itemset) -> bool:
    """True iff every item of `a` occurs in `b`. Both must be canonical."""
    if len(a) > len(b):
        return False
    j = 0
    len_b = len(b)
    for item in a:
        while j < len_b and b[j] < item:
            j += 1
        if j == len_b or b[j] != item:
            return False
        j += 1
    return True


def join_step(a: Itemset, b: Itemset) -> Optional[Itemset]:
    """
    Joins two (k-1)-itemsets sharing their first k-2 items into a k-itemset,
    provided the last item of `a` is smaller than the last item of `b`.

    Returns:
        The joined itemset, or None if the pair does not join.

    Raises:
        ItemsetException: if the lengths differ or are zero.
    """
    if len(a) != len(b):
        raise ItemsetException(
            f"Cannot join itemsets of different lengths ({len(a)} and {len(b)})"
        )
    if not a:
        raise ItemsetException("Cannot join empty itemsets")
    if a[:-1] != b[:-1] or a[-1] >= b[-1]:
        return None
    return a + (b[-1],)


@attr.s(slots=True, frozen=True, auto_attribs=True)
class FrequentLevel:
    """
    The frequent itemsets of one length, with their support counts.
    """

    k: int
    entries: Dict[Itemset, int] = attr.ib(factory=dict)

    def __attrs_post_init__(self) -> None:
        for itemset in self.entries:
            if len(itemset) != self.k:
                raise ItemsetException(
                    f"Itemset {itemset} does not belong to level {self.k}"
                )

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, itemset: object) -> bool:
        return itemset in self.entries

    def itemsets(self) -> List[Itemset]:
        return sorted(self.entries)


def apriori_gen(prev: FrequentLevel) -> List[Itemset]:
    """
    Generates the candidate (k+1)-itemsets of a frequent k-level: join every
    pair of itemsets sharing a (k-1)-prefix, then prune any candidate that has
    a k-subset missing from `prev`.

    Returns:
        The candidates, sorted lexicographically.
    """
    if prev.k < 1:
        raise ItemsetException("Candidate generation needs a level with k >= 1")

    keys = prev.itemsets()
    candidates: List[Itemset] = []
    # sorted keys sharing a prefix are contiguous
    for _prefix, group in groupby(keys, key=lambda itemset: itemset[:-1]):
        siblings = list(group)
        for i, a in enumerate(siblings):
            for b in siblings[i + 1 :]:
                candidate = join_step(a, b)
                if candidate is not None and _all_subsets_frequent(candidate, prev):
                    candidates.append(candidate)
    return candidates


def _all_subsets_frequent(candidate: Itemset, prev: FrequentLevel) -> bool:
    # the two subsets dropping one of the last two items are the joined parents
    for drop in range(len(candidate) - 2):
        if candidate[:drop] + candidate[drop + 1 :] not in prev.entries:
            return False
    return True
