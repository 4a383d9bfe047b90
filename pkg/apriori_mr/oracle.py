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
A deliberately naive frequent-itemset miner, used as ground truth.
"""
import logging
from itertools import combinations
from typing import Dict, List

import attr

from apriori_mr.dataset import TransactionDatabase
from apriori_mr.exceptions import OracleException
from apriori_mr.itemsets import Itemset, is_subset

logger = logging.getLogger(__name__)

MAX_UNIVERSE = 20

DB4_TRANSACTIONS = ((1, 2, 3), (1, 2, 4), (1, 3), (2, 4))


def db4() -> TransactionDatabase:
    """The four-transaction fixture database."""
    return TransactionDatabase.from_lines(
        " ".join(str(item) for item in transaction) for transaction in DB4_TRANSACTIONS
    )


def support_of(candidate: Itemset, db: TransactionDatabase) -> int:
    """The summed weight of the transactions containing the candidate."""
    return sum(wt.weight for wt in db.transactions if is_subset(candidate, wt.items))


@attr.s(slots=True, frozen=True, auto_attribs=True)
class SupportTable:
    counts: Dict[Itemset, int] = attr.Factory(dict)

    def __len__(self) -> int:
        return len(self.counts)

    def by_length(self) -> Dict[int, Dict[Itemset, int]]:
        grouped: Dict[int, Dict[Itemset, int]] = {}
        for itemset in sorted(self.counts):
            grouped.setdefault(len(itemset), {})[itemset] = self.counts[itemset]
        return grouped

    def level(self, k: int) -> Dict[Itemset, int]:
        return self.by_length().get(k, {})


def brute_force_frequent(
    db: TransactionDatabase, min_count: int, max_universe: int = MAX_UNIVERSE
) -> SupportTable:
    """
    Counts every subset of the observed item universe, up to the length of the
    longest transaction, against every transaction.

    Raises:
        OracleException: if min_count < 1 or the universe holds more than
            `max_universe` distinct items.
    """
    if min_count < 1:
        raise OracleException(f"min_count must be >= 1, got {min_count}")
    transactions = db.transactions
    universe = sorted({item for wt in transactions for item in wt.items})
    if len(universe) > max_universe:
        raise OracleException(
            f"Item universe of {len(universe)} items is too large to enumerate; "
            f"use a database with at most {max_universe} distinct items"
        )

    longest = max((len(wt.items) for wt in transactions), default=0)
    counts: Dict[Itemset, int] = {}
    for k in range(1, longest + 1):
        level: List[Itemset] = []
        for candidate in combinations(universe, k):
            support = support_of(candidate, db)
            if support >= min_count:
                counts[candidate] = support
                level.append(candidate)
        # no superset of an infrequent itemset can be frequent
        if not level:
            break
    logger.debug("Oracle found %d frequent itemset(s)", len(counts))
    return SupportTable(counts)
