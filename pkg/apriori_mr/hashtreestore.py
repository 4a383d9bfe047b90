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
from typing import Dict, List, Optional, Set

from apriori_mr.candidates import CandidateStore, StoreVariant
from apriori_mr.exceptions import ItemsetException
from apriori_mr.itemsets import Itemset, is_subset

DEFAULT_FANOUT = 8
DEFAULT_LEAF_CAPACITY = 16


class HashTreeNode:
    __slots__ = ("children", "itemsets")

    def __init__(self) -> None:
        # a node is a leaf until it is split
        self.children: Optional[Dict[int, "HashTreeNode"]] = None
        self.itemsets: List[Itemset] = []


class HashTreeStore(CandidateStore):
    """
    The classical Apriori hash tree. An interior node at depth d routes an
    itemset by `itemset[d] % fanout`; leaves hold up to `leaf_capacity`
    itemsets and are split into interior nodes when they overflow, unless the
    leaf is already at depth k.
    """

    variant = StoreVariant.HASH_TREE

    def __init__(
        self,
        k: int,
        fanout: int = DEFAULT_FANOUT,
        leaf_capacity: int = DEFAULT_LEAF_CAPACITY,
    ):
        super().__init__(k)
        if fanout < 1 or leaf_capacity < 1:
            raise ItemsetException("Hash tree fanout and leaf capacity must be >= 1")
        self.fanout = fanout
        self.leaf_capacity = leaf_capacity
        self.root = HashTreeNode()

    def _bucket(self, item: int) -> int:
        return item % self.fanout

    def _insert(self, itemset: Itemset) -> bool:
        node = self.root
        depth = 0
        while node.children is not None:
            node = node.children.setdefault(
                self._bucket(itemset[depth]), HashTreeNode()
            )
            depth += 1

        if itemset in node.itemsets:
            return False
        node.itemsets.append(itemset)
        if len(node.itemsets) > self.leaf_capacity and depth < self.k:
            self._split(node, depth)
        return True

    def _split(self, node: HashTreeNode, depth: int) -> None:
        itemsets = node.itemsets
        node.itemsets = []
        node.children = {}
        for itemset in itemsets:
            child = node.children.setdefault(
                self._bucket(itemset[depth]), HashTreeNode()
            )
            child.itemsets.append(itemset)
        for child in node.children.values():
            if len(child.itemsets) > self.leaf_capacity and depth + 1 < self.k:
                self._split(child, depth + 1)

    def contains(self, itemset: Itemset) -> bool:
        if len(itemset) != self.k:
            return False
        node: Optional[HashTreeNode] = self.root
        depth = 0
        while node is not None and node.children is not None:
            node = node.children.get(self._bucket(itemset[depth]))
            depth += 1
        return node is not None and itemset in node.itemsets

    def subset_match(self, transaction: Itemset) -> List[Itemset]:
        found: Set[Itemset] = set()
        self._match(self.root, transaction, 0, 0, found)
        return sorted(found)

    def _match(
        self,
        node: HashTreeNode,
        transaction: Itemset,
        start: int,
        depth: int,
        found: Set[Itemset],
    ) -> None:
        if node.children is None:
            for itemset in node.itemsets:
                if is_subset(itemset, transaction):
                    found.add(itemset)
            return

        last = len(transaction) - (self.k - depth)
        for i in range(start, last + 1):
            child = node.children.get(self._bucket(transaction[i]))
            if child is not None:
                self._match(child, transaction, i + 1, depth + 1, found)

    def enumerate(self) -> List[Itemset]:
        out: List[Itemset] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.children is None:
                out.extend(node.itemsets)
            else:
                stack.extend(node.children.values())
        out.sort()
        return out
