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
from bisect import bisect_left
from typing import List, Optional, Tuple

from apriori_mr.candidates import CandidateStore, StoreVariant
from apriori_mr.itemsets import Itemset


class TrieNode:
    __slots__ = ("items", "children", "terminal")

    def __init__(self) -> None:
        # parallel lists, ascending by item id
        self.items: List[int] = []
        self.children: List["TrieNode"] = []
        self.terminal = False

    def child(self, item: int) -> Optional["TrieNode"]:
        index = bisect_left(self.items, item)
        if index < len(self.items) and self.items[index] == item:
            return self.children[index]
        return None

    def child_or_create(self, item: int) -> "TrieNode":
        index = bisect_left(self.items, item)
        if index < len(self.items) and self.items[index] == item:
            return self.children[index]
        node = TrieNode()
        self.items.insert(index, item)
        self.children.insert(index, node)
        return node


class TrieStore(CandidateStore):
    """
    Prefix tree over itemsets. Children of a node are kept in ascending item
    order so subset matching can walk them in step with the transaction.
    """

    variant = StoreVariant.TRIE

    def __init__(self, k: int):
        super().__init__(k)
        self.root = TrieNode()

    def _insert(self, itemset: Itemset) -> bool:
        node = self.root
        for item in itemset:
            node = node.child_or_create(item)
        if node.terminal:
            return False
        node.terminal = True
        return True

    def contains(self, itemset: Itemset) -> bool:
        if len(itemset) != self.k:
            return False
        node: Optional[TrieNode] = self.root
        for item in itemset:
            assert node is not None
            node = node.child(item)
            if node is None:
                return False
        assert node is not None
        return node.terminal

    def subset_match(self, transaction: Itemset) -> List[Itemset]:
        out: List[Itemset] = []
        self._match(self.root, transaction, 0, (), out)
        return out

    def _match(
        self,
        node: TrieNode,
        transaction: Itemset,
        start: int,
        prefix: Itemset,
        out: List[Itemset],
    ) -> None:
        depth = len(prefix)
        if depth == self.k:
            if node.terminal:
                out.append(prefix)
            return

        # the deepest transaction position that still leaves room for the
        # remaining items of a k-itemset
        last = len(transaction) - (self.k - depth)
        i = start
        for item, child in zip(node.items, node.children):
            while i <= last and transaction[i] < item:
                i += 1
            if i > last:
                break
            if transaction[i] == item:
                self._descend(item, child, transaction, i + 1, prefix, out)
                i += 1

    def _descend(
        self,
        item: int,
        child: TrieNode,
        transaction: Itemset,
        start: int,
        prefix: Itemset,
        out: List[Itemset],
    ) -> None:
        self._match(child, transaction, start, prefix + (item,), out)

    def enumerate(self) -> List[Itemset]:
        out: List[Itemset] = []
        stack: List[Tuple[TrieNode, Itemset]] = [(self.root, ())]
        while stack:
            node, prefix = stack.pop()
            if node.terminal:
                out.append(prefix)
            # reversed so the smallest child is expanded first
            for item, child in zip(reversed(node.items), reversed(node.children)):
                stack.append((child, prefix + (item,)))
        return out
