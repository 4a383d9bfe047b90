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
from typing import Dict, List, Tuple

from apriori_mr.candidates import CandidateStore, StoreVariant
from apriori_mr.itemsets import Itemset


class HashTableTrieNode:
    __slots__ = ("children", "terminal")

    def __init__(self) -> None:
        self.children: Dict[int, "HashTableTrieNode"] = {}
        self.terminal = False


class HashTableTrieStore(CandidateStore):
    """
    Trie whose children are looked up through a hash table keyed by item id.

    Subset matching is driven by the transaction rather than by the children:
    every usable transaction item costs one dictionary lookup.
    """

    variant = StoreVariant.HASH_TABLE_TRIE

    def __init__(self, k: int):
        super().__init__(k)
        self.root = HashTableTrieNode()

    def _insert(self, itemset: Itemset) -> bool:
        node = self.root
        for item in itemset:
            child = node.children.get(item)
            if child is None:
                child = node.children[item] = HashTableTrieNode()
            node = child
        if node.terminal:
            return False
        node.terminal = True
        return True

    def contains(self, itemset: Itemset) -> bool:
        if len(itemset) != self.k:
            return False
        node = self.root
        for item in itemset:
            child = node.children.get(item)
            if child is None:
                return False
            node = child
        return node.terminal

    def subset_match(self, transaction: Itemset) -> List[Itemset]:
        out: List[Itemset] = []
        self._match(self.root, transaction, 0, (), out)
        return out

    def _match(
        self,
        node: HashTableTrieNode,
        transaction: Itemset,
        start: int,
        prefix: Itemset,
        out: List[Itemset],
    ) -> None:
        if len(prefix) == self.k:
            if node.terminal:
                out.append(prefix)
            return
        if not node.children:
            return

        last = len(transaction) - (self.k - len(prefix))
        for i in range(start, last + 1):
            item = transaction[i]
            child = node.children.get(item)
            if child is not None:
                self._match(child, transaction, i + 1, prefix + (item,), out)

    def enumerate(self) -> List[Itemset]:
        out: List[Itemset] = []
        stack: List[Tuple[HashTableTrieNode, Itemset]] = [(self.root, ())]
        while stack:
            node, prefix = stack.pop()
            if node.terminal:
                out.append(prefix)
            for item, child in node.children.items():
                stack.append((child, prefix + (item,)))
        out.sort()
        return out
