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
import abc
import importlib
import logging
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Type

from apriori_mr.exceptions import ItemsetException
from apriori_mr.itemsets import Itemset

logger = logging.getLogger(__name__)


class StoreVariant(Enum):
    TRIE = "trie"
    HASH_TREE = "hashtree"
    HASH_TABLE_TRIE = "httrie"


# variant -> (module, class), imported on first use
STORE_CLASSES = {
    StoreVariant.TRIE: ("apriori_mr.triestore", "TrieStore"),
    StoreVariant.HASH_TREE: ("apriori_mr.hashtreestore", "HashTreeStore"),
    StoreVariant.HASH_TABLE_TRIE: ("apriori_mr.httriestore", "HashTableTrieStore"),
}


class CandidateStore(abc.ABC):
    """
    An immutable collection of same-length itemsets supporting membership,
    enumeration and subset matching against a transaction.

    Support counts are not kept here: they travel in the key-value pairs the
    map tasks emit.
    """

    variant: StoreVariant

    def __init__(self, k: int):
        self.k = k
        self._size = 0

    def __len__(self) -> int:
        return self._size

    @abc.abstractmethod
    def _insert(self, itemset: Itemset) -> bool:
        """
        Adds an itemset of length k.

        Returns:
            True if the itemset was not already stored.
        """
        ...

    @abc.abstractmethod
    def contains(self, itemset: Itemset) -> bool:
        """
        True iff the itemset was inserted. An itemset of the wrong length is
        simply not contained.
        """
        ...

    @abc.abstractmethod
    def subset_match(self, transaction: Itemset) -> List[Itemset]:
        """
        Returns every stored itemset contained in the (canonical) transaction,
        sorted lexicographically.
        """
        ...

    @abc.abstractmethod
    def enumerate(self) -> List[Itemset]:
        """Returns every stored itemset, sorted lexicographically."""
        ...

    @classmethod
    def build(
        cls, k: int, itemsets: Iterable[Itemset], **options: Any
    ) -> "CandidateStore":
        store = cls(k, **options)
        for itemset in itemsets:
            if store._insert(itemset):
                store._size += 1
        return store


def store_class(variant: StoreVariant) -> Type[CandidateStore]:
    module_name, class_name = STORE_CLASSES[variant]
    module = importlib.import_module(module_name)
    return getattr(module, class_name)


def build_store(
    itemsets: Sequence[Itemset],
    variant: StoreVariant,
    options: Optional[Dict[str, Any]] = None,
) -> CandidateStore:
    """
    Builds a store of the requested variant holding the distinct itemsets given.

    Args:
        itemsets: Itemsets of one common length. Duplicates are allowed.
        variant: Which structure to build.
        options: Variant-specific tuning, e.g. `fanout` and `leaf_capacity`
            for the hash tree. Ignored by variants that take no options.

    Raises:
        ItemsetException: if the itemsets have mixed lengths.
    """
    lengths = {len(itemset) for itemset in itemsets}
    if len(lengths) > 1:
        raise ItemsetException(
            f"Cannot store itemsets of mixed lengths {sorted(lengths)}"
        )
    k = lengths.pop() if lengths else 0

    clarse = store_class(variant)
    if variant is StoreVariant.HASH_TREE:
        store = clarse.build(k, itemsets, **(options or {}))
    else:
        store = clarse.build(k, itemsets)
    logger.debug("Built %s store of %d %d-itemsets", variant.value, len(store), k)
    return store
