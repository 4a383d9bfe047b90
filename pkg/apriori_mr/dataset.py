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
Transaction files: parsing, line-granular blocks and input splits, and the
weighted (filtered) transaction line format.
"""
import logging
import random
from typing import Iterable, List, Optional, Sequence, Tuple

import attr

from apriori_mr.exceptions import ConfigException, InputFormatException
from apriori_mr.itemsets import Itemset, make_itemset

logger = logging.getLogger(__name__)

# stands in for a 200 KB HDFS block of a click-stream file
DEFAULT_BLOCK_LINES = 12000


@attr.s(slots=True, frozen=True, auto_attribs=True)
class WeightedTransaction:
    items: Itemset
    weight: int = attr.ib(default=1)

    @weight.validator
    def _check_weight(self, attribute: "attr.Attribute[int]", value: int) -> None:
        if value < 1:
            raise InputFormatException(f"Transaction weight must be >= 1, got {value}")


@attr.s(slots=True, frozen=True, auto_attribs=True)
class TransactionDatabase:
    """
    The non-blank lines of a transaction file, in file order, together with
    their parsed transactions. `lines[i]` is the text `transactions[i]` was
    parsed from; map tasks consume the text, as they would read it from HDFS.
    `line_numbers[i]` is the 1-based file line of `lines[i]`; empty when no
    line was skipped.
    """

    transactions: Tuple[WeightedTransaction, ...]
    lines: Tuple[str, ...]
    weighted: bool = False
    blank_lines_skipped: int = 0
    duplicate_item_lines: int = 0
    line_numbers: Tuple[int, ...] = ()

    @property
    def line_count(self) -> int:
        return len(self.lines)

    def __len__(self) -> int:
        return len(self.transactions)

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "TransactionDatabase":
        """
        Parses raw transaction lines. Blank lines are skipped and repeated
        items within a line are dropped; both are counted and logged.

        Raises:
            InputFormatException: naming the 1-based file line number of the
                first malformed line.
        """
        transactions = []
        kept_lines = []
        kept_numbers = []
        blank = 0
        duplicates = 0
        for line_number, line in enumerate(lines, start=1):
            ids = _parse_ids(line, line_number)
            if not ids:
                blank += 1
                continue
            transaction = WeightedTransaction(make_itemset(ids))
            if len(transaction.items) != len(ids):
                duplicates += 1
            transactions.append(transaction)
            kept_lines.append(line.strip())
            kept_numbers.append(line_number)

        if blank:
            logger.warning("Skipped %d blank line(s)", blank)
        if duplicates:
            logger.warning("Dropped repeated items on %d line(s)", duplicates)

        return cls(
            transactions=tuple(transactions),
            lines=tuple(kept_lines),
            blank_lines_skipped=blank,
            duplicate_item_lines=duplicates,
            line_numbers=tuple(kept_numbers) if blank else (),
        )

    @classmethod
    def from_weighted(
        cls, transactions: Iterable[WeightedTransaction]
    ) -> "TransactionDatabase":
        """Builds a weighted-transaction file, one encoded line per transaction."""
        materialized = tuple(transactions)
        return cls(
            transactions=materialized,
            lines=tuple(encode_weighted_transaction(wt) for wt in materialized),
            weighted=True,
        )


def load_transaction_file(path: str) -> TransactionDatabase:
    """Reads a raw (BMS / SPMF style) transaction file."""
    with open(path, encoding="utf-8") as file_handle:
        db = TransactionDatabase.from_lines(file_handle)
    logger.info("Loaded %d transactions from %s", len(db), path)
    return db


def _parse_ids(line: str, line_number: Optional[int]) -> List[int]:
    ids = []
    for token in line.split():
        try:
            item = int(token)
        except ValueError:
            raise InputFormatException(
                f"Non-integer token {token!r}", line_number=line_number
            )
        if item < 0:
            raise InputFormatException(
                f"Negative item id {item}", line_number=line_number
            )
        ids.append(item)
    return ids


def parse_transaction_line(
    line: str, line_number: Optional[int] = None
) -> Optional[WeightedTransaction]:
    """
    Parses one raw transaction line.

    Returns:
        The transaction with weight 1, or None if the line is blank and should
        be skipped.

    Raises:
        InputFormatException: if a token is not a non-negative integer.
    """
    ids = _parse_ids(line, line_number)
    if not ids:
        return None
    return WeightedTransaction(make_itemset(ids))


def encode_weighted_transaction(wt: WeightedTransaction) -> str:
    return " ".join(str(item) for item in wt.items + (wt.weight,))


def decode_weighted_transaction(
    line: str, line_number: Optional[int] = None
) -> WeightedTransaction:
    """
    Parses a weighted transaction line: the items followed by the weight.

    Raises:
        InputFormatException: if there are fewer than two tokens or the weight
            is below 1.
    """
    ids = _parse_ids(line, line_number)
    if len(ids) < 2:
        raise InputFormatException(
            "A weighted transaction needs at least one item and a weight",
            line_number=line_number,
        )
    weight = ids.pop()
    if weight < 1:
        raise InputFormatException(
            f"Transaction weight must be >= 1, got {weight}", line_number=line_number
        )
    return WeightedTransaction(make_itemset(ids), weight)


@attr.s(slots=True, frozen=True, auto_attribs=True)
class Block:
    """A contiguous run of lines, [start, end), placed on DataNodes as a unit."""

    block_id: int
    start: int
    end: int

    @property
    def line_count(self) -> int:
        return self.end - self.start


@attr.s(slots=True, frozen=True, auto_attribs=True)
class Split:
    """
    A contiguous run of lines, [start, end), processed by one map task. It
    belongs to the block holding its first line.
    """

    split_id: int
    start: int
    end: int
    block_id: int

    @property
    def line_count(self) -> int:
        return self.end - self.start


def _ranges(line_count: int, size: int) -> List[Tuple[int, int]]:
    return [
        (start, min(start + size, line_count)) for start in range(0, line_count, size)
    ]


def partition_into_blocks(db: TransactionDatabase, block_lines: int) -> List[Block]:
    if block_lines < 1:
        raise ConfigException(f"block_lines must be >= 1, got {block_lines}")
    return [
        Block(block_id, start, end)
        for block_id, (start, end) in enumerate(_ranges(db.line_count, block_lines))
    ]


def make_line_splits(
    db: TransactionDatabase,
    lines_per_split: Optional[int],
    blocks: Sequence[Block],
) -> List[Split]:
    """
    Cuts the file into splits of at most `lines_per_split` lines. Without a
    split size every block is its own split.

    Args:
        db: The file being split.
        lines_per_split: Split size in lines, or None for block splits.
        blocks: The blocks of `db`, used to find each split's owning block.
    """
    if lines_per_split is None:
        return [
            Split(block.block_id, block.start, block.end, block.block_id)
            for block in blocks
        ]
    if lines_per_split < 1:
        raise ConfigException(f"split_lines must be >= 1, got {lines_per_split}")

    splits = []
    for split_id, (start, end) in enumerate(_ranges(db.line_count, lines_per_split)):
        owner = next(block for block in blocks if block.start <= start < block.end)
        splits.append(Split(split_id, start, end, owner.block_id))
    return splits


def synthetic_database(
    transactions: int, universe: int, max_length: int, seed: int
) -> TransactionDatabase:
    """
    A reproducible random database: every transaction draws between 1 and
    `max_length` distinct items from `range(universe)`.
    """
    if transactions < 1 or universe < 1 or max_length < 1:
        raise ConfigException("A synthetic database needs positive dimensions")
    rng = random.Random(seed)
    lines = []
    for _ in range(transactions):
        length = rng.randint(1, min(max_length, universe))
        items = sorted(rng.sample(range(universe), length))
        lines.append(" ".join(str(item) for item in items))
    return TransactionDatabase.from_lines(lines)
