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
from apriori_mr.dataset import (
    TransactionDatabase,
    WeightedTransaction,
    decode_weighted_transaction,
    encode_weighted_transaction,
    load_transaction_file,
    make_line_splits,
    parse_transaction_line,
    partition_into_blocks,
    synthetic_database,
)
from apriori_mr.exceptions import ConfigException, InputFormatException

from tests import testutils


def lines_db(count: int) -> TransactionDatabase:
    return TransactionDatabase.from_lines(str(i % 7) for i in range(count))


class ParsingTestCase(testutils.TestCase):
    def test_parse_transaction_line(self) -> None:
        self.assertEqual(
            parse_transaction_line("3 1 2"), WeightedTransaction((1, 2, 3), 1)
        )
        self.assertEqual(parse_transaction_line("7"), WeightedTransaction((7,), 1))
        self.assertIsNone(parse_transaction_line("   "))

    def test_parse_rejects_non_integers(self) -> None:
        with self.assertRaises(InputFormatException) as cm:
            parse_transaction_line("1 a 2", line_number=3)
        self.assertEqual(cm.exception.line_number, 3)
        self.assertIn("line 3", str(cm.exception))

    def test_parse_rejects_negative_ids(self) -> None:
        self.assertRaises(InputFormatException, parse_transaction_line, "1 -2")

    def test_encode_weighted_transaction(self) -> None:
        self.assertEqual(
            encode_weighted_transaction(WeightedTransaction((1, 4), 2)), "1 4 2"
        )
        self.assertEqual(encode_weighted_transaction(WeightedTransaction((7,), 1)), "7 1")
        self.assertEqual(
            encode_weighted_transaction(WeightedTransaction((1, 2, 3), 10)),
            "1 2 3 10",
        )

    def test_decode_weighted_transaction(self) -> None:
        self.assertEqual(
            decode_weighted_transaction("1 4 2"), WeightedTransaction((1, 4), 2)
        )
        self.assertEqual(decode_weighted_transaction("7 1"), WeightedTransaction((7,), 1))
        self.assertRaises(InputFormatException, decode_weighted_transaction, "5")
        self.assertRaises(InputFormatException, decode_weighted_transaction, "5 0")

    def test_weight_must_be_positive(self) -> None:
        self.assertRaises(InputFormatException, WeightedTransaction, (1,), 0)

    def test_from_lines_tolerates_anomalies(self) -> None:
        db = TransactionDatabase.from_lines(["1 2", "", "3 3 1", "  ", "2"])
        self.assertEqual(
            [wt.items for wt in db.transactions], [(1, 2), (1, 3), (2,)]
        )
        self.assertEqual(db.lines, ("1 2", "3 3 1", "2"))
        self.assertEqual(db.line_numbers, (1, 3, 5))
        self.assertEqual(db.blank_lines_skipped, 2)
        self.assertEqual(db.duplicate_item_lines, 1)
        self.assertFalse(db.weighted)

    def test_from_lines_names_the_file_line(self) -> None:
        with self.assertRaises(InputFormatException) as cm:
            TransactionDatabase.from_lines(["1 2", "", "x"])
        self.assertEqual(cm.exception.line_number, 3)

    def test_from_weighted(self) -> None:
        db = TransactionDatabase.from_weighted(
            [WeightedTransaction((1, 2), 2), WeightedTransaction((1,), 1)]
        )
        self.assertTrue(db.weighted)
        self.assertEqual(db.lines, ("1 2 2", "1 1"))

    def test_load_transaction_file(self) -> None:
        path = self.mktemp()
        with open(path, "w") as file_handle:
            file_handle.write("1 2 3\n1 2 4\n\n1 3\n2 4\n")
        db = load_transaction_file(path)
        self.assertEqual(len(db), 4)
        self.assertEqual(db.transactions, testutils.fixture_db4().transactions)

    def test_synthetic_database_is_reproducible(self) -> None:
        first = synthetic_database(50, 10, 4, seed=3)
        self.assertEqual(first, synthetic_database(50, 10, 4, seed=3))
        self.assertEqual(len(first), 50)
        for wt in first.transactions:
            self.assertTrue(1 <= len(wt.items) <= 4)


class BlockAndSplitTestCase(testutils.TestCase):
    def test_blocks(self) -> None:
        blocks = partition_into_blocks(lines_db(10), 4)
        self.assertEqual([block.line_count for block in blocks], [4, 4, 2])
        self.assertEqual(len(partition_into_blocks(lines_db(5), 100)), 1)
        self.assertEqual(partition_into_blocks(lines_db(0), 4), [])

    def test_block_lines_must_be_positive(self) -> None:
        self.assertRaises(ConfigException, partition_into_blocks, lines_db(4), 0)

    def test_line_splits(self) -> None:
        db = lines_db(10)
        splits = make_line_splits(db, 3, partition_into_blocks(db, 4))
        self.assertEqual([split.line_count for split in splits], [3, 3, 3, 1])
        # owned by the block of their first line
        self.assertEqual([split.block_id for split in splits], [0, 0, 1, 2])

        db = lines_db(8)
        self.assertEqual(len(make_line_splits(db, 8, partition_into_blocks(db, 8))), 1)

    def test_bms_sized_input_gives_twelve_splits(self) -> None:
        db = lines_db(59602)
        blocks = partition_into_blocks(db, 12000)
        self.assertEqual(len(blocks), 5)
        self.assertEqual(len(make_line_splits(db, 5000, blocks)), 12)

    def test_block_splits(self) -> None:
        db = lines_db(10)
        blocks = partition_into_blocks(db, 4)
        splits = make_line_splits(db, None, blocks)
        self.assertEqual(
            [(s.start, s.end, s.block_id) for s in splits], [(0, 4, 0), (4, 8, 1), (8, 10, 2)]
        )

    def test_ranges_cover_the_file_once(self) -> None:
        db = lines_db(97)
        for block_lines in (1, 5, 13, 97, 200):
            blocks = partition_into_blocks(db, block_lines)
            for split_lines in (None, 1, 7, 50):
                splits = make_line_splits(db, split_lines, blocks)
                covered = [
                    line for split in splits for line in range(split.start, split.end)
                ]
                self.assertEqual(covered, list(range(97)))
            covered = [line for block in blocks for line in range(block.start, block.end)]
            self.assertEqual(covered, list(range(97)))
