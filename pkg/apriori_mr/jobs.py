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
Apriori as a chain of simulated MapReduce jobs.

job1 counts single items. jobft, when enabled, rewrites the input as filtered
transactions (infrequent items removed, identical transactions merged into one
weighted line). job2 is then submitted once per level k >= 2, generating the
candidates of level k from level k-1 at the start of every map task and
counting them against the transactions of its split.
"""
import logging
import math
from fractions import Fraction
from functools import partial
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import attr
import opentracing
from opentracing import Tracer
from prometheus_client import Counter

from apriori_mr.candidates import CandidateStore, StoreVariant, build_store
from apriori_mr.dataset import (
    DEFAULT_BLOCK_LINES,
    TransactionDatabase,
    WeightedTransaction,
    decode_weighted_transaction,
    make_line_splits,
    parse_transaction_line,
    partition_into_blocks,
)
from apriori_mr.exceptions import ConfigException
from apriori_mr.itemsets import FrequentLevel, Itemset, apriori_gen
from apriori_mr.runtime.cluster import (
    BlockPlacement,
    ClusterSpec,
    PlacementMode,
    place_blocks,
)
from apriori_mr.runtime.job import JobInput, JobSpec, Pair, TaskContext, run_job
from apriori_mr.runtime.metrics import JobMetrics

logger = logging.getLogger(__name__)

CANDIDATE_GENERATIONS_COUNTER = Counter(
    "apriori_mr_candidate_generations",
    "Number of times candidates were generated from a frequent level",
)

Records = Sequence[Tuple[int, str]]


@attr.s(slots=True, frozen=True, auto_attribs=True)
class MiningConfig:
    """
    Attributes:
        min_support: An absolute count (int >= 1) or a fraction of the
            transactions (float in (0, 1]).
        variant: Candidate store used by the map tasks.
        use_filtered_transactions: Whether to run jobft before the job2 levels.
        use_combiner: Whether every job runs the summing combiner.
        reducers: Reduce tasks per job.
        block_lines: Lines per HDFS block.
        split_lines: Lines per input split, or None to split on blocks.
        store_options: Extra options for the candidate store (hash tree
            `fanout` and `leaf_capacity`).
    """

    min_support: Union[int, float]
    variant: StoreVariant = StoreVariant.TRIE
    use_filtered_transactions: bool = False
    use_combiner: bool = True
    reducers: int = 4
    block_lines: int = DEFAULT_BLOCK_LINES
    split_lines: Optional[int] = None
    store_options: Dict[str, Any] = attr.Factory(dict)

    def __attrs_post_init__(self) -> None:
        if isinstance(self.min_support, bool):
            raise ConfigException("min_support must be a number")
        if isinstance(self.min_support, int):
            if self.min_support < 1:
                raise ConfigException(
                    f"An absolute min_support must be >= 1, got {self.min_support}"
                )
        elif not 0 < self.min_support <= 1:
            raise ConfigException(
                f"A fractional min_support must be in (0, 1], got {self.min_support}"
            )
        if self.reducers < 1:
            raise ConfigException(f"reducers must be >= 1, got {self.reducers}")

    def min_count(self, transaction_count: int) -> int:
        """The absolute support threshold for a database of the given size."""
        if isinstance(self.min_support, int):
            return self.min_support
        # via the decimal rendering, so 0.3 of 10 is 3 and not 4
        exact = Fraction(str(self.min_support)) * transaction_count
        return max(1, math.ceil(exact))


@attr.s(slots=True, frozen=True, auto_attribs=True)
class MiningResult:
    levels: Tuple[FrequentLevel, ...]
    jobs: Tuple[JobMetrics, ...]
    min_count: int
    filtered_transactions: Optional[TransactionDatabase] = None

    @property
    def total_makespan(self) -> float:
        return sum(job.makespan for job in self.jobs)

    def frequent_itemsets(self) -> Dict[Itemset, int]:
        merged: Dict[Itemset, int] = {}
        for level in self.levels:
            merged.update(level.entries)
        return merged

    def level(self, k: int) -> FrequentLevel:
        for level in self.levels:
            if level.k == k:
                return level
        return FrequentLevel(k)


def one_itemset_map(
    records: Records, cache: Any, context: TaskContext
) -> Iterator[Pair]:
    for line_number, line in records:
        transaction = parse_transaction_line(line, line_number)
        if transaction is None:
            continue
        for item in transaction.items:
            yield (item,), 1


def sum_reduce(
    key: Itemset, values: List[int], min_count: Optional[int] = None
) -> Optional[Pair]:
    """
    Sums the values of a key. With a `min_count` (the reducer role) keys
    whose sum falls short are dropped; combiners pass none.
    """
    total = sum(values)
    if min_count is not None and total < min_count:
        return None
    return key, total


def filter_transaction(frequent_items: CandidateStore, transaction: Itemset) -> Itemset:
    """Keeps only the items of the transaction that are frequent 1-itemsets."""
    return tuple(item for item in transaction if frequent_items.contains((item,)))


def ft_map(
    records: Records, cache: CandidateStore, context: TaskContext
) -> Iterator[Pair]:
    for line_number, line in records:
        transaction = parse_transaction_line(line, line_number)
        if transaction is None:
            continue
        filtered = filter_transaction(cache, transaction.items)
        # an empty filtered transaction cannot support any candidate
        if filtered:
            yield filtered, 1
        else:
            context.increment("dropped_transactions")


@attr.s(slots=True, frozen=True, auto_attribs=True)
class KItemsetCache:
    """What a job2 map task reads from the distributed cache."""

    prev: FrequentLevel
    variant: StoreVariant
    weighted: bool
    store_options: Dict[str, Any] = attr.Factory(dict)


def k_itemset_map(
    records: Records, cache: KItemsetCache, context: TaskContext
) -> Iterator[Pair]:
    # once per task, before any line is read
    candidates = apriori_gen(cache.prev)
    CANDIDATE_GENERATIONS_COUNTER.inc()
    context.increment("apriori_gen_calls")
    context.increment("candidates", len(candidates))
    if not candidates:
        return

    store = build_store(candidates, cache.variant, cache.store_options)
    for line_number, line in records:
        if cache.weighted:
            transaction = decode_weighted_transaction(line, line_number)
        else:
            parsed = parse_transaction_line(line, line_number)
            if parsed is None:
                continue
            transaction = parsed
        for candidate in store.subset_match(transaction.items):
            yield candidate, transaction.weight


def run_apriori(
    db: TransactionDatabase,
    config: MiningConfig,
    cluster: ClusterSpec,
    placement: Optional[BlockPlacement] = None,
    tracer: Tracer = opentracing.tracer,
) -> MiningResult:
    """
    Mines every frequent itemset of a raw transaction database.

    Args:
        db: The raw transactions.
        config: Threshold, store variant and job knobs.
        cluster: The simulated cluster to run the jobs on.
        placement: Where the input blocks live. Drawn with the cluster seed
            if not given.
        tracer: Receives one span for the run and one per job.

    Raises:
        ConfigException: if the database is empty or weighted.
        JobFailedException: naming the job and task that failed.
    """
    if len(db) == 0:
        raise ConfigException("Cannot mine an empty transaction database")
    if db.weighted:
        raise ConfigException("Mining expects a raw transaction file")

    min_count = config.min_count(len(db))
    blocks = partition_into_blocks(db, config.block_lines)
    splits = make_line_splits(db, config.split_lines, blocks)
    if placement is None:
        placement = place_blocks(blocks, cluster, PlacementMode.SEEDED_RANDOM)
    raw_input = JobInput(
        lines=db.lines, splits=tuple(splits), line_numbers=db.line_numbers
    )
    combiner = sum_reduce if config.use_combiner else None
    threshold_reduce = partial(sum_reduce, min_count=min_count)

    logger.info(
        "Mining %d transactions with min count %d using %s over %d split(s)",
        len(db),
        min_count,
        config.variant.value,
        len(splits),
    )

    jobs: List[JobMetrics] = []
    with tracer.start_active_span("run_apriori") as scope:
        scope.span.set_tag("variant", config.variant.value)
        scope.span.set_tag("filtered_transactions", config.use_filtered_transactions)

        output, metrics = run_job(
            JobSpec(
                name="job1",
                map_fn=one_itemset_map,
                reduce_fn=threshold_reduce,
                input=raw_input,
                reducers=config.reducers,
                combine_fn=combiner,
            ),
            placement,
            cluster,
            tracer=tracer,
        )
        jobs.append(metrics)
        levels = [FrequentLevel(1, dict(output))]
        logger.info("L1: %d frequent itemset(s)", len(levels[0]))

        level_input = raw_input
        level_placement = placement
        weighted = False
        filtered_db: Optional[TransactionDatabase] = None
        if levels[0] and config.use_filtered_transactions:
            l1_store = build_store(
                levels[0].itemsets(), config.variant, config.store_options
            )
            output, metrics = run_job(
                JobSpec(
                    name="jobft",
                    map_fn=ft_map,
                    reduce_fn=sum_reduce,
                    input=raw_input,
                    reducers=config.reducers,
                    combine_fn=combiner,
                    cache=l1_store,
                ),
                placement,
                cluster,
                tracer=tracer,
            )
            jobs.append(metrics)
            filtered_db = TransactionDatabase.from_weighted(
                WeightedTransaction(items, count) for items, count in output
            )
            logger.info(
                "Filtered %d transactions down to %d weighted line(s)",
                len(db),
                len(filtered_db),
            )
            level_input, level_placement = _put_file(
                filtered_db, config, cluster, placement.replication_factor
            )
            weighted = True

        k = 2
        while levels[-1]:
            output, metrics = run_job(
                JobSpec(
                    name=f"job2-k{k}",
                    map_fn=k_itemset_map,
                    reduce_fn=threshold_reduce,
                    input=level_input,
                    reducers=config.reducers,
                    combine_fn=combiner,
                    cache=KItemsetCache(
                        prev=levels[-1],
                        variant=config.variant,
                        weighted=weighted,
                        store_options=config.store_options,
                    ),
                ),
                level_placement,
                cluster,
                tracer=tracer,
            )
            jobs.append(metrics)
            levels.append(FrequentLevel(k, dict(output)))
            logger.info("L%d: %d frequent itemset(s)", k, len(levels[-1]))
            k += 1

        result = MiningResult(
            levels=tuple(levels),
            jobs=tuple(jobs),
            min_count=min_count,
            filtered_transactions=filtered_db,
        )
        scope.span.set_tag("makespan", result.total_makespan)
    return result


def _put_file(
    db: TransactionDatabase,
    config: MiningConfig,
    cluster: ClusterSpec,
    replication_factor: int,
) -> Tuple[JobInput, BlockPlacement]:
    """Blocks, splits and places an intermediate file the way the input was."""
    blocks = partition_into_blocks(db, config.block_lines)
    splits = make_line_splits(db, config.split_lines, blocks)
    placement = place_blocks(
        blocks,
        cluster,
        PlacementMode.SEEDED_RANDOM,
        replication_factor=min(replication_factor, len(cluster.nodes)),
    )
    return JobInput(lines=db.lines, splits=tuple(splits)), placement
