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
import argparse
import copy
import logging
import logging.config
import math
import os
import sys
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple, Union

import attr
import prometheus_client
import yaml

import apriori_mr
from apriori_mr.candidates import StoreVariant
from apriori_mr.dataset import (
    DEFAULT_BLOCK_LINES,
    TransactionDatabase,
    load_transaction_file,
    partition_into_blocks,
    synthetic_database,
)
from apriori_mr.exceptions import AprioriMrException, ConfigException
from apriori_mr.experiments import EXPERIMENTS, Workload
from apriori_mr.jobs import MiningConfig, MiningResult, run_apriori
from apriori_mr.oracle import brute_force_frequent
from apriori_mr.report import (
    ExperimentReport,
    ReportFormat,
    RunManifest,
    file_digest,
    write_frequent_itemsets,
    write_report,
    write_text,
)
from apriori_mr.runtime.cluster import (
    BlockPlacement,
    ClusterSpec,
    PlacementMode,
    get_key,
    parse_placement,
    place_blocks,
)
from apriori_mr.utils import load_structured_file

logger = logging.getLogger(__name__)

SEED_ENV = "APRIORI_MR_SEED"
CONFIG_ENV = "APRIORI_MR_CONF"

# map tasks per job when neither a block nor a split size is given
DEFAULT_MAP_TASKS = 12
# blocks of the experiment workload when no block size is given
EXPERIMENT_BLOCKS = 5
EXPERIMENT_MIN_SUPPORT = "0.05"
SYNTHETIC_TRANSACTIONS = 600
SYNTHETIC_UNIVERSE = 15
SYNTHETIC_MAX_LENGTH = 5

CONFIG_DEFAULTS: Dict[str, Any] = {
    "log": {
        "setup": {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "normal": {
                    "format": "%(asctime)s [%(process)d] "
                    "%(levelname)-5s %(name)s %(message)s"
                }
            },
            "handlers": {
                "stderr": {
                    "class": "logging.StreamHandler",
                    "formatter": "normal",
                    "stream": "ext://sys.stderr",
                }
            },
            "loggers": {
                "apriori_mr": {"handlers": ["stderr"], "level": "INFO"},
            },
        }
    },
    "metrics": {
        "prometheus": {"textfile": None},
        "sentry": {"enabled": False},
    },
    "cluster": {
        "nodes": [
            {"name": "DN1", "cores": 4, "speed": 1.0, "kind": "physical"},
            {"name": "DN2", "cores": 4, "speed": 1.0, "kind": "physical"},
            {"name": "DN3", "cores": 4, "speed": 0.67, "kind": "virtual"},
            {"name": "DN4", "cores": 4, "speed": 0.67, "kind": "virtual"},
        ],
        "replication": 3,
        "speculation": {"enabled": True, "ratio": 1.5},
        "remote_penalty": 1.1,
        "cost": {"startup": 2.0, "alpha": 1.0, "beta": 0.001},
        "seed": 0,
    },
    "mining": {
        "variant": StoreVariant.TRIE.value,
        "filtered_transactions": False,
        "combiner": True,
        "reducers": 4,
        "block_lines": None,
        "split_lines": None,
        "hash_tree": {"fanout": 8, "leaf_capacity": 16},
    },
}

CLUSTER_FIELDS = {
    "nodes",
    "replication",
    "speculation",
    "remote_penalty",
    "cost",
    "seed",
    "block_lines",
    "split_lines",
    "placement",
}


def parse_config(path: Optional[str]) -> Dict[str, Any]:
    """
    Loads the tool configuration from `path`, else from the file named by the
    APRIORI_MR_CONF environment variable. No file at all means defaults.
    """
    config_path = path or os.getenv(CONFIG_ENV)
    if not config_path:
        return {}
    try:
        with open(config_path) as file_handle:
            loaded = yaml.safe_load(file_handle)
    except FileNotFoundError:
        logger.critical(
            "Could not find configuration file!\n" "Path: %s\n" "Absolute Path: %s",
            config_path,
            os.path.realpath(config_path),
        )
        raise
    except yaml.YAMLError as e:
        raise ConfigException(f"Could not parse {config_path}: {e}") from e
    if loaded is None:
        return {}
    if not isinstance(loaded, dict):
        raise ConfigException(f"{config_path} must hold a mapping")
    return loaded


def merge_left_with_defaults(
    defaults: Dict[str, Any], loaded_config: Optional[Dict[str, Any]]
) -> Dict[str, Any]:
    """
    Merge two configurations, with one of them overriding the other.

    Args:
        defaults: A configuration of defaults
        loaded_config: A configuration, as loaded from disk.

    Returns:
        A merged configuration, with loaded_config preferred over defaults.
    """
    result = defaults.copy()

    if loaded_config is None:
        return result

    # copy defaults or override them
    for k, v in result.items():
        if isinstance(v, dict):
            if k in loaded_config:
                result[k] = merge_left_with_defaults(v, loaded_config[k])
            else:
                result[k] = copy.deepcopy(v)
        elif k in loaded_config:
            result[k] = loaded_config[k]

    # copy things with no defaults
    for k, v in loaded_config.items():
        if k not in result:
            result[k] = v

    return result


def check_config(config: Dict[str, Any]) -> None:
    """
    Lightly check the configuration and issue warnings as appropriate.

    Args:
        config: The merged configuration.
    """

    def check_section(
        section_name: str, known_keys: Set[str], cfgpart: Dict[str, Any] = config
    ) -> None:
        nonunderstood = set(cfgpart[section_name].keys()).difference(known_keys)
        if len(nonunderstood) > 0:
            logger.warning(
                f"The following configuration fields in '{section_name}' "
                f"are not understood: %s",
                nonunderstood,
            )

    nonunderstood = set(config.keys()).difference(CONFIG_DEFAULTS.keys())
    if len(nonunderstood) > 0:
        logger.warning(
            "The following configuration sections are not understood: %s", nonunderstood
        )

    check_section("log", {"setup"})
    check_section("metrics", {"prometheus", "sentry"})
    check_section("prometheus", {"textfile"}, cfgpart=config["metrics"])
    check_section("sentry", {"enabled", "dsn"}, cfgpart=config["metrics"])
    check_section("cluster", CLUSTER_FIELDS)
    check_section(
        "mining",
        {
            "variant",
            "filtered_transactions",
            "combiner",
            "reducers",
            "block_lines",
            "split_lines",
            "hash_tree",
        },
    )
    check_section("hash_tree", {"fanout", "leaf_capacity"}, cfgpart=config["mining"])


def parse_min_support(text: str) -> Union[int, float]:
    """
    An integer count (>= 1), or a fraction in (0, 1] when written with a point
    or exponent.
    """
    try:
        if any(marker in text for marker in ".eE"):
            fraction = float(text)
            if not 0 < fraction <= 1:
                raise argparse.ArgumentTypeError(
                    f"a fractional minimum support must be in (0, 1], got {text}"
                )
            return fraction
        count = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid minimum support {text!r}")
    if count < 1:
        raise argparse.ArgumentTypeError(
            f"an absolute minimum support must be >= 1, got {text}"
        )
    return count


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} is not a positive integer")
    return value


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}")
    if not 0 < value < math.inf:
        raise argparse.ArgumentTypeError(f"{text} is not a positive number")
    return value


def parse_splits(text: str) -> List[Optional[int]]:
    """`blocks,5000` -> [None, 5000]."""
    splits: List[Optional[int]] = []
    for part in text.split(","):
        part = part.strip()
        splits.append(None if part == "blocks" else positive_int(part))
    return splits


def _on_off(value: Optional[str]) -> Optional[bool]:
    return None if value is None else value == "on"


def _optional_int(raw: Dict[str, Any], key: str) -> Optional[int]:
    value = raw.get(key)
    if value is None:
        return None
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigException(f"{key} is of invalid type")
    return value


def _first(*values: Optional[Any]) -> Optional[Any]:
    return next((value for value in values if value is not None), None)


def resolve_seed(flag: Optional[int], file_seed: int) -> int:
    """Seed precedence: flag, then APRIORI_MR_SEED, then the cluster file."""
    if flag is not None:
        return flag
    env_seed = os.getenv(SEED_ENV)
    if env_seed:
        try:
            return int(env_seed)
        except ValueError:
            raise ConfigException(f"{SEED_ENV} must be an integer, got {env_seed!r}")
    return file_seed


@attr.s(slots=True, frozen=True, auto_attribs=True)
class ResolvedRun:
    config: MiningConfig
    cluster: ClusterSpec
    placement: BlockPlacement


def resolve_run(
    args: argparse.Namespace,
    config: Dict[str, Any],
    db: TransactionDatabase,
    default_blocks: Optional[int] = None,
) -> ResolvedRun:
    """
    Layers flags over the cluster file over the tool configuration.

    Without any block or split size, a mining run gets DEFAULT_MAP_TASKS line
    splits, and an experiment (`default_blocks`) that many blocks.
    """
    cluster_raw = load_structured_file(args.cluster) if args.cluster else config["cluster"]
    if not isinstance(cluster_raw, dict):
        raise ConfigException("A cluster file must hold a mapping")
    cluster = ClusterSpec.from_config(cluster_raw)
    cluster = attr.evolve(cluster, seed=resolve_seed(args.seed, cluster.seed))
    speculation = _on_off(args.speculation)
    if speculation is not None:
        cluster = attr.evolve(cluster, speculation_enabled=speculation)

    mining = config["mining"]
    block_lines = _first(
        args.block_lines,
        _optional_int(cluster_raw, "block_lines"),
        _optional_int(mining, "block_lines"),
    )
    split_lines = _first(
        args.split_lines,
        _optional_int(cluster_raw, "split_lines"),
        _optional_int(mining, "split_lines"),
    )
    if block_lines is None and split_lines is None:
        if default_blocks is not None:
            block_lines = max(1, math.ceil(db.line_count / default_blocks))
        else:
            split_lines = max(1, math.ceil(db.line_count / DEFAULT_MAP_TASKS))
    if block_lines is None:
        block_lines = DEFAULT_BLOCK_LINES

    variant_name = _first(args.variant, get_key(mining, "variant", str, "trie"))
    try:
        variant = StoreVariant(variant_name)
    except ValueError:
        raise ConfigException(f"Unknown store variant {variant_name!r}")

    hash_tree = get_key(mining, "hash_tree", dict, {})
    mining_config = MiningConfig(
        min_support=args.min_support,
        variant=variant,
        use_filtered_transactions=_first(
            _on_off(args.filtered_transactions),
            get_key(mining, "filtered_transactions", bool, False),
        ),
        use_combiner=_first(
            _on_off(args.combiner), get_key(mining, "combiner", bool, True)
        ),
        reducers=_first(args.reducers, get_key(mining, "reducers", int, 4)),
        block_lines=block_lines,
        split_lines=split_lines,
        store_options={
            "fanout": get_key(hash_tree, "fanout", int, 8),
            "leaf_capacity": get_key(hash_tree, "leaf_capacity", int, 16),
        },
    )

    blocks = partition_into_blocks(db, block_lines)
    explicit = None
    if args.placement:
        explicit = parse_placement(load_structured_file(args.placement))
    elif isinstance(cluster_raw.get("placement"), dict):
        explicit = parse_placement(cluster_raw)
    if explicit is not None:
        placement = place_blocks(
            blocks, cluster, PlacementMode.EXPLICIT, explicit=explicit
        )
    else:
        placement = place_blocks(blocks, cluster, PlacementMode.SEEDED_RANDOM)
    return ResolvedRun(mining_config, cluster, placement)


def manifest_config(run: ResolvedRun, **extra: Any) -> Dict[str, Any]:
    """The resolved knobs of a run, as embedded in its reports."""
    cluster = run.cluster
    config = {
        "mining": {
            "min_support": run.config.min_support,
            "variant": run.config.variant.value,
            "filtered_transactions": run.config.use_filtered_transactions,
            "combiner": run.config.use_combiner,
            "reducers": run.config.reducers,
            "block_lines": run.config.block_lines,
            "split_lines": run.config.split_lines,
            "store_options": run.config.store_options,
        },
        "cluster": {
            "nodes": [
                {
                    "name": node.name,
                    "cores": node.cores,
                    "speed": node.speed_factor,
                    "kind": node.kind.value,
                }
                for node in cluster.nodes
            ],
            "replication": cluster.replication_factor,
            "speculation": {
                "enabled": cluster.speculation_enabled,
                "ratio": cluster.speculation_ratio,
            },
            "remote_penalty": cluster.cost.remote_penalty,
            "cost": {
                "startup": cluster.cost.startup,
                "alpha": cluster.cost.alpha,
                "beta": cluster.cost.beta,
            },
        },
        "placement": run.placement.to_json_dict(),
        "seed": cluster.seed,
    }
    config.update(extra)
    return config


def _report_format(args: argparse.Namespace) -> ReportFormat:
    return ReportFormat(args.format)


def cmd_mine(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    db = load_transaction_file(args.input)
    run = resolve_run(args, config, db)
    result = run_apriori(db, run.config, run.cluster, run.placement)

    report_format = _report_format(args)
    output_path = args.output or f"{args.input}.frequent"
    report_path = args.report or f"{args.input}.report.{report_format.value}"
    manifest = RunManifest(manifest_config(run), file_digest(args.input))
    write_frequent_itemsets(output_path, result.levels)
    write_report(report_path, manifest, result.jobs, report_format, result.levels)

    _print_summary(result)
    if args.oracle_check:
        table = brute_force_frequent(db, result.min_count)
        if table.counts != result.frequent_itemsets():
            print("oracle: MISMATCH")
            return 1
        print("oracle: MATCH")
    return 0


def _print_summary(result: MiningResult) -> None:
    print(f"min count: {result.min_count}")
    for level in result.levels:
        print(f"L{level.k}: {len(level)}")
    for job in result.jobs:
        print(f"{job.name}: makespan {job.makespan:.2f}")
    print(f"total makespan: {result.total_makespan:.2f}")


def _experiment_workload(args: argparse.Namespace) -> Tuple[TransactionDatabase, str]:
    if args.input:
        return load_transaction_file(args.input), file_digest(args.input)
    seed = resolve_seed(args.seed, 0)
    db = synthetic_database(
        args.transactions, SYNTHETIC_UNIVERSE, SYNTHETIC_MAX_LENGTH, seed
    )
    logger.info("Generated %d synthetic transactions with seed %d", len(db), seed)
    return db, f"synthetic:{args.transactions}:{seed}"


def cmd_experiment(args: argparse.Namespace, config: Dict[str, Any]) -> int:
    db, digest = _experiment_workload(args)
    run = resolve_run(args, config, db, default_blocks=EXPERIMENT_BLOCKS)
    workload = Workload(db, run.config, run.cluster, run.placement)

    options: Dict[str, Any] = {}
    extra: Dict[str, Any] = {"experiment": args.experiment}
    if args.experiment == "speculation":
        options["straggler_speed"] = args.straggler_speed
        options["straggler_node"] = args.straggler_node
        extra["straggler_speed"] = args.straggler_speed
        extra["straggler_node"] = args.straggler_node
    elif args.experiment == "placement":
        if not args.placements:
            raise ConfigException("The placement experiment needs --placements")
        paths = [path.strip() for path in args.placements.split(",") if path.strip()]
        options["placements"] = [
            (
                os.path.splitext(os.path.basename(path))[0],
                parse_placement(load_structured_file(path)),
            )
            for path in paths
        ]
        extra["placements"] = [name for name, _ in options["placements"]]
    elif args.experiment == "split":
        splits = args.splits or [None, max(1, math.ceil(db.line_count / DEFAULT_MAP_TASKS))]
        options["splits"] = splits
        extra["splits"] = ["blocks" if size is None else size for size in splits]

    runs, summary = EXPERIMENTS[args.experiment](workload, **options)
    report = ExperimentReport(
        experiment=args.experiment,
        runs=runs,
        manifest=RunManifest(manifest_config(run, **extra), digest),
        summary=summary,
    )
    report_format = _report_format(args)
    report_path = args.report or f"{args.experiment}.report.{report_format.value}"
    write_text(report_path, report.render(report_format))
    for line in report.summary_lines():
        print(line)
    return 0


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--variant", choices=[variant.value for variant in StoreVariant]
    )
    parser.add_argument("--filtered-transactions", choices=("on", "off"))
    parser.add_argument("--combiner", choices=("on", "off"))
    parser.add_argument("--cluster", metavar="PATH", help="cluster spec file")
    parser.add_argument("--placement", metavar="PATH", help="explicit block placement")
    parser.add_argument("--block-lines", type=positive_int, metavar="N")
    parser.add_argument("--split-lines", type=positive_int, metavar="N")
    parser.add_argument("--reducers", type=positive_int, metavar="N")
    parser.add_argument("--speculation", choices=("on", "off"))
    parser.add_argument("--seed", type=int, metavar="N")
    parser.add_argument("--report", metavar="PATH")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--config", metavar="PATH", help="tool configuration (YAML)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apriori-mr",
        description="Apriori frequent-itemset mining on a simulated Hadoop cluster",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {apriori_mr.__version__}"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    mine = subparsers.add_parser("mine", help="mine the frequent itemsets of a file")
    mine.add_argument("--input", required=True, metavar="PATH")
    mine.add_argument("--min-support", required=True, type=parse_min_support)
    mine.add_argument("--output", metavar="PATH", help="frequent-itemset file")
    mine.add_argument(
        "--oracle-check",
        action="store_true",
        help="verify the result against brute-force enumeration",
    )
    _add_run_flags(mine)

    experiment = subparsers.add_parser(
        "experiment", help="compare configurations of the simulated cluster"
    )
    experiment.add_argument("experiment", choices=sorted(EXPERIMENTS))
    experiment.add_argument(
        "--input", metavar="PATH", help="transaction file (default: synthetic)"
    )
    experiment.add_argument(
        "--transactions", type=positive_int, default=SYNTHETIC_TRANSACTIONS
    )
    experiment.add_argument(
        "--min-support", type=parse_min_support, default=EXPERIMENT_MIN_SUPPORT
    )
    experiment.add_argument("--placements", metavar="PATH,PATH,...")
    experiment.add_argument("--splits", type=parse_splits, metavar="blocks,N,...")
    experiment.add_argument("--straggler-speed", type=positive_float, metavar="X")
    experiment.add_argument(
        "--straggler-node",
        metavar="NAME",
        help="node to slow down (default: the busiest node of a baseline run)",
    )
    _add_run_flags(experiment)
    return parser


def setup_observability(config: Dict[str, Any]) -> None:
    logging.config.dictConfig(config["log"]["setup"])
    logger.debug("Started logging")

    sentrycfg = config["metrics"]["sentry"]
    if sentrycfg["enabled"] is True:
        import sentry_sdk

        logger.info("Initialising Sentry")
        sentry_sdk.init(sentrycfg["dsn"])


def export_metrics(config: Dict[str, Any]) -> None:
    textfile = config["metrics"]["prometheus"]["textfile"]
    if textfile:
        prometheus_client.write_to_textfile(textfile, prometheus_client.REGISTRY)
        logger.info("Wrote metrics to %s", textfile)


COMMANDS = {"mine": cmd_mine, "experiment": cmd_experiment}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = merge_left_with_defaults(CONFIG_DEFAULTS, parse_config(args.config))
        setup_observability(config)
        check_config(config)
        status = COMMANDS[args.command](args, config)
        export_metrics(config)
    except (AprioriMrException, OSError) as e:
        print(f"apriori-mr: {e}", file=sys.stderr)
        return 1
    return status


if __name__ == "__main__":
    sys.exit(main())
