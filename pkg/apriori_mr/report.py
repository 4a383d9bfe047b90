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
Machine-readable run artifacts: the frequent-itemset file, per-run metrics
reports and comparative experiment reports. Every report embeds the
RunManifest of the run that produced it and is rendered with sorted keys and
durations fixed to two decimals, so equal manifests give equal bytes.
"""
import csv
import hashlib
import io
import json
import logging
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import attr

import apriori_mr
from apriori_mr.exceptions import ConfigException
from apriori_mr.itemsets import FrequentLevel
from apriori_mr.runtime.metrics import JobMetrics, NodeSpeed

logger = logging.getLogger(__name__)

TASK_CSV_FIELDS = (
    "job",
    "id",
    "kind",
    "node",
    "start",
    "end",
    "speculative",
    "killed",
    "local",
)


class ReportFormat(Enum):
    JSON = "json"
    CSV = "csv"


def file_digest(path: str) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as file_handle:
        for chunk in iter(lambda: file_handle.read(65536), b""):
            sha.update(chunk)
    return sha.hexdigest()


@attr.s(slots=True, frozen=True, auto_attribs=True)
class RunManifest:
    """Everything needed to reproduce a run."""

    config: Dict[str, Any]
    input_digest: str
    version: str = attr.ib(factory=lambda: apriori_mr.__version__)

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "input_sha256": self.input_digest,
            "version": self.version,
        }


def _duration(value: float) -> float:
    return round(value, 2)


def job_to_json_dict(metrics: JobMetrics) -> Dict[str, Any]:
    return {
        "name": metrics.name,
        "makespan": _duration(metrics.makespan),
        "counters": dict(metrics.counters),
        "tasks": [
            {
                "id": task.task_id,
                "kind": task.kind.value,
                "node": task.node,
                "start": _duration(task.start),
                "end": _duration(task.end),
                "speculative": task.is_speculative,
                "killed": task.was_killed,
                "local": task.was_local,
            }
            for task in metrics.tasks
        ],
        "per_node": [
            {
                "name": node.name,
                "kind": node.kind.value,
                "map_tasks": node.map_tasks,
                "mean_map_duration": _duration(node.mean_map_duration),
                "busy_time": _duration(node.busy_time),
            }
            for node in metrics.per_node
        ],
    }


def node_speeds_to_json(speeds: Sequence[NodeSpeed]) -> List[Dict[str, Any]]:
    return [
        {
            "name": speed.name,
            "kind": speed.kind.value,
            "map_tasks": speed.map_tasks,
            "mean_map_duration": _duration(speed.mean_map_duration),
        }
        for speed in speeds
    ]


def _dump_json(body: Dict[str, Any]) -> str:
    return json.dumps(body, sort_keys=True, indent=2) + "\n"


def _task_rows(jobs: Sequence[JobMetrics], prefix: Sequence[str] = ()) -> List[List[Any]]:
    rows = []
    for metrics in jobs:
        for task in metrics.tasks:
            rows.append(
                list(prefix)
                + [
                    metrics.name,
                    task.task_id,
                    task.kind.value,
                    task.node,
                    f"{task.start:.2f}",
                    f"{task.end:.2f}",
                    int(task.is_speculative),
                    int(task.was_killed),
                    int(task.was_local),
                ]
            )
    return rows


def _render_csv(
    manifest: RunManifest, header: Sequence[str], rows: List[List[Any]]
) -> str:
    out = io.StringIO()
    out.write("# manifest: " + json.dumps(manifest.to_json_dict(), sort_keys=True))
    out.write("\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return out.getvalue()


def render_report(
    manifest: RunManifest,
    jobs: Sequence[JobMetrics],
    report_format: ReportFormat,
    levels: Sequence[FrequentLevel] = (),
) -> str:
    """
    Renders the metrics of a chain of jobs.

    JSON carries every job with its task table and per-node aggregates, plus
    the level sizes when given. CSV is the flattened task table, one row per
    task record, under a manifest comment line.
    """
    if report_format is ReportFormat.CSV:
        return _render_csv(manifest, TASK_CSV_FIELDS, _task_rows(jobs))
    body = {
        "manifest": manifest.to_json_dict(),
        "jobs": [job_to_json_dict(metrics) for metrics in jobs],
        "total_makespan": _duration(sum(metrics.makespan for metrics in jobs)),
    }
    if levels:
        body["levels"] = [{"k": level.k, "count": len(level)} for level in levels]
    return _dump_json(body)


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as file_handle:
        file_handle.write(text)
    logger.info("Wrote %s", path)


def write_report(
    path: str,
    manifest: RunManifest,
    jobs: Sequence[JobMetrics],
    report_format: ReportFormat,
    levels: Sequence[FrequentLevel] = (),
) -> None:
    write_text(path, render_report(manifest, jobs, report_format, levels))


def format_frequent_itemsets(levels: Sequence[FrequentLevel]) -> str:
    """
    One line per frequent itemset: the items ascending and space-separated, a
    TAB, then the support count. Levels in increasing k, each lexicographic.
    """
    lines = []
    for level in sorted(levels, key=lambda level: level.k):
        for itemset in level.itemsets():
            rendered = " ".join(str(item) for item in itemset)
            lines.append(f"{rendered}\t{level.entries[itemset]}\n")
    return "".join(lines)


def write_frequent_itemsets(path: str, levels: Sequence[FrequentLevel]) -> None:
    write_text(path, format_frequent_itemsets(levels))


@attr.s(slots=True, frozen=True, auto_attribs=True)
class ExperimentRun:
    """One configuration of an experiment and the jobs it ran."""

    name: str
    jobs: Sequence[JobMetrics]
    notes: Dict[str, Any] = attr.Factory(dict)

    @property
    def makespan(self) -> float:
        return sum(metrics.makespan for metrics in self.jobs)

    @property
    def speculative_launches(self) -> int:
        return sum(metrics.speculative_launches for metrics in self.jobs)


@attr.s(slots=True, frozen=True, auto_attribs=True)
class ExperimentReport:
    experiment: str
    runs: Sequence[ExperimentRun]
    manifest: RunManifest
    summary: Dict[str, Any] = attr.Factory(dict)

    def __attrs_post_init__(self) -> None:
        if not self.runs:
            raise ConfigException(f"Experiment {self.experiment} ran no configuration")

    @property
    def winner(self) -> ExperimentRun:
        # ties go to the configuration listed first
        return min(self.runs, key=lambda run: _duration(run.makespan))

    @property
    def worst(self) -> ExperimentRun:
        best = max(_duration(run.makespan) for run in self.runs)
        return next(run for run in self.runs if _duration(run.makespan) == best)

    def find(self, name: str) -> Optional[ExperimentRun]:
        return next((run for run in self.runs if run.name == name), None)

    def render(self, report_format: ReportFormat) -> str:
        if report_format is ReportFormat.CSV:
            rows = []
            for run in self.runs:
                rows.extend(_task_rows(run.jobs, prefix=(run.name,)))
            return _render_csv(self.manifest, ("configuration",) + TASK_CSV_FIELDS, rows)
        body = {
            "manifest": self.manifest.to_json_dict(),
            "experiment": self.experiment,
            "configurations": [
                {
                    "name": run.name,
                    "makespan": _duration(run.makespan),
                    "speculative_launches": run.speculative_launches,
                    "notes": run.notes,
                    "jobs": [job_to_json_dict(metrics) for metrics in run.jobs],
                }
                for run in self.runs
            ],
            "winner": self.winner.name,
            "worst": self.worst.name,
        }
        body.update(self.summary)
        return _dump_json(body)

    def summary_lines(self) -> List[str]:
        lines = [f"{self.experiment}:"]
        for run in self.runs:
            marks = []
            if run is self.winner:
                marks.append("winner")
            if run is self.worst and len(self.runs) > 1:
                marks.append("worst")
            suffix = f"  ({', '.join(marks)})" if marks else ""
            lines.append(f"  {run.name:<24} makespan {run.makespan:10.2f}{suffix}")
        for key in sorted(self.summary):
            value = self.summary[key]
            if isinstance(value, list):
                lines.append(f"  {key}:")
                lines.extend(
                    f"    {json.dumps(entry, sort_keys=True)}" for entry in value
                )
            else:
                lines.append(f"  {key}: {value}")
        return lines
