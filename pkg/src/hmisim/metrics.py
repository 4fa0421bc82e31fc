"""Trial indicators, timeline traces, aggregation, and file formats.

Four indicators summarize a trial, each as a percentage:

* ``eyes_off_pct`` — share of trial time spent looking away from the road:
  the sum of gaze + duration + gaze over completed visual tasks located on
  off-road elements (head-up display counts as on-road; non-visual tasks
  never contribute).
* ``cog_overload_pct`` — share of time the total cognitive demand (active
  plus queued) exceeds capacity; a machine task aborted on the cognitive
  cap adds its full occupancy time as a point contribution.
* ``perc_overload_pct`` — the perceptual analogue; channel-conflict aborts
  and channel-conflict queuing count as perceptual contention.
* ``sa_avg_pct`` — time average of situation awareness.

The timeline trace is the replayable record of a trial: one record per
fired or synchronous event carrying the event payload and a post-event
snapshot (active workload sums, awareness, automation level, road cap).
Exports are line-delimited JSON with a stable field order.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable

from .attention import CAP_TOLERANCE, CAPACITY, AbortReason

METRICS_CSV_HEADER = ["seed", "eyes_off_pct", "cog_overload_pct", "perc_overload_pct", "sa_avg_pct"]
SUMMARY_CSV_HEADER = ["config", "trials"] + METRICS_CSV_HEADER[1:]
SCATTER_CSV_HEADER = ["config"] + METRICS_CSV_HEADER
COUNTS_CSV_HEADER = ["task", "triggered", "executed", "queued", "aborted"]
PAIRED_CSV_HEADER = ["seed", "d_eyes_off_pct", "d_cog_overload_pct", "d_perc_overload_pct", "d_sa_avg_pct"]
TIMELINE_CSV_HEADER = [
    "time", "kind", "task", "cognitive_sum", "perceptual_sum", "awareness", "level", "road_max",
]

#: Trace record tags beyond the calendar event kinds.
RECORD_INIT = "init"
RECORD_TASK_QUEUED = "task-queued"
RECORD_TRIAL_END = "trial-end"


@dataclass
class TaskCounts:
    triggered: int = 0
    executed: int = 0
    queued: int = 0
    aborted: int = 0


@dataclass
class TrialMetrics:
    seed: int
    trial_length: float
    eyes_off_fraction: float
    cognitive_overload_fraction: float
    perceptual_overload_fraction: float
    sa_average: float
    eyes_off_seconds: float
    cognitive_overload_seconds: float
    perceptual_overload_seconds: float
    per_task_counts: dict[str, TaskCounts] = field(default_factory=dict)

    def indicator_row(self) -> list[float]:
        return [
            self.eyes_off_fraction,
            self.cognitive_overload_fraction,
            self.perceptual_overload_fraction,
            self.sa_average,
        ]


@dataclass(frozen=True)
class TraceRecord:
    time: float
    kind: str
    payload: dict[str, Any]
    cognitive_sum: float
    perceptual_sum: float
    awareness: float
    level: int
    road_max: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "time": self.time,
                "kind": self.kind,
                "payload": self.payload,
                "cognitive_sum": self.cognitive_sum,
                "perceptual_sum": self.perceptual_sum,
                "awareness": self.awareness,
                "level": self.level,
                "road_max": self.road_max,
            },
            ensure_ascii=False,
        )


def eyes_off_contribution(total_time: float, perception_type: str, on_road: bool) -> float:
    """Seconds of eyes-off-road one completed task execution adds."""
    if perception_type != "visual" or on_road:
        return 0.0
    return total_time


@dataclass(frozen=True)
class OverloadSample:
    """Demand state holding from ``time`` until the next sample."""

    time: float
    cognitive_demand: float
    perceptual_demand: float
    channel_conflict_queued: bool


def accrue_overload(
    samples: Iterable[OverloadSample],
    abort_events: Iterable[tuple[AbortReason, float]],
    t_end: float,
) -> tuple[float, float]:
    """Integrate overload seconds from piecewise-constant demand samples.

    ``abort_events`` are (reason, occupancy seconds) point contributions
    from machine aborts: cognitive-cap aborts add to the cognitive total,
    perceptual-cap and channel-conflict aborts to the perceptual total.
    """
    cognitive = 0.0
    perceptual = 0.0
    ordered = list(samples)
    for current, nxt in zip(ordered, ordered[1:] + [None]):
        until = t_end if nxt is None else min(nxt.time, t_end)
        dt = max(until - current.time, 0.0)
        if current.cognitive_demand > CAPACITY + CAP_TOLERANCE:
            cognitive += dt
        if current.perceptual_demand > CAPACITY + CAP_TOLERANCE or current.channel_conflict_queued:
            perceptual += dt
    for reason, seconds in abort_events:
        if reason is AbortReason.COGNITIVE:
            cognitive += seconds
        else:  # perceptual cap and channel conflicts are perceptual contention
            perceptual += seconds
    return cognitive, perceptual


class MetricsCollector:
    """Accumulates indicators and the trace while a trial runs.

    The orchestrator calls :meth:`advance` with the event time before
    touching any state (integrating the signals that held since the last
    record), then applies its changes, then :meth:`record`s them; each
    record refreshes the signal cache from the provider callables.
    """

    def __init__(
        self,
        trial_length: float,
        demand_provider: Callable[[], tuple[float, float]],
        conflict_provider: Callable[[], bool],
        awareness_provider: Callable[[], float],
        level_provider: Callable[[], int],
        road_max_provider: Callable[[], int],
        active_sums_provider: Callable[[], tuple[float, float]],
    ) -> None:
        self.trial_length = trial_length
        self._demand = demand_provider
        self._conflict = conflict_provider
        self._awareness = awareness_provider
        self._level = level_provider
        self._road_max = road_max_provider
        self._active_sums = active_sums_provider
        self.records: list[TraceRecord] = []
        self.counts: dict[str, TaskCounts] = {}
        self._last_time = 0.0
        self._signals = (0.0, 0.0, False, 1.0)  # cog demand, perc demand, conflict, awareness
        self._eyes_off = 0.0
        self._cog_over = 0.0
        self._perc_over = 0.0
        self._sa_integral = 0.0
        self._refresh()

    def _refresh(self) -> None:
        cog, perc = self._demand()
        self._signals = (cog, perc, self._conflict(), self._awareness())

    def advance(self, now: float) -> None:
        dt = now - self._last_time
        if dt <= 0:
            return
        cog, perc, conflict, aware = self._signals
        if cog > CAPACITY + CAP_TOLERANCE:
            self._cog_over += dt
        if perc > CAPACITY + CAP_TOLERANCE or conflict:
            self._perc_over += dt
        self._sa_integral += aware * dt
        self._last_time = now

    def record(self, now: float, kind: str, payload: dict[str, Any]) -> TraceRecord:
        self._refresh()
        active_cog, active_perc = self._active_sums()
        rec = TraceRecord(
            time=now,
            kind=kind,
            payload=payload,
            cognitive_sum=active_cog,
            perceptual_sum=active_perc,
            awareness=self._signals[3],
            level=self._level(),
            road_max=self._road_max(),
        )
        self.records.append(rec)
        return rec

    # -- point accruals -------------------------------------------------------

    def add_eyes_off(self, seconds: float) -> None:
        self._eyes_off += seconds

    def add_abort(self, reason: AbortReason, occupancy_seconds: float) -> None:
        if reason is AbortReason.COGNITIVE:
            self._cog_over += occupancy_seconds
        else:
            self._perc_over += occupancy_seconds

    def count(self, task_name: str) -> TaskCounts:
        counts = self.counts.get(task_name)
        if counts is None:
            counts = self.counts[task_name] = TaskCounts()
        return counts

    # -- finalization ----------------------------------------------------------

    def finalize(self, seed: int) -> TrialMetrics:
        self.advance(self.trial_length)
        length = self.trial_length
        return TrialMetrics(
            seed=seed,
            trial_length=length,
            eyes_off_fraction=100.0 * self._eyes_off / length,
            cognitive_overload_fraction=min(100.0, 100.0 * self._cog_over / length),
            perceptual_overload_fraction=min(100.0, 100.0 * self._perc_over / length),
            sa_average=100.0 * self._sa_integral / length,
            eyes_off_seconds=self._eyes_off,
            cognitive_overload_seconds=self._cog_over,
            perceptual_overload_seconds=self._perc_over,
            per_task_counts=self.counts,
        )


# ---------------------------------------------------------------------------
# aggregation

def median_low(values: list[float]) -> float:
    """Median; for even counts the lower of the two middle values."""
    if not values:
        raise ValueError("median of an empty list")
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


@dataclass
class AggregateSummary:
    trials: int
    medians: dict[str, float]
    per_task_totals: dict[str, TaskCounts]
    scatter: list[list[float]]  # one row per trial: seed + four indicators


def aggregate(trials: list[TrialMetrics]) -> AggregateSummary:
    if not trials:
        raise ValueError("aggregate needs at least one trial")
    medians = {
        "eyes_off_pct": median_low([t.eyes_off_fraction for t in trials]),
        "cog_overload_pct": median_low([t.cognitive_overload_fraction for t in trials]),
        "perc_overload_pct": median_low([t.perceptual_overload_fraction for t in trials]),
        "sa_avg_pct": median_low([t.sa_average for t in trials]),
    }
    totals: dict[str, TaskCounts] = {}
    for trial in trials:
        for name, counts in trial.per_task_counts.items():
            into = totals.setdefault(name, TaskCounts())
            into.triggered += counts.triggered
            into.executed += counts.executed
            into.queued += counts.queued
            into.aborted += counts.aborted
    scatter = [[float(t.seed), *t.indicator_row()] for t in trials]
    return AggregateSummary(trials=len(trials), medians=medians, per_task_totals=totals, scatter=scatter)


# ---------------------------------------------------------------------------
# file formats

def write_trace(records: Iterable[TraceRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(record.to_json())
            handle.write("\n")


def read_trace(path: str | Path) -> list[TraceRecord]:
    records: list[TraceRecord] = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            records.append(
                TraceRecord(
                    time=raw["time"],
                    kind=raw["kind"],
                    payload=raw["payload"],
                    cognitive_sum=raw["cognitive_sum"],
                    perceptual_sum=raw["perceptual_sum"],
                    awareness=raw["awareness"],
                    level=raw["level"],
                    road_max=raw["road_max"],
                )
            )
    return records


def _csv_writer(path: str | Path):
    handle = open(path, "w", newline="", encoding="utf-8")
    return handle, csv.writer(handle, lineterminator="\n")


def write_metrics_csv(trials: Iterable[TrialMetrics], path: str | Path) -> None:
    handle, writer = _csv_writer(path)
    with handle:
        writer.writerow(METRICS_CSV_HEADER)
        for t in trials:
            writer.writerow([t.seed, *(repr(v) for v in t.indicator_row())])


def write_counts_csv(counts: dict[str, TaskCounts], path: str | Path) -> None:
    handle, writer = _csv_writer(path)
    with handle:
        writer.writerow(COUNTS_CSV_HEADER)
        for name in sorted(counts):
            c = counts[name]
            writer.writerow([name, c.triggered, c.executed, c.queued, c.aborted])


def write_summary_csv(summaries: dict[str, AggregateSummary], path: str | Path) -> None:
    handle, writer = _csv_writer(path)
    with handle:
        writer.writerow(SUMMARY_CSV_HEADER)
        for config_name, summary in summaries.items():
            writer.writerow(
                [
                    config_name,
                    summary.trials,
                    *(repr(summary.medians[k]) for k in METRICS_CSV_HEADER[1:]),
                ]
            )


def write_scatter_csv(summaries: dict[str, AggregateSummary], path: str | Path) -> None:
    handle, writer = _csv_writer(path)
    with handle:
        writer.writerow(SCATTER_CSV_HEADER)
        for config_name, summary in summaries.items():
            for row in summary.scatter:
                writer.writerow([config_name, int(row[0]), *(repr(v) for v in row[1:])])


def write_timeline_csv(records: Iterable[TraceRecord], path: str | Path) -> None:
    """Flatten a trace into a plot-ready per-record table."""
    handle, writer = _csv_writer(path)
    with handle:
        writer.writerow(TIMELINE_CSV_HEADER)
        for r in records:
            subject = r.payload.get("task") or r.payload.get("function") or ""
            writer.writerow(
                [
                    repr(r.time),
                    r.kind,
                    subject,
                    repr(r.cognitive_sum),
                    repr(r.perceptual_sum),
                    repr(r.awareness),
                    r.level,
                    r.road_max,
                ]
            )


def write_paired_csv(
    seeds: list[int], diffs: list[tuple[float, float, float, float]], path: str | Path
) -> None:
    handle, writer = _csv_writer(path)
    with handle:
        writer.writerow(PAIRED_CSV_HEADER)
        for seed, row in zip(seeds, diffs):
            writer.writerow([seed, *(repr(v) for v in row)])
