"""Trace replay: recompute rules and indicators from a trace alone.

These functions reconstruct the attention state purely from trace
records, so they double as an independent integration path for the
indicators and as an audit of the hard rules (channel exclusivity,
capacity caps, machine tasks never queued, driver tasks never aborted,
balanced start/end pairs, automation level never above the road cap,
take-over request lead times).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .attention import CAP_TOLERANCE, CAPACITY, AbortReason
from .metrics import OverloadSample, TraceRecord, accrue_overload, eyes_off_contribution


@dataclass
class _TrackedTask:
    task: str
    channel: str
    cognitive: float
    perceptual: float
    on_road: bool = False
    total_time: float = 0.0


@dataclass
class ReplayedMetrics:
    eyes_off_seconds: float
    cognitive_overload_seconds: float
    perceptual_overload_seconds: float
    sa_integral: float

    def sa_average(self, trial_length: float) -> float:
        return 100.0 * self.sa_integral / trial_length


@dataclass
class ReplayReport:
    violations: list[str] = field(default_factory=list)

    def ok(self) -> bool:
        return not self.violations


def replay_metrics(records: list[TraceRecord], trial_length: float) -> ReplayedMetrics:
    """Second, trace-only computation of the four indicators."""
    active: dict[int, _TrackedTask] = {}
    queued: dict[int, _TrackedTask] = {}
    samples: list[OverloadSample] = []
    aborts: list[tuple[AbortReason, float]] = []
    eyes_off = 0.0
    sa_integral = 0.0
    last_time = 0.0
    last_awareness = records[0].awareness if records else 1.0

    def sample(now: float) -> OverloadSample:
        active_cog = math.fsum(t.cognitive for t in active.values())
        active_perc = math.fsum(t.perceptual for t in active.values())
        busy = {t.channel for t in active.values()}
        conflict = any(w.channel in busy for w in queued.values())
        return OverloadSample(
            time=now,
            cognitive_demand=active_cog + math.fsum(t.cognitive for t in queued.values()),
            perceptual_demand=active_perc + math.fsum(t.perceptual for t in queued.values()),
            channel_conflict_queued=conflict,
        )

    for record in records:
        sa_integral += last_awareness * (record.time - last_time)
        last_time = record.time
        last_awareness = record.awareness
        payload = record.payload
        if record.kind == "task-start":
            uid = payload["instance"]
            queued.pop(uid, None)
            active[uid] = _TrackedTask(
                task=payload["task"],
                channel=payload["channel"],
                cognitive=payload["cognitive"],
                perceptual=payload["perceptual"],
                on_road=payload["on_road"],
                total_time=payload["total_time"],
            )
        elif record.kind == "task-queued":
            if not payload["coalesced"]:
                queued[payload["instance"]] = _TrackedTask(
                    task=payload["task"],
                    channel=payload["channel"],
                    cognitive=payload["cognitive"],
                    perceptual=payload["perceptual"],
                )
        elif record.kind == "task-end":
            entry = active.pop(payload["instance"], None)
            if entry is not None and payload["completed"]:
                eyes_off += eyes_off_contribution(entry.total_time, entry.channel, entry.on_road)
        elif record.kind == "task-abort":
            aborts.append((AbortReason(payload["reason"]), payload["total_time"]))
        samples.append(sample(record.time))
    sa_integral += last_awareness * (trial_length - last_time)
    cog_seconds, perc_seconds = accrue_overload(samples, aborts, trial_length)
    return ReplayedMetrics(
        eyes_off_seconds=eyes_off,
        cognitive_overload_seconds=cog_seconds,
        perceptual_overload_seconds=perc_seconds,
        sa_integral=sa_integral,
    )


def check_safety_rules(records: list[TraceRecord]) -> ReplayReport:
    """Audit the hard admission rules over a trace."""
    report = ReplayReport()
    active: dict[int, _TrackedTask] = {}
    starts = 0
    ends = 0
    last_time = -math.inf
    for record in records:
        if record.time < last_time:
            report.violations.append(f"time went backwards at {record.time}")
        last_time = record.time
        payload = record.payload
        if record.kind == "task-start":
            starts += 1
            channel = payload["channel"]
            holders = [t for t in active.values() if t.channel == channel]
            if holders:
                report.violations.append(
                    f"t={record.time}: channel {channel} double-occupied by "
                    f"{holders[0].task} and {payload['task']}"
                )
            active[payload["instance"]] = _TrackedTask(
                task=payload["task"],
                channel=channel,
                cognitive=payload["cognitive"],
                perceptual=payload["perceptual"],
            )
            cog = math.fsum(t.cognitive for t in active.values())
            perc = math.fsum(t.perceptual for t in active.values())
            if cog > CAPACITY + CAP_TOLERANCE:
                report.violations.append(
                    f"t={record.time}: active cognitive sum {cog} exceeds {CAPACITY}"
                )
            if perc > CAPACITY + CAP_TOLERANCE:
                report.violations.append(
                    f"t={record.time}: active perceptual sum {perc} exceeds {CAPACITY}"
                )
        elif record.kind == "task-queued":
            if payload["initiator"] == "machine":
                report.violations.append(f"t={record.time}: machine task {payload['task']} was queued")
        elif record.kind == "task-abort":
            if payload["initiator"] == "driver":
                report.violations.append(f"t={record.time}: driver task {payload['task']} was aborted")
        elif record.kind == "task-end":
            ends += 1
            if active.pop(payload["instance"], None) is None:
                report.violations.append(
                    f"t={record.time}: end of instance {payload['instance']} that never started"
                )
        if record.level > record.road_max:
            report.violations.append(
                f"t={record.time}: automation level {record.level} above road cap {record.road_max}"
            )
    if starts != ends:
        report.violations.append(f"unbalanced start/end records: {starts} starts, {ends} ends")
    if active:
        report.violations.append(f"{len(active)} instances never released")
    return report


def check_tor_lead_times(
    records: list[TraceRecord],
    lead_seconds: float = 60.0,
    final_seconds: float = 10.0,
    tolerance: float = 1e-9,
) -> ReplayReport:
    """Check every take-over request instant against its boundary."""
    report = ReplayReport()
    for record in records:
        if record.kind != "vehicle-transition" or record.payload.get("change") != "tor":
            continue
        boundary = record.payload["boundary"]
        segment_start = record.payload["segment_start"]
        lead = lead_seconds if record.payload["phase"] == "TOR60" else final_seconds
        expected = max(boundary - lead, segment_start)
        if abs(record.time - expected) > tolerance:
            report.violations.append(
                f"{record.payload['phase']} at t={record.time}: expected {expected} "
                f"(boundary {boundary}, segment start {segment_start})"
            )
    return report
