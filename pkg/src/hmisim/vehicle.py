"""Vehicle environment: road availability timeline and automation state.

The road is a pre-generated semi-Markov timeline partitioning the trial
horizon into segments, each capping the available automation level at
0-4 (4 = autonomous driving).  The vehicle state machine tracks the
active level, the take-over-request phase, and the scripted speed; it
enforces that drivers may switch up only to an available level, that
drivers may always switch down, and that an availability drop forces the
level down to the new cap.

Where automation at the top level is about to become unavailable, two
take-over requests are scheduled ahead of the boundary: an early one
(default 60 s before) and a final one (default 10 s before), both clamped
to the start of the top-level segment and effective only if the vehicle
is actually at the top level when they fire.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .engine import EventCalendar, EventKind, SimEvent
from .driver import GroundTruth

MAX_LEVEL = 4
TOP_LEVEL = 4  # full autonomous driving

#: Ground-truth parameter names maintained by this module.
PARAM_SPEED = "speed"
PARAM_LEVEL = "automation_level"
PARAM_AD_AVAILABLE = "ad_available"
PARAM_ROAD_MAX = "road_max_level"
GROUND_TRUTH_PARAMETERS = (PARAM_SPEED, PARAM_LEVEL, PARAM_AD_AVAILABLE, PARAM_ROAD_MAX)


class TorPhase(str, Enum):
    NONE = "none"
    EARLY = "TOR60"
    FINAL = "TOR10"


@dataclass(frozen=True)
class RoadSegment:
    start: float
    end: float
    max_level: int


@dataclass(frozen=True)
class RoadTimeline:
    segments: tuple[RoadSegment, ...]
    horizon: float

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("timeline needs at least one segment")
        expected = 0.0
        for seg in self.segments:
            if seg.start != expected or seg.end <= seg.start:
                raise ValueError(f"segments must partition [0, horizon): bad segment {seg}")
            if not 0 <= seg.max_level <= MAX_LEVEL:
                raise ValueError(f"max_level outside 0..{MAX_LEVEL}: {seg}")
            expected = seg.end
        if expected != self.horizon:
            raise ValueError(f"segments end at {expected}, horizon is {self.horizon}")

    def max_level_at(self, t: float) -> int:
        starts = [seg.start for seg in self.segments]
        index = bisect.bisect_right(starts, t) - 1
        return self.segments[max(index, 0)].max_level


@dataclass(frozen=True)
class DwellParams:
    mean: float
    minimum: float = 0.0
    maximum: float = math.inf


@dataclass(frozen=True)
class RoadProcessParams:
    initial_level: int
    dwell: dict[int, DwellParams]
    transitions: dict[int, dict[int, float]]


def generate_timeline(
    params: RoadProcessParams, stream: np.random.Generator, horizon: float
) -> RoadTimeline:
    """Draw a semi-Markov availability timeline covering [0, horizon).

    Dwell times are exponential with the configured mean, clamped to
    [minimum, maximum]; a level with no outgoing transitions is absorbing.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    segments: list[RoadSegment] = []
    level = params.initial_level
    t = 0.0
    while t < horizon:
        dwell = params.dwell[level]
        weights = params.transitions.get(level) or {}
        if not weights:
            segments.append(RoadSegment(t, horizon, level))  # absorbing state
            break
        draw = float(stream.exponential(dwell.mean))
        duration = min(max(draw, dwell.minimum), dwell.maximum)
        duration = max(duration, 1e-9)  # keep the partition strict
        end = min(t + duration, horizon)
        segments.append(RoadSegment(t, end, level))
        t = end
        level = _weighted_choice(weights, stream)
    return RoadTimeline(segments=tuple(segments), horizon=horizon)


def _weighted_choice(weights: dict[int, float], stream: np.random.Generator) -> int:
    items = sorted(weights.items())
    total = sum(w for _, w in items)
    u = float(stream.random()) * total
    acc = 0.0
    for level, weight in items:
        acc += weight
        if u < acc:
            return level
    return items[-1][0]


# ---------------------------------------------------------------------------
# take-over-request scheduling

@dataclass(frozen=True)
class TorPayload:
    phase: TorPhase
    boundary: float
    segment_start: float


def schedule_tor(
    timeline: RoadTimeline,
    calendar: EventCalendar,
    lead_seconds: float = 60.0,
    final_seconds: float = 10.0,
) -> list[SimEvent]:
    """Schedule early/final take-over requests before each drop out of AD.

    Request times are boundary minus lead, clamped to the AD segment start.
    """
    events: list[SimEvent] = []
    for seg, nxt in zip(timeline.segments, timeline.segments[1:]):
        if seg.max_level == TOP_LEVEL and nxt.max_level < TOP_LEVEL:
            boundary = seg.end
            for phase, lead in ((TorPhase.EARLY, lead_seconds), (TorPhase.FINAL, final_seconds)):
                at = max(boundary - lead, seg.start)
                events.append(
                    calendar.schedule(
                        at,
                        EventKind.VEHICLE_TRANSITION,
                        TorPayload(phase=phase, boundary=boundary, segment_start=seg.start),
                    )
                )
    return events


# ---------------------------------------------------------------------------
# automation state machine

@dataclass
class VehicleState:
    level: int
    tor_phase: TorPhase = TorPhase.NONE
    speed: float = 0.0


class TransitionKind(str, Enum):
    DRIVER_SWITCH_UP = "driver-switch-up"
    DRIVER_SWITCH_DOWN = "driver-switch-down"
    AVAILABILITY_DROP = "availability-drop"
    AVAILABILITY_RISE = "availability-rise"


@dataclass(frozen=True)
class TransitionEvent:
    kind: TransitionKind
    target: int | None = None  # driver switches: requested level
    new_max: int | None = None  # availability changes: new cap


@dataclass
class TransitionResult:
    granted: bool
    level_changed: bool
    previous_level: int
    level: int
    emitted: list[str] = field(default_factory=list)
    note: str = ""


@dataclass
class EventBindings:
    """Which machine tasks the cockpit emits on each vehicle event."""

    tor_early: list[str] = field(default_factory=list)
    tor_final: list[str] = field(default_factory=list)
    level_change: dict[int | str, list[str]] = field(default_factory=dict)
    availability_rise: dict[int, list[str]] = field(default_factory=dict)
    availability_drop: dict[int, list[str]] = field(default_factory=dict)

    def for_level_change(self, new_level: int) -> list[str]:
        emitted = list(self.level_change.get("any", []))
        emitted.extend(self.level_change.get(new_level, []))
        return emitted

    def for_tor(self, phase: TorPhase) -> list[str]:
        return list(self.tor_early if phase is TorPhase.EARLY else self.tor_final)


class AutomationStateMachine:
    """Holds vehicle state, mirrors it into ground truth, and resolves
    which machine tasks each state change emits."""

    def __init__(
        self,
        timeline: RoadTimeline,
        initial_level: int,
        bindings: EventBindings,
        truth: GroundTruth,
        initial_speed: float = 0.0,
    ) -> None:
        self.timeline = timeline
        self.bindings = bindings
        self.truth = truth
        first_max = timeline.segments[0].max_level
        level = min(initial_level, first_max)
        self.state = VehicleState(level=level, speed=initial_speed)
        self.current_max = first_max
        truth.set(PARAM_SPEED, initial_speed)
        truth.set(PARAM_LEVEL, level)
        truth.set(PARAM_AD_AVAILABLE, first_max == TOP_LEVEL)
        truth.set(PARAM_ROAD_MAX, first_max)

    # -- state changes -------------------------------------------------------

    def transition(self, event: TransitionEvent, now: float) -> TransitionResult:
        if event.kind is TransitionKind.DRIVER_SWITCH_UP:
            target = event.target if event.target is not None else self.current_max
            if target > self.current_max:
                return TransitionResult(
                    granted=False,
                    level_changed=False,
                    previous_level=self.state.level,
                    level=self.state.level,
                    note=f"switch-up to {target} rejected: max available is {self.current_max}",
                )
            return self._set_level(target, granted=True)
        if event.kind is TransitionKind.DRIVER_SWITCH_DOWN:
            target = event.target if event.target is not None else max(self.state.level - 1, 0)
            target = min(target, self.state.level)  # switching "down" never raises
            return self._set_level(target, granted=True)
        if event.kind in (TransitionKind.AVAILABILITY_DROP, TransitionKind.AVAILABILITY_RISE):
            assert event.new_max is not None
            return self._availability_change(event.new_max)
        raise ValueError(f"unknown transition kind {event.kind}")

    def _set_level(self, target: int, granted: bool) -> TransitionResult:
        previous = self.state.level
        if target == previous:
            return TransitionResult(
                granted=granted, level_changed=False, previous_level=previous, level=previous
            )
        self.state.level = target
        if previous == TOP_LEVEL or target != TOP_LEVEL:
            self.state.tor_phase = TorPhase.NONE
        self.truth.set(PARAM_LEVEL, target)
        return TransitionResult(
            granted=granted,
            level_changed=True,
            previous_level=previous,
            level=target,
            emitted=self.bindings.for_level_change(target),
        )

    def _availability_change(self, new_max: int) -> TransitionResult:
        old_max = self.current_max
        self.current_max = new_max
        self.truth.set(PARAM_ROAD_MAX, new_max)
        self.truth.set(PARAM_AD_AVAILABLE, new_max == TOP_LEVEL)
        emitted: list[str] = []
        if new_max > old_max:
            for lvl in sorted(self.bindings.availability_rise):
                if old_max < lvl <= new_max:
                    emitted.extend(self.bindings.availability_rise[lvl])
        elif new_max < old_max:
            for lvl in sorted(self.bindings.availability_drop, reverse=True):
                if new_max < lvl <= old_max:
                    emitted.extend(self.bindings.availability_drop[lvl])
        result = TransitionResult(
            granted=True,
            level_changed=False,
            previous_level=self.state.level,
            level=self.state.level,
            emitted=emitted,
        )
        if self.state.level > new_max:
            forced = self._set_level(new_max, granted=True)
            result.level_changed = True
            result.level = forced.level
            result.emitted = emitted + forced.emitted
            result.note = "forced downgrade"
        return result

    def on_boundary(self, segment: RoadSegment, now: float) -> TransitionResult:
        kind = (
            TransitionKind.AVAILABILITY_RISE
            if segment.max_level > self.current_max
            else TransitionKind.AVAILABILITY_DROP
        )
        return self.transition(TransitionEvent(kind=kind, new_max=segment.max_level), now)

    def on_tor(self, payload: TorPayload, now: float) -> tuple[bool, list[str]]:
        """Apply a take-over request; emits only if the vehicle is in AD."""
        if self.state.level != TOP_LEVEL:
            return False, []
        self.state.tor_phase = payload.phase
        return True, self.bindings.for_tor(payload.phase)

    def set_speed(self, value: float) -> None:
        self.state.speed = value
        self.truth.set(PARAM_SPEED, value)
