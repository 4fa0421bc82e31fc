"""Discrete-event simulation kernel.

A single-trial simulation runs on one :class:`EventCalendar`: a priority
queue of timestamped events ordered by ``(time, sequence)``, where the
sequence number is assigned at scheduling time.  Two events with the same
timestamp therefore fire in the order they were scheduled (FIFO), which
makes every trial fully deterministic.

Randomness is isolated in :class:`RandomStreams`: every stochastic source
(road process, each periodic driver impulse, ...) pulls from its own named
substream derived from a single 64-bit master seed.  Streams are
independent of each other and of draw interleaving, so two simulations
that share a master seed see identical draws per stream even when their
event orders differ.  This is what makes paired (common-random-numbers)
comparisons between cockpit designs work.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

import numpy as np

_SEED_MASK = 0xFFFFFFFFFFFFFFFF  # master seeds are treated as 64-bit values


class SimulationError(Exception):
    """The kernel cannot continue the current trial."""


class EventKind(str, Enum):
    """Tags for everything that can happen on the calendar / in a trace."""

    TRIGGER = "trigger"
    TASK_START = "task-start"
    TASK_END = "task-end"
    TASK_ABORT = "task-abort"
    ROAD_CHANGE = "road-change"
    VEHICLE_TRANSITION = "vehicle-transition"
    MEMORY_UPDATE = "memory-update"


@dataclass(eq=False)
class SimEvent:
    """A scheduled occurrence.  Also acts as its own cancellation handle."""

    time: float
    sequence: int
    kind: EventKind
    payload: Any = None
    cancelled: bool = field(default=False, repr=False)
    fired: bool = field(default=False, repr=False)


class EventCalendar:
    """Future event list with deterministic same-time ordering.

    Cancellation is lazy: a cancelled event stays in the heap but is
    skipped when popped.  ``pending`` reflects the live count.
    """

    def __init__(self) -> None:
        self.clock: float = 0.0
        self._heap: list[tuple[float, int, SimEvent]] = []
        self._next_sequence = 0
        self._pending = 0
        self.max_pending = 0

    @property
    def pending(self) -> int:
        return self._pending

    def schedule(self, time: float, kind: EventKind, payload: Any = None) -> SimEvent:
        """Add an event at ``time`` (>= clock, finite) and return its handle."""
        if not math.isfinite(time):
            raise SimulationError(f"cannot schedule event at non-finite time {time!r}")
        if time < self.clock:
            raise SimulationError(
                f"cannot schedule {kind.value} at t={time} before current clock t={self.clock}"
            )
        event = SimEvent(time=float(time), sequence=self._next_sequence, kind=kind, payload=payload)
        self._next_sequence += 1
        heapq.heappush(self._heap, (event.time, event.sequence, event))
        self._pending += 1
        if self._pending > self.max_pending:
            self.max_pending = self._pending
        return event

    def cancel(self, event: SimEvent) -> bool:
        """Cancel a pending event.  Returns False if already fired/cancelled."""
        if event.fired or event.cancelled:
            return False
        event.cancelled = True
        self._pending -= 1
        return True

    def run_until(self, t_end: float, dispatcher: Callable[[SimEvent], None]) -> list[SimEvent]:
        """Fire every pending event with time <= ``t_end`` (inclusive), in order.

        The dispatcher may schedule and cancel further events.  On return the
        clock sits at ``t_end``.  A dispatcher exception aborts the trial with
        a diagnostic naming the offending event.
        """
        if t_end < self.clock:
            raise SimulationError(f"run_until({t_end}) is before current clock t={self.clock}")
        fired: list[SimEvent] = []
        while self._heap and self._heap[0][0] <= t_end:
            _, _, event = heapq.heappop(self._heap)
            if event.cancelled:
                continue
            self.clock = event.time
            event.fired = True
            self._pending -= 1
            try:
                dispatcher(event)
            except SimulationError:
                raise
            except Exception as exc:
                raise SimulationError(
                    f"dispatcher failed on {event.kind.value} event at t={event.time}: {exc}"
                ) from exc
            fired.append(event)
        self.clock = t_end
        return fired


class RandomStreams:
    """Named, independently seeded random substreams.

    Each name maps to its own :class:`numpy.random.Generator`, seeded from
    ``(master_seed, sha256(name))``.  Identical master seeds reproduce
    identical per-stream draw sequences no matter how draws from different
    streams interleave.
    """

    def __init__(self, master_seed: int) -> None:
        self.master_seed = int(master_seed) & _SEED_MASK
        self._generators: dict[str, np.random.Generator] = {}

    def stream(self, name: str) -> np.random.Generator:
        generator = self._generators.get(name)
        if generator is None:
            tag = int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "big")
            seed_seq = np.random.SeedSequence([self.master_seed, tag])
            generator = np.random.default_rng(seed_seq)
            self._generators[name] = generator
        return generator

    def names(self) -> list[str]:
        return sorted(self._generators)
