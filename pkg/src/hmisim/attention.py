"""Admission control over the driver's attentional resources.

Three rules decide whether a task may run:

1. each of the seven attentional channels holds at most one active task;
2. the sum of active cognitive workloads stays at or below 10;
3. the sum of active perceptual workloads stays at or below 10.

A request that fails any rule is queued when driver-initiated (one queued
instance per task name; re-requests coalesce) and aborted immediately when
machine-initiated, with the first failing rule as the abort reason, checked
in the order channel -> cognitive cap -> perceptual cap.  Active tasks are
never preempted.  When a task releases, the wait queue is scanned in
priority order (priority desc, enqueue time asc) and every instance that
now fits is admitted: a blocked high-priority instance never holds back a
lower-priority one that fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .tasks import Initiator, Task
from .workload import AttentionalChannel

CAPACITY = 10.0
#: Slack on the cap comparisons so decimal workload sums (e.g. 4.6 + 5.4)
#: are not rejected or flagged over a last-bit float difference.
CAP_TOLERANCE = 1e-9


class AbortReason(str, Enum):
    CHANNEL = "channel-conflict"
    COGNITIVE = "cognitive-cap"
    PERCEPTUAL = "perceptual-cap"


@dataclass(eq=False)
class TaskInstance:
    """One concrete run (or attempted run) of a task."""

    task: Task
    uid: int
    requested_at: float
    source: str = ""
    started_at: float | None = None


@dataclass(frozen=True)
class Granted:
    start: float


@dataclass(frozen=True)
class Queued:
    position: int
    reason: AbortReason
    coalesced: bool = False


@dataclass(frozen=True)
class Aborted:
    reason: AbortReason


AdmissionOutcome = Granted | Queued | Aborted


@dataclass(frozen=True)
class LoadSnapshot:
    cognitive: float
    perceptual: float
    busy_channels: frozenset[AttentionalChannel]
    queue_length: int
    cognitive_demand: float
    perceptual_demand: float


class InconsistentStateError(RuntimeError):
    """An operation contradicts the manager's book-keeping."""


class AttentionState:
    def __init__(self) -> None:
        self._active: dict[int, TaskInstance] = {}
        self._by_channel: dict[AttentionalChannel, TaskInstance] = {}
        self._queue: list[TaskInstance] = []

    # -- load arithmetic ----------------------------------------------------

    @property
    def cognitive_sum(self) -> float:
        return math.fsum(i.task.cognitive_workload for i in self._active.values())

    @property
    def perceptual_sum(self) -> float:
        return math.fsum(i.task.perceptual_workload for i in self._active.values())

    @property
    def queue_length(self) -> int:
        return len(self._queue)

    def active_instances(self) -> list[TaskInstance]:
        return sorted(self._active.values(), key=lambda i: i.uid)

    def queued_instances(self) -> list[TaskInstance]:
        return sorted(self._queue, key=self._queue_key)

    @staticmethod
    def _queue_key(instance: TaskInstance) -> tuple[int, float, int]:
        return (-instance.task.priority, instance.requested_at, instance.uid)

    def first_failing(self, task: Task) -> AbortReason | None:
        """First admission rule the task would violate right now, if any."""
        if task.perception_type in self._by_channel:
            return AbortReason.CHANNEL
        if self.cognitive_sum + task.cognitive_workload > CAPACITY + CAP_TOLERANCE:
            return AbortReason.COGNITIVE
        if self.perceptual_sum + task.perceptual_workload > CAPACITY + CAP_TOLERANCE:
            return AbortReason.PERCEPTUAL
        return None

    # -- admission ----------------------------------------------------------

    def request(self, instance: TaskInstance, now: float) -> AdmissionOutcome:
        reason = self.first_failing(instance.task)
        if reason is None:
            self._activate(instance, now)
            return Granted(start=now)
        if instance.task.initiator is Initiator.MACHINE:
            return Aborted(reason=reason)
        existing = next(
            (q for q in self._queue if q.task.name == instance.task.name), None
        )
        if existing is not None:
            return Queued(
                position=self.queued_instances().index(existing),
                reason=reason,
                coalesced=True,
            )
        self._queue.append(instance)
        return Queued(position=self.queued_instances().index(instance), reason=reason)

    def release(self, instance: TaskInstance, now: float, admit: bool = True) -> list[TaskInstance]:
        """Free an active instance; admit every queued instance that now fits.

        Returns the admitted instances in admission (priority) order.
        ``admit=False`` skips the queue scan (used when a trial is torn down).
        """
        if instance.uid not in self._active:
            raise InconsistentStateError(
                f"release of instance {instance.uid} ({instance.task.name}) which is not active"
            )
        del self._active[instance.uid]
        holder = self._by_channel.get(instance.task.perception_type)
        if holder is not instance:
            raise InconsistentStateError(
                f"channel {instance.task.perception_type.value} not held by instance {instance.uid}"
            )
        del self._by_channel[instance.task.perception_type]
        if not admit:
            return []
        admitted: list[TaskInstance] = []
        for candidate in self.queued_instances():
            if self.first_failing(candidate.task) is None:
                self._queue.remove(candidate)
                self._activate(candidate, now)
                admitted.append(candidate)
        return admitted

    def _activate(self, instance: TaskInstance, now: float) -> None:
        if instance.task.perception_type in self._by_channel:
            raise InconsistentStateError(
                f"channel {instance.task.perception_type.value} already occupied"
            )
        instance.started_at = now
        self._active[instance.uid] = instance
        self._by_channel[instance.task.perception_type] = instance

    # -- observation ---------------------------------------------------------

    def snapshot(self) -> LoadSnapshot:
        queued_cog = math.fsum(i.task.cognitive_workload for i in self._queue)
        queued_perc = math.fsum(i.task.perceptual_workload for i in self._queue)
        cog = self.cognitive_sum
        perc = self.perceptual_sum
        return LoadSnapshot(
            cognitive=cog,
            perceptual=perc,
            busy_channels=frozenset(self._by_channel),
            queue_length=len(self._queue),
            cognitive_demand=cog + queued_cog,
            perceptual_demand=perc + queued_perc,
        )

    def queued_channel_conflict(self) -> bool:
        """True if any queued instance is currently blocked by its channel."""
        return any(
            self.first_failing(q.task) is AbortReason.CHANNEL for q in self._queue
        )
