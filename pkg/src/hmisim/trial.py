"""Single-trial orchestration.

One trial wires a task configuration and a scenario onto the event
kernel: the road timeline and take-over requests are scheduled up front,
cognitive functions keep re-arming themselves, machine tasks are emitted
by vehicle events, and every task request passes through attention
admission.  Completing a task can refresh driver memory, fire a follow-up
task, and operate the automation level.  All of it is recorded as a
timeline trace and folded into the four trial indicators.

Within one completion the order is fixed: release and queue admissions,
then the memory update, then the follow-up request, then the automation
control action.  Ties on the calendar resolve by scheduling order.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import count

from . import driver as driver_mod
from .attention import Aborted, AttentionState, Granted, Queued, TaskInstance
from .engine import EventCalendar, EventKind, RandomStreams, SimEvent
from .metrics import (
    RECORD_INIT,
    RECORD_TASK_QUEUED,
    RECORD_TRIAL_END,
    MetricsCollector,
    TraceRecord,
    TrialMetrics,
    eyes_off_contribution,
)
from .scenario import Scenario
from .tasks import Configuration, ConfigurationError, Task, Violation, validate
from .scenario import cross_validate
from .vehicle import (
    AutomationStateMachine,
    RoadSegment,
    TorPayload,
    TransitionEvent,
    TransitionKind,
    generate_timeline,
    schedule_tor,
)

ROAD_STREAM = "road"


@dataclass
class TrialResult:
    metrics: TrialMetrics
    records: list[TraceRecord]


@dataclass(frozen=True)
class _SpeedChange:
    time: float
    value: float


def run_trial(
    config: Configuration,
    scenario: Scenario,
    seed: int,
    trial_length: float,
) -> TrialResult:
    """Run one fully deterministic trial and return metrics plus trace."""
    problems = [v for v in validate(config) if v.severity == "error"]
    problems += [v for v in cross_validate(scenario, config) if v.severity == "error"]
    if problems:
        raise ConfigurationError(problems)
    if trial_length <= 0:
        raise ConfigurationError(
            [Violation("error", "trial", f"trial length must be > 0, got {trial_length}")]
        )
    return _Trial(config, scenario, seed, trial_length).run()


class _Trial:
    def __init__(
        self, config: Configuration, scenario: Scenario, seed: int, trial_length: float
    ) -> None:
        self.config = config
        self.scenario = scenario
        self.seed = seed
        self.length = trial_length
        self.tasks = config.task_map()
        self.calendar = EventCalendar()
        self.streams = RandomStreams(seed)
        self._uids = count(1)

        if scenario.fixed_timeline is not None:
            self.timeline = _clip_timeline(scenario.fixed_timeline, trial_length)
        else:
            assert scenario.road_process is not None
            self.timeline = generate_timeline(
                scenario.road_process, self.streams.stream(ROAD_STREAM), trial_length
            )

        self.truth = driver_mod.GroundTruth()
        self.machine = AutomationStateMachine(
            timeline=self.timeline,
            initial_level=scenario.vehicle.initial_level,
            bindings=scenario.bindings,
            truth=self.truth,
            initial_speed=scenario.speed.initial_value(),
        )
        self.memory = driver_mod.DriverMemory()
        for name, param in scenario.awareness.items():
            if param.initial is not None:
                self.memory.initialize(name, driver_mod.discretize(param.initial, param.resolution))
            else:
                self.memory.initialize(name, driver_mod.discretize(self.truth.get(name), param.resolution))

        self.attention = AttentionState()
        self.collector = MetricsCollector(
            trial_length=trial_length,
            demand_provider=self._demand,
            conflict_provider=self.attention.queued_channel_conflict,
            awareness_provider=self._awareness,
            level_provider=lambda: self.machine.state.level,
            road_max_provider=lambda: self.machine.current_max,
            active_sums_provider=lambda: (
                self.attention.cognitive_sum,
                self.attention.perceptual_sum,
            ),
        )

        # Everything time-driven is scheduled before the clock starts:
        # road boundaries, take-over requests, the speed script chain, and
        # the first firing of every cognitive function.
        for segment in self.timeline.segments[1:]:
            self.calendar.schedule(segment.start, EventKind.ROAD_CHANGE, segment)
        schedule_tor(
            self.timeline,
            self.calendar,
            scenario.vehicle.tor_lead_seconds,
            scenario.vehicle.tor_final_seconds,
        )
        change = scenario.speed.next_change(0.0)
        if change is not None and change[0] <= trial_length:
            self.calendar.schedule(
                change[0], EventKind.VEHICLE_TRANSITION, _SpeedChange(*change)
            )
        for function in scenario.cognitive_functions:
            stream = self.streams.stream(f"cf:{function.name}")
            self.calendar.schedule(
                driver_mod.next_trigger(function, stream, 0.0), EventKind.TRIGGER, function
            )

    # -- signal providers ------------------------------------------------------

    def _demand(self) -> tuple[float, float]:
        snap = self.attention.snapshot()
        return snap.cognitive_demand, snap.perceptual_demand

    def _awareness(self) -> float:
        return driver_mod.awareness(self.memory, self.truth, self.scenario.awareness)

    # -- main loop ---------------------------------------------------------------

    def run(self) -> TrialResult:
        self.collector.record(
            0.0, RECORD_INIT, {"seed": self.seed, "trial_length": self.length}
        )
        self.calendar.run_until(self.length, self._dispatch)
        self._truncate_remaining()
        metrics = self.collector.finalize(self.seed)
        return TrialResult(metrics=metrics, records=self.collector.records)

    def _dispatch(self, event: SimEvent) -> None:
        now = event.time
        self.collector.advance(now)
        if event.kind is EventKind.TRIGGER:
            self._on_cognitive_trigger(event.payload, now)
        elif event.kind is EventKind.TASK_END:
            self._on_task_end(event.payload, now)
        elif event.kind is EventKind.ROAD_CHANGE:
            self._on_boundary(event.payload, now)
        elif event.kind is EventKind.VEHICLE_TRANSITION:
            if isinstance(event.payload, TorPayload):
                self._on_tor(event.payload, now)
            else:
                self._on_speed_change(event.payload, now)
        else:  # pragma: no cover - nothing else is put on the calendar
            raise AssertionError(f"unexpected calendar event {event.kind}")

    # -- handlers ------------------------------------------------------------------

    def _on_cognitive_trigger(self, function: driver_mod.CognitiveFunction, now: float) -> None:
        stream = self.streams.stream(f"cf:{function.name}")
        next_at = driver_mod.next_trigger(function, stream, now)
        if next_at <= self.length:
            self.calendar.schedule(next_at, EventKind.TRIGGER, function)
        enabled = self.machine.state.level in function.enabled_levels
        self.collector.record(
            now,
            EventKind.TRIGGER.value,
            {"function": function.name, "task": function.target_task, "enabled": enabled},
        )
        if enabled:
            self._request_task(function.target_task, now, source=f"cf:{function.name}")

    def _request_task(self, name: str, now: float, source: str) -> None:
        task = self.tasks.get(name)
        if task is None:
            # Bound/control names may legitimately be absent from a design.
            return
        instance = TaskInstance(task=task, uid=next(self._uids), requested_at=now, source=source)
        counts = self.collector.count(name)
        counts.triggered += 1
        outcome = self.attention.request(instance, now)
        if isinstance(outcome, Granted):
            self._start_instance(instance, now, source)
        elif isinstance(outcome, Queued):
            counts.queued += 1
            self.collector.record(
                now,
                RECORD_TASK_QUEUED,
                {
                    "task": name,
                    "instance": instance.uid,
                    "initiator": task.initiator.value,
                    "channel": task.perception_type.value,
                    "cognitive": task.cognitive_workload,
                    "perceptual": task.perceptual_workload,
                    "reason": outcome.reason.value,
                    "position": outcome.position,
                    "coalesced": outcome.coalesced,
                    "source": source,
                },
            )
        else:
            assert isinstance(outcome, Aborted)
            counts.aborted += 1
            self.collector.add_abort(outcome.reason, task.total_time())
            self.collector.record(
                now,
                EventKind.TASK_ABORT.value,
                {
                    "task": name,
                    "instance": instance.uid,
                    "initiator": task.initiator.value,
                    "reason": outcome.reason.value,
                    "total_time": task.total_time(),
                    "source": source,
                },
            )

    def _emit_bound(self, names: tuple[str, ...], now: float, source: str) -> None:
        """Emit the machine tasks bound to one vehicle event.

        Within a single emitted list, a task that another listed task
        names as its follow-up is not requested here: it rides the
        follow-up chain at the first task's completion instead.  Pointing
        one bound task's follow-up at another is therefore all it takes
        to serialize two simultaneous signals.
        """
        chained: set[str] = set()
        for name in names:
            task = self.tasks.get(name)
            if task is not None and task.triggers is not None and task.triggers in names:
                chained.add(task.triggers)
        for name in names:
            if name not in chained:
                self._request_task(name, now, source)

    def _start_instance(self, instance: TaskInstance, now: float, source: str) -> None:
        task = instance.task
        element = self.config.elements[task.location]
        self.calendar.schedule(now + task.total_time(), EventKind.TASK_END, instance)
        self.collector.record(
            now,
            EventKind.TASK_START.value,
            {
                "task": task.name,
                "instance": instance.uid,
                "initiator": task.initiator.value,
                "channel": task.perception_type.value,
                "cognitive": task.cognitive_workload,
                "perceptual": task.perceptual_workload,
                "location": task.location,
                "on_road": element.on_road,
                "total_time": task.total_time(),
                "source": source,
            },
        )

    def _on_task_end(self, instance: TaskInstance, now: float) -> None:
        task = instance.task
        admitted = self.attention.release(instance, now)
        counts = self.collector.count(task.name)
        counts.executed += 1
        element = self.config.elements[task.location]
        self.collector.add_eyes_off(
            eyes_off_contribution(task.total_time(), task.perception_type.value, element.on_road)
        )
        self.collector.record(
            now,
            EventKind.TASK_END.value,
            {
                "task": task.name,
                "instance": instance.uid,
                "completed": True,
                "started_at": instance.started_at,
            },
        )
        for waiting in admitted:
            self._start_instance(waiting, now, source=f"dequeued:{waiting.source}")
        update = driver_mod.on_task_complete(
            self.memory, self.truth, task.awareness_parameter, self.scenario.awareness, now
        )
        if update is not None:
            self.collector.record(
                now,
                EventKind.MEMORY_UPDATE.value,
                {
                    "parameter": update.parameter,
                    "value": update.value,
                    "task": task.name,
                    "instance": instance.uid,
                },
            )
        if task.triggers is not None:
            self._request_task(task.triggers, now, source=f"chain:{task.name}")
        control = self.scenario.controls.get(task.name)
        if control is not None:
            self._apply_control(task.name, control, now)

    def _apply_control(self, task_name: str, control, now: float) -> None:
        kind = (
            TransitionKind.DRIVER_SWITCH_UP
            if control.action == "switch_up"
            else TransitionKind.DRIVER_SWITCH_DOWN
        )
        result = self.machine.transition(TransitionEvent(kind=kind, target=control.target), now)
        self.collector.record(
            now,
            EventKind.VEHICLE_TRANSITION.value,
            {
                "change": "level",
                "cause": f"control:{task_name}",
                "action": control.action,
                "granted": result.granted,
                "previous": result.previous_level,
                "level": result.level,
                "note": result.note,
            },
        )
        self._emit_bound(result.emitted, now, source="binding:level_change")

    def _on_boundary(self, segment: RoadSegment, now: float) -> None:
        previous_max = self.machine.current_max
        previous_level = self.machine.state.level
        result = self.machine.on_boundary(segment, now)
        self.collector.record(
            now,
            EventKind.ROAD_CHANGE.value,
            {"max_level": segment.max_level, "previous_max": previous_max},
        )
        if result.level_changed:
            self.collector.record(
                now,
                EventKind.VEHICLE_TRANSITION.value,
                {
                    "change": "level",
                    "cause": "availability-drop",
                    "granted": True,
                    "previous": previous_level,
                    "level": result.level,
                    "note": result.note,
                },
            )
        self._emit_bound(result.emitted, now, source="binding:availability")

    def _on_tor(self, payload: TorPayload, now: float) -> None:
        active, emitted = self.machine.on_tor(payload, now)
        self.collector.record(
            now,
            EventKind.VEHICLE_TRANSITION.value,
            {
                "change": "tor",
                "phase": payload.phase.value,
                "boundary": payload.boundary,
                "segment_start": payload.segment_start,
                "emitted": active,
            },
        )
        if active:
            self._emit_bound(emitted, now, source=f"binding:{payload.phase.value}")

    def _on_speed_change(self, change: _SpeedChange, now: float) -> None:
        self.machine.set_speed(change.value)
        self.collector.record(
            now,
            EventKind.VEHICLE_TRANSITION.value,
            {"change": "speed", "speed": change.value},
        )
        nxt = self.scenario.speed.next_change(now)
        if nxt is not None and nxt[0] <= self.length:
            self.calendar.schedule(nxt[0], EventKind.VEHICLE_TRANSITION, _SpeedChange(*nxt))

    def _truncate_remaining(self) -> None:
        """Balance the books at the trial horizon.

        Instances still active at the end are released without queue
        admission and recorded as uncompleted ends; they contribute no
        eyes-off time, no memory updates, and no follow-ups.
        """
        self.collector.advance(self.length)
        active = self.attention.active_instances()
        leftover_queue = [q.task.name for q in self.attention.queued_instances()]
        for instance in active:
            self.attention.release(instance, self.length, admit=False)
            self.collector.record(
                self.length,
                EventKind.TASK_END.value,
                {
                    "task": instance.task.name,
                    "instance": instance.uid,
                    "completed": False,
                    "started_at": instance.started_at,
                },
            )
        self.collector.record(
            self.length,
            RECORD_TRIAL_END,
            {
                "truncated": [i.task.name for i in active],
                "still_queued": leftover_queue,
            },
        )


def _clip_timeline(timeline, trial_length: float):
    """Fit a fixed timeline to the trial horizon (error if too short)."""
    from .vehicle import RoadTimeline

    if timeline.horizon < trial_length:
        raise ConfigurationError(
            [
                Violation(
                    "error",
                    "scenario road",
                    f"fixed timeline covers {timeline.horizon} s but the trial needs {trial_length} s",
                )
            ]
        )
    if timeline.horizon == trial_length:
        return timeline
    clipped = []
    for seg in timeline.segments:
        if seg.start >= trial_length:
            break
        clipped.append(RoadSegment(seg.start, min(seg.end, trial_length), seg.max_level))
    return RoadTimeline(segments=tuple(clipped), horizon=trial_length)
