"""Scenario files: the environment a cockpit design is evaluated in.

A scenario is a YAML document describing everything around the task
catalog: the road availability process (or a fixed timeline for scripted
runs), the scripted speed signal, the driver's periodic cognitive
functions, which machine tasks each vehicle event emits, which driver
tasks act as automation controls, and which ground-truth parameters the
driver tracks.  See the bundled ``data/demo_scenario.yaml`` for the full
schema in use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .driver import ALL_LEVELS, AwarenessParameter, CognitiveFunction, default_sigma
from .tasks import Configuration, ConfigurationError, Initiator, Violation
from .vehicle import (
    GROUND_TRUTH_PARAMETERS,
    MAX_LEVEL,
    DwellParams,
    EventBindings,
    RoadProcessParams,
    RoadSegment,
    RoadTimeline,
)


@dataclass(frozen=True)
class SpeedScript:
    """Piecewise-constant speed signal: constant, explicit steps, or a cycle."""

    kind: str  # "constant" | "steps" | "cycle"
    constant: float = 0.0
    steps: tuple[tuple[float, float], ...] = ()
    period: float = 0.0
    values: tuple[float, ...] = ()

    def initial_value(self) -> float:
        if self.kind == "constant":
            return self.constant
        if self.kind == "steps":
            return self.steps[0][1]
        return self.values[0]

    def next_change(self, after: float) -> tuple[float, float] | None:
        """First (time, value) change strictly after ``after``, if any."""
        if self.kind == "constant":
            return None
        if self.kind == "steps":
            for t, v in self.steps:
                if t > after:
                    return (t, v)
            return None
        index = math.floor(after / self.period) + 1
        return (index * self.period, self.values[index % len(self.values)])


@dataclass(frozen=True)
class ControlBinding:
    """A driver task that operates the automation on completion."""

    action: str  # "switch_up" | "switch_down"
    target: int | None = None


@dataclass
class VehicleSettings:
    initial_level: int = 0
    tor_lead_seconds: float = 60.0
    tor_final_seconds: float = 10.0


@dataclass
class Scenario:
    name: str
    road_process: RoadProcessParams | None
    fixed_timeline: RoadTimeline | None
    speed: SpeedScript
    cognitive_functions: list[CognitiveFunction]
    bindings: EventBindings
    controls: dict[str, ControlBinding]
    awareness: dict[str, AwarenessParameter]
    vehicle: VehicleSettings = field(default_factory=VehicleSettings)


class ScenarioError(ConfigurationError):
    """Scenario input failed validation."""


# ---------------------------------------------------------------------------
# loading

def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    where = str(path)
    issues: list[Violation] = []
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScenarioError([Violation("error", where, "scenario file not found")]) from None
    except yaml.YAMLError as exc:
        raise ScenarioError([Violation("error", where, f"YAML parse failure: {exc}")]) from None
    if not isinstance(raw, dict):
        raise ScenarioError([Violation("error", where, "scenario must be a mapping")])

    name = str(raw.get("name", path.stem))
    road_process, fixed_timeline = _parse_road(raw.get("road"), where, issues)
    speed = _parse_speed(raw.get("speed"), where, issues)
    functions = _parse_functions(raw.get("cognitive_functions"), where, issues)
    bindings = _parse_bindings(raw.get("bindings"), where, issues)
    controls = _parse_controls(raw.get("controls"), where, issues)
    awareness = _parse_awareness(raw.get("awareness"), where, issues)
    vehicle = _parse_vehicle(raw.get("vehicle"), where, issues)

    if issues:
        raise ScenarioError(issues)
    return Scenario(
        name=name,
        road_process=road_process,
        fixed_timeline=fixed_timeline,
        speed=speed,
        cognitive_functions=functions,
        bindings=bindings,
        controls=controls,
        awareness=awareness,
        vehicle=vehicle,
    )


def _parse_road(
    raw: Any, where: str, issues: list[Violation]
) -> tuple[RoadProcessParams | None, RoadTimeline | None]:
    where = f"{where} road"
    if not isinstance(raw, dict):
        issues.append(Violation("error", where, "scenario needs a 'road' section"))
        return None, None
    if "fixed_segments" in raw:
        segments: list[RoadSegment] = []
        ok = True
        for i, row in enumerate(raw["fixed_segments"] or []):
            if not (isinstance(row, (list, tuple)) and len(row) == 3):
                issues.append(Violation("error", where, f"fixed_segments[{i}] must be [start, end, max_level]"))
                ok = False
                continue
            segments.append(RoadSegment(float(row[0]), float(row[1]), int(row[2])))
        if not ok or not segments:
            if ok:
                issues.append(Violation("error", where, "fixed_segments is empty"))
            return None, None
        try:
            timeline = RoadTimeline(segments=tuple(segments), horizon=segments[-1].end)
        except ValueError as exc:
            issues.append(Violation("error", where, str(exc)))
            return None, None
        return None, timeline
    if "process" not in raw:
        issues.append(Violation("error", where, "road needs 'process' or 'fixed_segments'"))
        return None, None
    proc = raw["process"]
    dwell: dict[int, DwellParams] = {}
    for key, entry in (proc.get("dwell") or {}).items():
        level = _parse_level(key, f"{where} dwell", issues)
        if level is None or not isinstance(entry, dict):
            continue
        mean = entry.get("mean")
        if not isinstance(mean, (int, float)) or mean <= 0:
            issues.append(Violation("error", where, f"dwell mean for level {level} must be > 0"))
            continue
        minimum = float(entry.get("min", 0.0))
        maximum = float(entry.get("max", math.inf))
        if minimum < 0 or maximum < minimum:
            issues.append(Violation("error", where, f"dwell bounds for level {level} need 0 <= min <= max"))
            continue
        dwell[level] = DwellParams(mean=float(mean), minimum=minimum, maximum=maximum)
    transitions: dict[int, dict[int, float]] = {}
    for key, row in (proc.get("transitions") or {}).items():
        level = _parse_level(key, f"{where} transitions", issues)
        if level is None:
            continue
        out: dict[int, float] = {}
        for target_key, weight in (row or {}).items():
            target = _parse_level(target_key, f"{where} transitions[{level}]", issues)
            if target is None:
                continue
            if target == level:
                issues.append(Violation("error", where, f"self-transition for level {level}"))
                continue
            if not isinstance(weight, (int, float)) or weight <= 0:
                issues.append(Violation("error", where, f"transition weight {level}->{target} must be > 0"))
                continue
            out[target] = float(weight)
        transitions[level] = out
    initial = proc.get("initial_level")
    initial_level = _parse_level(initial, f"{where} process", issues)
    if initial_level is None:
        return None, None
    if initial_level not in dwell:
        issues.append(Violation("error", where, f"initial level {initial_level} has no dwell parameters"))
    reachable = {t for row in transitions.values() for t in row}
    for level in reachable:
        if level not in dwell:
            issues.append(Violation("error", where, f"reachable level {level} has no dwell parameters"))
    return RoadProcessParams(initial_level=initial_level or 0, dwell=dwell, transitions=transitions), None


def _parse_level(key: Any, where: str, issues: list[Violation]) -> int | None:
    try:
        level = int(key)
    except (TypeError, ValueError):
        issues.append(Violation("error", where, f"automation level expected, got {key!r}"))
        return None
    if not 0 <= level <= MAX_LEVEL:
        issues.append(Violation("error", where, f"automation level {level} outside 0..{MAX_LEVEL}"))
        return None
    return level


def _parse_speed(raw: Any, where: str, issues: list[Violation]) -> SpeedScript:
    where = f"{where} speed"
    fallback = SpeedScript(kind="constant", constant=0.0)
    if raw is None:
        return fallback
    if not isinstance(raw, dict):
        issues.append(Violation("error", where, "speed must be a mapping"))
        return fallback
    if "constant" in raw:
        return SpeedScript(kind="constant", constant=float(raw["constant"]))
    if "steps" in raw:
        steps: list[tuple[float, float]] = []
        for i, row in enumerate(raw["steps"] or []):
            if not (isinstance(row, (list, tuple)) and len(row) == 2):
                issues.append(Violation("error", where, f"steps[{i}] must be [time, value]"))
                continue
            steps.append((float(row[0]), float(row[1])))
        if not steps or steps[0][0] != 0.0:
            issues.append(Violation("error", where, "speed steps must start at time 0"))
            return fallback
        if any(b[0] <= a[0] for a, b in zip(steps, steps[1:])):
            issues.append(Violation("error", where, "speed step times must increase"))
            return fallback
        return SpeedScript(kind="steps", steps=tuple(steps))
    if "cycle" in raw:
        cyc = raw["cycle"] or {}
        period = cyc.get("period")
        values = cyc.get("values")
        if not isinstance(period, (int, float)) or period <= 0 or not values:
            issues.append(Violation("error", where, "cycle needs period > 0 and a non-empty values list"))
            return fallback
        return SpeedScript(kind="cycle", period=float(period), values=tuple(float(v) for v in values))
    issues.append(Violation("error", where, "speed needs one of constant/steps/cycle"))
    return fallback


def _parse_functions(raw: Any, where: str, issues: list[Violation]) -> list[CognitiveFunction]:
    functions: list[CognitiveFunction] = []
    seen: set[str] = set()
    for i, entry in enumerate(raw or []):
        spot = f"{where} cognitive_functions[{i}]"
        if not isinstance(entry, dict) or "name" not in entry or "task" not in entry:
            issues.append(Violation("error", spot, "needs at least 'name' and 'task'"))
            continue
        name = str(entry["name"])
        if name in seen:
            issues.append(Violation("error", spot, f"duplicate cognitive function {name!r}"))
            continue
        seen.add(name)
        mean = entry.get("mean")
        if not isinstance(mean, (int, float)) or mean <= 0:
            issues.append(Violation("error", spot, "mean must be a number > 0"))
            continue
        sigma = entry.get("sigma", default_sigma(float(mean)))
        if not isinstance(sigma, (int, float)) or sigma < 0:
            issues.append(Violation("error", spot, "sigma must be >= 0"))
            continue
        if "levels" in entry and entry["levels"] is not None:
            levels = set()
            for lv in entry["levels"]:
                parsed = _parse_level(lv, spot, issues)
                if parsed is not None:
                    levels.add(parsed)
            enabled = frozenset(levels)
        else:
            enabled = ALL_LEVELS
        functions.append(
            CognitiveFunction(
                name=name,
                mean_interval=float(mean),
                sigma=float(sigma),
                target_task=str(entry["task"]),
                enabled_levels=enabled,
            )
        )
    return functions


def _parse_bindings(raw: Any, where: str, issues: list[Violation]) -> EventBindings:
    where = f"{where} bindings"
    bindings = EventBindings()
    if raw is None:
        return bindings
    if not isinstance(raw, dict):
        issues.append(Violation("error", where, "bindings must be a mapping"))
        return bindings

    def names(value: Any, spot: str) -> list[str]:
        if value is None:
            return []
        if not isinstance(value, list):
            issues.append(Violation("error", spot, "expected a list of task names"))
            return []
        return [str(v) for v in value]

    bindings.tor_early = names(raw.get("tor60"), f"{where} tor60")
    bindings.tor_final = names(raw.get("tor10"), f"{where} tor10")
    for key, value in (raw.get("level_change") or {}).items():
        if key == "any":
            bindings.level_change["any"] = names(value, f"{where} level_change.any")
            continue
        level = _parse_level(key, f"{where} level_change", issues)
        if level is not None:
            bindings.level_change[level] = names(value, f"{where} level_change[{level}]")
    for attr, section in (("availability_rise", "availability_rise"), ("availability_drop", "availability_drop")):
        for key, value in (raw.get(section) or {}).items():
            level = _parse_level(key, f"{where} {section}", issues)
            if level is not None:
                getattr(bindings, attr)[level] = names(value, f"{where} {section}[{level}]")
    known = {"tor60", "tor10", "level_change", "availability_rise", "availability_drop"}
    for key in raw:
        if key not in known:
            issues.append(Violation("error", where, f"unknown binding event {key!r}"))
    return bindings


def _parse_controls(raw: Any, where: str, issues: list[Violation]) -> dict[str, ControlBinding]:
    where = f"{where} controls"
    controls: dict[str, ControlBinding] = {}
    for task_name, entry in (raw or {}).items():
        if not isinstance(entry, dict) or entry.get("action") not in ("switch_up", "switch_down"):
            issues.append(
                Violation("error", where, f"{task_name!r} needs action switch_up or switch_down")
            )
            continue
        target = entry.get("target")
        parsed_target: int | None = None
        if target is not None:
            parsed_target = _parse_level(target, f"{where} {task_name}", issues)
            if parsed_target is None:
                continue
        controls[str(task_name)] = ControlBinding(action=entry["action"], target=parsed_target)
    return controls


def _parse_awareness(raw: Any, where: str, issues: list[Violation]) -> dict[str, AwarenessParameter]:
    where = f"{where} awareness"
    parameters: dict[str, AwarenessParameter] = {}
    for name, entry in (raw or {}).items():
        name = str(name)
        if name not in GROUND_TRUTH_PARAMETERS:
            issues.append(
                Violation(
                    "error",
                    where,
                    f"{name!r} has no ground-truth counterpart (known: {', '.join(GROUND_TRUTH_PARAMETERS)})",
                )
            )
            continue
        entry = entry or {}
        resolution = entry.get("resolution")
        if resolution is not None and (not isinstance(resolution, (int, float)) or resolution <= 0):
            issues.append(Violation("error", where, f"{name!r} resolution must be > 0"))
            continue
        parameters[name] = AwarenessParameter(
            name=name,
            resolution=float(resolution) if resolution is not None else None,
            initial=entry.get("initial"),
        )
    return parameters


def _parse_vehicle(raw: Any, where: str, issues: list[Violation]) -> VehicleSettings:
    where = f"{where} vehicle"
    settings = VehicleSettings()
    if raw is None:
        return settings
    if not isinstance(raw, dict):
        issues.append(Violation("error", where, "vehicle must be a mapping"))
        return settings
    level = _parse_level(raw.get("initial_level", 0), where, issues)
    if level is not None:
        settings.initial_level = level
    lead = raw.get("tor_lead_seconds", settings.tor_lead_seconds)
    final = raw.get("tor_final_seconds", settings.tor_final_seconds)
    if not isinstance(lead, (int, float)) or not isinstance(final, (int, float)) or not lead >= final >= 0:
        issues.append(Violation("error", where, "need tor_lead_seconds >= tor_final_seconds >= 0"))
        return settings
    settings.tor_lead_seconds = float(lead)
    settings.tor_final_seconds = float(final)
    return settings


# ---------------------------------------------------------------------------
# cross-validation against a configuration

def cross_validate(scenario: Scenario, config: Configuration) -> list[Violation]:
    """Check every reference between a scenario and a task configuration.

    Severity ``error`` blocks a trial.  Bound or control task names missing
    from the catalog are warnings only: removing a signal from a design is
    a legitimate design change, and the emission is simply skipped.
    """
    issues: list[Violation] = []
    tasks = config.task_map()
    functions = {f.name: f for f in scenario.cognitive_functions}

    for function in scenario.cognitive_functions:
        where = f"cognitive function {function.name}"
        target = tasks.get(function.target_task)
        if target is None:
            issues.append(Violation("error", where, f"targets unknown task {function.target_task!r}"))
        elif target.initiator is not Initiator.DRIVER:
            issues.append(Violation("error", where, f"target {target.name!r} must be driver-initiated"))

    for task in config.tasks:
        where = f"task {task.name}"
        if task.cognitive_function_trigger is not None:
            function = functions.get(task.cognitive_function_trigger)
            if function is None:
                issues.append(
                    Violation(
                        "error",
                        where,
                        f"names cognitive function {task.cognitive_function_trigger!r} "
                        "which the scenario does not define",
                    )
                )
            elif function.target_task != task.name:
                issues.append(
                    Violation(
                        "error",
                        where,
                        f"cognitive function {function.name!r} targets {function.target_task!r}, "
                        f"not this task",
                    )
                )
        if task.awareness_parameter is not None and task.awareness_parameter not in scenario.awareness:
            issues.append(
                Violation(
                    "error",
                    where,
                    f"awareness parameter {task.awareness_parameter!r} is not tracked by the scenario",
                )
            )

    def check_bound(names: list[str], spot: str) -> None:
        for name in names:
            task = tasks.get(name)
            if task is None:
                issues.append(
                    Violation("warning", spot, f"bound task {name!r} is not in the catalog; skipped")
                )
            elif task.initiator is not Initiator.MACHINE:
                issues.append(Violation("error", spot, f"bound task {name!r} must be machine-initiated"))

    check_bound(scenario.bindings.tor_early, "bindings tor60")
    check_bound(scenario.bindings.tor_final, "bindings tor10")
    for key, names in scenario.bindings.level_change.items():
        check_bound(names, f"bindings level_change[{key}]")
    for key, names in scenario.bindings.availability_rise.items():
        check_bound(names, f"bindings availability_rise[{key}]")
    for key, names in scenario.bindings.availability_drop.items():
        check_bound(names, f"bindings availability_drop[{key}]")

    for name, control in scenario.controls.items():
        task = tasks.get(name)
        if task is None:
            issues.append(
                Violation("warning", "controls", f"control task {name!r} is not in the catalog; skipped")
            )
        elif task.initiator is not Initiator.DRIVER:
            issues.append(Violation("error", "controls", f"control task {name!r} must be driver-initiated"))

    return issues
