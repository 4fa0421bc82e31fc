"""Task catalog, interface element catalog, and configuration loading.

A cockpit design ("configuration") is a list of interaction tasks, the
catalog of interface elements they live on, and the workload scale used
to resolve descriptor strings into demand values.

Task files are CSV with one task per row and this exact header::

    Name, Description, Location, CognitiveDescriptor, PerceptualDescriptor,
    PerceptionType, PerceptualWorkload, CognitiveWorkload, Duration,
    GazeTime, CognitiveFunctionTrigger, AwarenessParameter, Triggers,
    Priority, Initiator

Empty cells are absent optionals.  Numeric workload cells override the
scale (with a warning when the two disagree); otherwise the workload is
filled from the descriptor.  Validation reports every violation, not
just the first.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable

import yaml

from .workload import (
    AttentionalChannel,
    ScaleCategory,
    UnknownDescriptorError,
    WorkloadScale,
    perceptual_category,
)

TASK_COLUMNS = [
    "Name",
    "Description",
    "Location",
    "CognitiveDescriptor",
    "PerceptualDescriptor",
    "PerceptionType",
    "PerceptualWorkload",
    "CognitiveWorkload",
    "Duration",
    "GazeTime",
    "CognitiveFunctionTrigger",
    "AwarenessParameter",
    "Triggers",
    "Priority",
    "Initiator",
]

#: Recognized but derived: checked against Duration + 2*GazeTime, never stored.
DERIVED_COLUMNS = {"TotalTime"}

WORKLOAD_MAX = 10.0
_TOLERANCE = 1e-9


class Initiator(str, Enum):
    DRIVER = "driver"
    MACHINE = "machine"


@dataclass(frozen=True)
class InterfaceElement:
    """A physical interaction surface (display, speaker, actuator, ...).

    ``gaze_time`` is the one-way visual refocus time road -> element;
    ``on_road`` marks elements (head-up display) that keep the driver's
    eyes on the road scene.
    """

    name: str
    on_road: bool
    gaze_time: float = 0.0


@dataclass
class Task:
    name: str
    location: str
    perception_type: AttentionalChannel
    duration: float
    priority: int
    initiator: Initiator
    description: str = ""
    cognitive_descriptor: str | None = None
    perceptual_descriptor: str | None = None
    perceptual_workload: float = 0.0
    cognitive_workload: float = 0.0
    gaze_time: float = 0.0
    cognitive_function_trigger: str | None = None
    awareness_parameter: str | None = None
    triggers: str | None = None

    def total_time(self) -> float:
        """Full channel occupancy: gaze there + execution + gaze back."""
        return self.duration + 2.0 * self.gaze_time


@dataclass(frozen=True)
class Violation:
    severity: str  # "error" | "warning"
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.where}: {self.message}"


class ConfigurationError(Exception):
    """Configuration input failed validation; carries every violation."""

    def __init__(self, violations: list[Violation]) -> None:
        self.violations = violations
        lines = "\n".join(f"  {v}" for v in violations)
        super().__init__(f"{len(violations)} configuration problem(s):\n{lines}")


@dataclass
class Configuration:
    tasks: list[Task]
    elements: dict[str, InterfaceElement]
    scale: WorkloadScale
    warnings: list[Violation] = field(default_factory=list, compare=False)

    def task_map(self) -> dict[str, Task]:
        return {t.name: t for t in self.tasks}

    def element_for(self, task: Task) -> InterfaceElement:
        return self.elements[task.location]


# ---------------------------------------------------------------------------
# parsing helpers

def _normalize_channel(raw: str) -> AttentionalChannel | None:
    text = raw.strip().lower().replace("_", " ").replace("-", " ")
    text = "-".join(text.split())
    try:
        return AttentionalChannel(text)
    except ValueError:
        return None


def _parse_float(cell: str, where: str, column: str, issues: list[Violation]) -> float | None:
    try:
        return float(cell)
    except ValueError:
        issues.append(Violation("error", where, f"{column} is not a number: {cell!r}"))
        return None


def _fmt(value: float | int | str | None) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------------------
# element and scale files

def load_elements(path: str | Path) -> dict[str, InterfaceElement]:
    """Load the interface element catalog from a YAML file."""
    issues: list[Violation] = []
    elements = _load_elements_collect(Path(path), issues)
    if any(v.severity == "error" for v in issues):
        raise ConfigurationError([v for v in issues if v.severity == "error"])
    return elements


def _load_elements_collect(path: Path, issues: list[Violation]) -> dict[str, InterfaceElement]:
    where = str(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        issues.append(Violation("error", where, "element file not found"))
        return {}
    except yaml.YAMLError as exc:
        issues.append(Violation("error", where, f"YAML parse failure: {exc}"))
        return {}
    if not isinstance(raw, dict) or "elements" not in raw:
        issues.append(Violation("error", where, "expected a top-level 'elements' list"))
        return {}
    elements: dict[str, InterfaceElement] = {}
    for i, entry in enumerate(raw["elements"] or []):
        spot = f"{where} elements[{i}]"
        if not isinstance(entry, dict) or "name" not in entry:
            issues.append(Violation("error", spot, "each element needs at least a 'name'"))
            continue
        name = str(entry["name"]).strip()
        on_road = entry.get("on_road", False)
        gaze = entry.get("gaze_time", 0.0)
        if not isinstance(on_road, bool):
            issues.append(Violation("error", spot, f"on_road must be a boolean, got {on_road!r}"))
            continue
        if not isinstance(gaze, (int, float)) or isinstance(gaze, bool) or gaze < 0:
            issues.append(Violation("error", spot, f"gaze_time must be a number >= 0, got {gaze!r}"))
            continue
        if name in elements:
            issues.append(Violation("error", spot, f"duplicate element name {name!r}"))
            continue
        elements[name] = InterfaceElement(name=name, on_road=on_road, gaze_time=float(gaze))
    return elements


def load_scale(path: str | Path | None) -> WorkloadScale:
    """Load the workload scale: bundled defaults plus optional YAML overrides."""
    if path is None:
        return WorkloadScale()
    issues: list[Violation] = []
    scale = _load_scale_collect(Path(path), issues)
    if issues:
        raise ConfigurationError(issues)
    return scale


def _load_scale_collect(path: Path, issues: list[Violation]) -> WorkloadScale:
    where = str(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        issues.append(Violation("error", where, "scale file not found"))
        return WorkloadScale()
    except yaml.YAMLError as exc:
        issues.append(Violation("error", where, f"YAML parse failure: {exc}"))
        return WorkloadScale()
    if not isinstance(raw, dict) or "scale" not in raw:
        issues.append(Violation("error", where, "expected a top-level 'scale' mapping"))
        return WorkloadScale()
    overrides: dict[tuple[ScaleCategory, str], float] = {}
    for cat_name, table in (raw["scale"] or {}).items():
        try:
            category = ScaleCategory(str(cat_name).strip().lower())
        except ValueError:
            issues.append(Violation("error", where, f"unknown scale category {cat_name!r}"))
            continue
        if not isinstance(table, dict):
            issues.append(Violation("error", where, f"category {cat_name!r} must map descriptors to values"))
            continue
        for descriptor, value in table.items():
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                issues.append(
                    Violation("error", where, f"({cat_name}, {descriptor!r}) value is not a number")
                )
                continue
            if not 0.0 < float(value) <= WORKLOAD_MAX:
                issues.append(
                    Violation(
                        "error",
                        where,
                        f"({cat_name}, {descriptor!r}) = {value} outside (0, {WORKLOAD_MAX}]",
                    )
                )
                continue
            overrides[(category, str(descriptor).strip())] = float(value)
    return WorkloadScale().with_overrides(overrides)


# ---------------------------------------------------------------------------
# task CSV

def _parse_task_row(
    row: dict[str, str],
    where: str,
    elements: dict[str, InterfaceElement],
    scale: WorkloadScale,
    errors: list[Violation],
    warnings: list[Violation],
) -> Task | None:
    def cell(column: str) -> str:
        return (row.get(column) or "").strip()

    name = cell("Name")
    if not name:
        errors.append(Violation("error", where, "Name is required"))
        return None
    where = f"{where} ({name})"

    channel = _normalize_channel(cell("PerceptionType"))
    if channel is None:
        errors.append(
            Violation("error", where, f"PerceptionType not recognized: {cell('PerceptionType')!r}")
        )
        return None

    duration = _parse_float(cell("Duration"), where, "Duration", errors) if cell("Duration") else None
    if cell("Duration") == "":
        errors.append(Violation("error", where, "Duration is required"))
    priority: int | None = None
    if cell("Priority") == "":
        errors.append(Violation("error", where, "Priority is required"))
    else:
        try:
            priority = int(cell("Priority"))
        except ValueError:
            errors.append(Violation("error", where, f"Priority is not an integer: {cell('Priority')!r}"))

    initiator: Initiator | None = None
    try:
        initiator = Initiator(cell("Initiator").lower())
    except ValueError:
        errors.append(
            Violation("error", where, f"Initiator must be driver or machine, got {cell('Initiator')!r}")
        )

    location = cell("Location")
    element = elements.get(location)
    if element is None:
        errors.append(Violation("error", where, f"Location {location!r} is not in the element catalog"))

    # Gaze time: explicit cell wins; otherwise visual tasks inherit the
    # element's refocus time and non-visual tasks get 0.
    if cell("GazeTime"):
        gaze = _parse_float(cell("GazeTime"), where, "GazeTime", errors)
    elif channel is AttentionalChannel.VISUAL and element is not None:
        gaze = element.gaze_time
    else:
        gaze = 0.0

    cog_desc = cell("CognitiveDescriptor") or None
    perc_desc = cell("PerceptualDescriptor") or None

    def resolve(
        column: str,
        descriptor: str | None,
        category: ScaleCategory,
        explicit_cell: str,
    ) -> float | None:
        explicit = _parse_float(explicit_cell, where, column, errors) if explicit_cell else None
        from_scale: float | None = None
        if descriptor is not None:
            try:
                from_scale = scale.lookup(category, descriptor)
            except UnknownDescriptorError as exc:
                errors.append(Violation("error", where, str(exc)))
        if explicit is not None and from_scale is not None:
            if abs(explicit - from_scale) > _TOLERANCE:
                warnings.append(
                    Violation(
                        "warning",
                        where,
                        f"{column}={explicit} disagrees with scale value {from_scale} "
                        f"for {descriptor!r}; keeping the explicit value",
                    )
                )
            return explicit
        if explicit is not None:
            return explicit
        if from_scale is not None:
            return from_scale
        errors.append(
            Violation("error", where, f"{column} missing and no descriptor to fill it from")
        )
        return None

    perc = resolve("PerceptualWorkload", perc_desc, perceptual_category(channel), cell("PerceptualWorkload"))
    cog = resolve("CognitiveWorkload", cog_desc, ScaleCategory.COGNITIVE, cell("CognitiveWorkload"))

    if "TotalTime" in row and (row.get("TotalTime") or "").strip():
        supplied = _parse_float(row["TotalTime"].strip(), where, "TotalTime", warnings)
        if (
            supplied is not None
            and duration is not None
            and gaze is not None
            and abs(supplied - (duration + 2.0 * gaze)) > _TOLERANCE
        ):
            warnings.append(
                Violation(
                    "warning",
                    where,
                    f"TotalTime={supplied} is inconsistent with Duration + 2*GazeTime "
                    f"= {duration + 2.0 * gaze}; ignoring it",
                )
            )

    if duration is None or priority is None or initiator is None or gaze is None or perc is None or cog is None:
        return None
    return Task(
        name=name,
        description=cell("Description"),
        location=location,
        cognitive_descriptor=cog_desc,
        perceptual_descriptor=perc_desc,
        perception_type=channel,
        perceptual_workload=perc,
        cognitive_workload=cog,
        duration=duration,
        gaze_time=gaze,
        cognitive_function_trigger=cell("CognitiveFunctionTrigger") or None,
        awareness_parameter=cell("AwarenessParameter") or None,
        triggers=cell("Triggers") or None,
        priority=priority,
        initiator=initiator,
    )


def load_configuration(
    task_file: str | Path,
    element_file: str | Path,
    scale_file: str | Path | None = None,
) -> Configuration:
    """Load and validate a full configuration.

    Raises :class:`ConfigurationError` listing *every* violation if any
    input is invalid; parse warnings are attached to the result.
    """
    errors: list[Violation] = []
    warnings: list[Violation] = []

    elements = _load_elements_collect(Path(element_file), errors)
    if scale_file is not None:
        scale = _load_scale_collect(Path(scale_file), errors)
    else:
        scale = WorkloadScale()

    tasks: list[Task] = []
    task_path = Path(task_file)
    try:
        with open(task_path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            header = reader.fieldnames
            if header is None:
                header = []  # empty file: a valid zero-task catalog
            else:
                missing = [c for c in TASK_COLUMNS if c not in header]
                for column in missing:
                    errors.append(Violation("error", str(task_path), f"missing column {column!r}"))
                unknown = [c for c in header if c not in TASK_COLUMNS and c not in DERIVED_COLUMNS]
                for column in unknown:
                    warnings.append(
                        Violation("warning", str(task_path), f"ignoring unknown column {column!r}")
                    )
                if not missing:
                    for line, row in enumerate(reader, start=2):
                        task = _parse_task_row(
                            row, f"{task_path} row {line}", elements, scale, errors, warnings
                        )
                        if task is not None:
                            tasks.append(task)
    except FileNotFoundError:
        errors.append(Violation("error", str(task_path), "task file not found"))

    config = Configuration(tasks=tasks, elements=elements, scale=scale, warnings=warnings)
    errors.extend(validate(config))
    if errors:
        raise ConfigurationError(errors)
    return config


def validate(config: Configuration) -> list[Violation]:
    """Structural checks on an in-memory configuration.  Returns violations."""
    issues: list[Violation] = []
    seen: set[str] = set()
    names = {t.name for t in config.tasks}
    for task in config.tasks:
        where = f"task {task.name}"
        if task.name in seen:
            issues.append(Violation("error", where, "duplicate task name"))
        seen.add(task.name)
        if task.location not in config.elements:
            issues.append(Violation("error", where, f"location {task.location!r} is not a known element"))
        if not task.duration > 0:
            issues.append(Violation("error", where, f"duration must be > 0, got {task.duration}"))
        if task.gaze_time < 0:
            issues.append(Violation("error", where, f"gaze_time must be >= 0, got {task.gaze_time}"))
        if task.gaze_time != 0 and task.perception_type is not AttentionalChannel.VISUAL:
            issues.append(
                Violation(
                    "error",
                    where,
                    f"gaze_time must be 0 for non-visual tasks ({task.perception_type.value})",
                )
            )
        for label, value in (
            ("cognitive_workload", task.cognitive_workload),
            ("perceptual_workload", task.perceptual_workload),
        ):
            if not 0.0 < value <= WORKLOAD_MAX:
                issues.append(
                    Violation("error", where, f"{label} = {value} outside (0, {WORKLOAD_MAX}]")
                )
        if task.triggers is not None and task.triggers not in names:
            issues.append(Violation("error", where, f"triggers unknown task {task.triggers!r}"))
    for element in config.elements.values():
        if element.gaze_time < 0:
            issues.append(
                Violation("error", f"element {element.name}", f"gaze_time must be >= 0")
            )
    for value_key, value in config.scale.entries.items():
        if not 0.0 < value <= WORKLOAD_MAX:
            issues.append(
                Violation(
                    "error",
                    f"scale ({value_key[0].value}, {value_key[1]!r})",
                    f"value {value} outside (0, {WORKLOAD_MAX}]",
                )
            )
    issues.extend(_trigger_cycles(config))
    return issues


def _trigger_cycles(config: Configuration) -> list[Violation]:
    """Detect cycles in the follow-up (triggers) graph."""
    graph = {t.name: t.triggers for t in config.tasks}
    issues: list[Violation] = []
    state: dict[str, int] = {}  # 0 in progress, 1 done

    def walk(node: str, trail: list[str]) -> None:
        if state.get(node) == 1:
            return
        if state.get(node) == 0:
            cycle = trail[trail.index(node):] + [node]
            issues.append(
                Violation("error", f"task {node}", f"trigger chain forms a cycle: {' -> '.join(cycle)}")
            )
            return
        state[node] = 0
        nxt = graph.get(node)
        if nxt is not None and nxt in graph:
            walk(nxt, trail + [node])
        state[node] = 1

    for name in graph:
        if name not in state:
            walk(name, [])
    return issues


def write_tasks_csv(config: Configuration, path: str | Path) -> None:
    """Write the task list back out with workloads filled in."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TASK_COLUMNS)
        for t in config.tasks:
            writer.writerow(
                [
                    t.name,
                    t.description,
                    t.location,
                    _fmt(t.cognitive_descriptor),
                    _fmt(t.perceptual_descriptor),
                    t.perception_type.value,
                    _fmt(t.perceptual_workload),
                    _fmt(t.cognitive_workload),
                    _fmt(t.duration),
                    _fmt(t.gaze_time),
                    _fmt(t.cognitive_function_trigger),
                    _fmt(t.awareness_parameter),
                    _fmt(t.triggers),
                    t.priority,
                    t.initiator.value,
                ]
            )


def copy_configuration(config: Configuration) -> Configuration:
    """Independent copy safe to mutate (tasks are copied, scale is shared)."""
    return Configuration(
        tasks=[replace(t) for t in config.tasks],
        elements=dict(config.elements),
        scale=config.scale,
        warnings=list(config.warnings),
    )
