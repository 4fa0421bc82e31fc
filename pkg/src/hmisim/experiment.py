"""Monte Carlo experiments over cockpit designs.

Three layers sit on top of the single-trial runner:

* seeded trial batches (optionally fanned out over processes, with
  results merged back in seed order);
* paired A/B comparison: trial *i* of both designs shares one master
  seed, so the road timeline and the trigger instants are bit-identical
  and per-seed indicator differences isolate the design change;
* a greedy first-improvement local search over four kinds of design
  move (reallocate a visual task to another element, remove a task,
  serialize two co-emitted signals, swap a descriptor for a lighter
  one).  A move is accepted when it Pareto-dominates the incumbent or
  improves a weighted sum of (cognitive overload, perceptual overload,
  eyes-off), while the median situation awareness stays at or above a
  caller-chosen floor.  Starting below the floor is reported, and the
  search then accepts only awareness-raising moves until it is feasible.

The search budget counts candidate evaluations (one evaluation = one
seed batch); a budget of zero returns the input design without running
a single simulation.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import yaml

from .metrics import AggregateSummary, TrialMetrics, aggregate, median_low
from .scenario import Scenario, load_scenario
from .tasks import (
    Configuration,
    ConfigurationError,
    Task,
    Violation,
    copy_configuration,
    load_configuration,
    validate,
)
from .trial import run_trial
from .workload import AttentionalChannel, ScaleCategory, perceptual_category

DEFAULT_TRIALS = 20
DEFAULT_TRIAL_LENGTH = 60_000.0  # seconds (1000 simulated minutes)


# ---------------------------------------------------------------------------
# trial batches

def run_metrics(
    config: Configuration, scenario: Scenario, seed: int, trial_length: float
) -> TrialMetrics:
    """One trial's indicators, without keeping the trace in memory."""
    return run_trial(config, scenario, seed, trial_length).metrics


def _run_star(args: tuple[Configuration, Scenario, int, float]) -> TrialMetrics:
    return run_metrics(*args)


def run_many(
    config: Configuration,
    scenario: Scenario,
    seeds: list[int],
    trial_length: float,
    jobs: int = 1,
) -> list[TrialMetrics]:
    """Run one trial per seed; results come back in seed-list order.

    ``jobs > 1`` fans trials out over worker processes.  Each trial is a
    pure function of its arguments, so the fan-out changes wall-clock
    time only, never a single output bit.
    """
    if jobs <= 1 or len(seeds) <= 1:
        return [run_metrics(config, scenario, s, trial_length) for s in seeds]
    work = [(config, scenario, s, trial_length) for s in seeds]
    with ProcessPoolExecutor(max_workers=min(jobs, len(seeds))) as pool:
        return list(pool.map(_run_star, work))


# ---------------------------------------------------------------------------
# paired comparison

@dataclass
class Comparison:
    """Paired A/B batch: per-config medians plus per-seed differences."""

    name_a: str
    name_b: str
    seeds: list[int]
    metrics_a: list[TrialMetrics]
    metrics_b: list[TrialMetrics]
    summary_a: AggregateSummary
    summary_b: AggregateSummary
    #: per seed, B minus A: (eyes_off, cog_overload, perc_overload, sa_avg)
    paired_diffs: list[tuple[float, float, float, float]]

    def summaries(self) -> dict[str, AggregateSummary]:
        return {self.name_a: self.summary_a, self.name_b: self.summary_b}


def compare(
    config_a: Configuration,
    config_b: Configuration,
    scenario: Scenario,
    seeds: list[int],
    trial_length: float,
    jobs: int = 1,
    name_a: str = "A",
    name_b: str = "B",
) -> Comparison:
    """Run both designs on the same seed list and pair the results."""
    metrics_a = run_many(config_a, scenario, seeds, trial_length, jobs)
    metrics_b = run_many(config_b, scenario, seeds, trial_length, jobs)
    diffs = [
        tuple(vb - va for va, vb in zip(a.indicator_row(), b.indicator_row()))
        for a, b in zip(metrics_a, metrics_b)
    ]
    return Comparison(
        name_a=name_a,
        name_b=name_b,
        seeds=list(seeds),
        metrics_a=metrics_a,
        metrics_b=metrics_b,
        summary_a=aggregate(metrics_a),
        summary_b=aggregate(metrics_b),
        paired_diffs=diffs,
    )


# ---------------------------------------------------------------------------
# objective

@dataclass(frozen=True)
class ObjectiveWeights:
    """Weights of the minimized components; all >= 0, not all zero."""

    cognitive: float = 1.0
    perceptual: float = 1.0
    eyes_off: float = 1.0

    def __post_init__(self) -> None:
        if min(self.cognitive, self.perceptual, self.eyes_off) < 0:
            raise ValueError("objective weights must be >= 0")
        if self.cognitive == self.perceptual == self.eyes_off == 0:
            raise ValueError("at least one objective weight must be > 0")


@dataclass(frozen=True)
class ObjectivePoint:
    """Median indicators of one design over one seed batch.

    The first three components are minimized; ``sa_average`` is the
    constraint value (kept at or above the floor), not part of the sum.
    """

    cognitive_overload: float
    perceptual_overload: float
    eyes_off: float
    sa_average: float

    def __post_init__(self) -> None:
        for value in (self.cognitive_overload, self.perceptual_overload, self.eyes_off, self.sa_average):
            if not math.isfinite(value):
                raise ValueError(f"objective components must be finite, got {value}")

    def score(self, weights: ObjectiveWeights) -> float:
        return (
            weights.cognitive * self.cognitive_overload
            + weights.perceptual * self.perceptual_overload
            + weights.eyes_off * self.eyes_off
        )

    def dominates(self, other: "ObjectivePoint") -> bool:
        """No minimized component worse, at least one strictly better."""
        mine = (self.cognitive_overload, self.perceptual_overload, self.eyes_off)
        theirs = (other.cognitive_overload, other.perceptual_overload, other.eyes_off)
        return all(m <= t for m, t in zip(mine, theirs)) and any(m < t for m, t in zip(mine, theirs))


def objective_point(trials: list[TrialMetrics]) -> ObjectivePoint:
    return ObjectivePoint(
        cognitive_overload=median_low([t.cognitive_overload_fraction for t in trials]),
        perceptual_overload=median_low([t.perceptual_overload_fraction for t in trials]),
        eyes_off=median_low([t.eyes_off_fraction for t in trials]),
        sa_average=median_low([t.sa_average for t in trials]),
    )


# ---------------------------------------------------------------------------
# design moves

@dataclass(frozen=True)
class ReallocateLocation:
    """Move a visual task to another interface element.

    The task's gaze time is refreshed from the destination element, so
    moving a message from an off-road display to the head-up display
    both removes its eyes-off contribution and shortens its occupancy.
    """

    task: str
    new_location: str

    def describe(self) -> str:
        return f"reallocate {self.task} to {self.new_location}"


@dataclass(frozen=True)
class RemoveTask:
    """Drop a task nothing else references (no trigger chain, no
    cognitive function); bindings that still name it are skipped at
    run time."""

    task: str

    def describe(self) -> str:
        return f"remove {self.task}"


@dataclass(frozen=True)
class SerializeSignals:
    """Chain ``second`` behind ``first`` so two signals bound to the
    same vehicle event stop competing for admission at the same instant:
    the emission skips ``second`` and ``first``'s completion raises it."""

    first: str
    second: str

    def describe(self) -> str:
        return f"serialize {self.second} after {self.first}"


@dataclass(frozen=True)
class ReplaceDescriptor:
    """Swap a task's cognitive or perceptual descriptor for a strictly
    lighter one on the same scale category, refreshing the workload."""

    task: str
    slot: str  # "cognitive" | "perceptual"
    descriptor: str

    def describe(self) -> str:
        return f"replace {self.task} {self.slot} descriptor with {self.descriptor!r}"


DesignMove = Union[ReallocateLocation, RemoveTask, SerializeSignals, ReplaceDescriptor]


def apply_move(config: Configuration, move: DesignMove) -> Configuration:
    """Apply one move to a copy of the design and re-validate it."""
    result = copy_configuration(config)
    tasks = {t.name: t for t in result.tasks}

    if isinstance(move, ReallocateLocation):
        task = _require_task(tasks, move.task)
        if move.new_location not in result.elements:
            raise ConfigurationError(
                [Violation("error", f"move {move.describe()}", "unknown destination element")]
            )
        task.location = move.new_location
        if task.perception_type is AttentionalChannel.VISUAL:
            task.gaze_time = result.elements[move.new_location].gaze_time
    elif isinstance(move, RemoveTask):
        _require_task(tasks, move.task)
        result.tasks = [t for t in result.tasks if t.name != move.task]
    elif isinstance(move, SerializeSignals):
        first = _require_task(tasks, move.first)
        _require_task(tasks, move.second)
        first.triggers = move.second
    elif isinstance(move, ReplaceDescriptor):
        task = _require_task(tasks, move.task)
        if move.slot == "cognitive":
            task.cognitive_workload = result.scale.lookup(ScaleCategory.COGNITIVE, move.descriptor)
            task.cognitive_descriptor = move.descriptor
        elif move.slot == "perceptual":
            category = perceptual_category(task.perception_type)
            task.perceptual_workload = result.scale.lookup(category, move.descriptor)
            task.perceptual_descriptor = move.descriptor
        else:
            raise ConfigurationError(
                [Violation("error", f"move on {move.task}", f"unknown descriptor slot {move.slot!r}")]
            )
    else:
        raise ConfigurationError([Violation("error", "move", f"unknown move type {move!r}")])

    problems = [v for v in validate(result) if v.severity == "error"]
    if problems:
        raise ConfigurationError(problems)
    return result


def _require_task(tasks: dict[str, Task], name: str) -> Task:
    task = tasks.get(name)
    if task is None:
        raise ConfigurationError([Violation("error", "move", f"unknown task {name!r}")])
    return task


def enumerate_moves(config: Configuration, scenario: Scenario) -> list[DesignMove]:
    """The deterministic move neighborhood of one design.

    * reallocations: every visual task to every other visual surface —
      an element is a visual surface when it is on-road or costs gaze
      time (an off-road element with instant refocus is degenerate);
    * removals: tasks no trigger chain or cognitive function references;
    * serializations: ordered pairs co-emitted by one vehicle event,
      where the first has no follow-up yet and chaining stays acyclic;
    * descriptor swaps: strictly lighter descriptors only (equal-value
      swaps change nothing and would burn budget).
    """
    tasks = {t.name: t for t in config.tasks}
    moves: list[DesignMove] = []

    for task in config.tasks:
        if task.perception_type is not AttentionalChannel.VISUAL:
            continue
        for element in config.elements.values():
            if element.name == task.location:
                continue
            if element.on_road or element.gaze_time > 0:
                moves.append(ReallocateLocation(task=task.name, new_location=element.name))

    referenced = {t.triggers for t in config.tasks if t.triggers is not None}
    referenced |= {f.target_task for f in scenario.cognitive_functions}
    for task in config.tasks:
        if task.name not in referenced:
            moves.append(RemoveTask(task=task.name))

    seen_pairs: set[tuple[str, str]] = set()
    for names in _binding_lists(scenario):
        present = [n for n in names if n in tasks]
        for first in present:
            if tasks[first].triggers is not None:
                continue
            for second in present:
                if second == first or (first, second) in seen_pairs:
                    continue
                if _chain_reaches(tasks, start=second, goal=first):
                    continue  # chaining would close a trigger cycle
                seen_pairs.add((first, second))
                moves.append(SerializeSignals(first=first, second=second))

    for task in config.tasks:
        for descriptor, value in config.scale.descriptors(ScaleCategory.COGNITIVE).items():
            if value < task.cognitive_workload:
                moves.append(ReplaceDescriptor(task=task.name, slot="cognitive", descriptor=descriptor))
        category = perceptual_category(task.perception_type)
        for descriptor, value in config.scale.descriptors(category).items():
            if value < task.perceptual_workload:
                moves.append(ReplaceDescriptor(task=task.name, slot="perceptual", descriptor=descriptor))

    return moves


def _binding_lists(scenario: Scenario) -> Iterable[list[str]]:
    bindings = scenario.bindings
    yield bindings.tor_early
    yield bindings.tor_final
    for key in sorted(bindings.level_change, key=str):
        yield bindings.level_change[key]
    for key in sorted(bindings.availability_rise):
        yield bindings.availability_rise[key]
    for key in sorted(bindings.availability_drop):
        yield bindings.availability_drop[key]


def _chain_reaches(tasks: dict[str, Task], start: str, goal: str) -> bool:
    """Whether following follow-up links from ``start`` reaches ``goal``."""
    seen = set()
    current: str | None = start
    while current is not None and current not in seen:
        if current == goal:
            return True
        seen.add(current)
        task = tasks.get(current)
        current = task.triggers if task is not None else None
    return False


# ---------------------------------------------------------------------------
# local search

@dataclass(frozen=True)
class MoveRecord:
    """One evaluated candidate: the move, both objective points, verdict."""

    move: DesignMove
    accepted: bool
    before: ObjectivePoint
    after: ObjectivePoint
    reason: str

    def describe(self) -> str:
        verdict = "accepted" if self.accepted else "rejected"
        return f"{verdict}: {self.move.describe()} ({self.reason})"


@dataclass
class SearchResult:
    config: Configuration
    objective: ObjectivePoint | None
    initial_objective: ObjectivePoint | None
    evaluations: int
    log: list[MoveRecord]
    accepted_moves: list[DesignMove]
    feasible: bool | None  # None when nothing was evaluated (budget 0)
    initial_metrics: list[TrialMetrics] | None = None
    final_metrics: list[TrialMetrics] | None = None

    def improved(self) -> bool:
        return bool(self.accepted_moves)


def replay_moves(config: Configuration, moves: Iterable[DesignMove]) -> Configuration:
    """Re-apply an accepted-move log; reproduces ``SearchResult.config``."""
    for move in moves:
        config = apply_move(config, move)
    return config


def local_search(
    config: Configuration,
    scenario: Scenario,
    seeds: list[int],
    trial_length: float,
    sa_floor: float,
    budget: int,
    weights: ObjectiveWeights | None = None,
    jobs: int = 1,
) -> SearchResult:
    """Greedy first-improvement hill climb over the move neighborhood.

    Every candidate is evaluated on the same seed batch as the incumbent
    (common random numbers), consuming one unit of ``budget``.  After an
    accepted move the neighborhood is re-enumerated from the new design.
    The search stops at the budget or at a local optimum (a full pass
    with no accepted move).
    """
    if not 0.0 <= sa_floor <= 100.0:
        raise ValueError(f"sa_floor must be within [0, 100], got {sa_floor}")
    weights = weights or ObjectiveWeights()
    if budget <= 0:
        return SearchResult(
            config=config,
            objective=None,
            initial_objective=None,
            evaluations=0,
            log=[],
            accepted_moves=[],
            feasible=None,
        )

    current = config
    current_metrics = run_many(current, scenario, seeds, trial_length, jobs)
    current_point = objective_point(current_metrics)
    initial_metrics = current_metrics
    initial_point = current_point
    evaluations = 0
    log: list[MoveRecord] = []
    accepted_moves: list[DesignMove] = []

    searching = True
    while searching and evaluations < budget:
        searching = False
        for move in enumerate_moves(current, scenario):
            if evaluations >= budget:
                break
            try:
                candidate = apply_move(current, move)
            except ConfigurationError:
                continue  # structurally invalid; costs no simulation
            candidate_metrics = run_many(candidate, scenario, seeds, trial_length, jobs)
            candidate_point = objective_point(candidate_metrics)
            evaluations += 1
            accepted, reason = _accepts(current_point, candidate_point, weights, sa_floor)
            log.append(
                MoveRecord(
                    move=move,
                    accepted=accepted,
                    before=current_point,
                    after=candidate_point,
                    reason=reason,
                )
            )
            if accepted:
                accepted_moves.append(move)
                current, current_point = candidate, candidate_point
                current_metrics = candidate_metrics
                searching = True
                break  # first improvement: restart from the new incumbent

    return SearchResult(
        config=current,
        objective=current_point,
        initial_objective=initial_point,
        evaluations=evaluations,
        log=log,
        accepted_moves=accepted_moves,
        feasible=current_point.sa_average >= sa_floor,
        initial_metrics=initial_metrics,
        final_metrics=current_metrics,
    )


def _accepts(
    current: ObjectivePoint,
    candidate: ObjectivePoint,
    weights: ObjectiveWeights,
    sa_floor: float,
) -> tuple[bool, str]:
    if current.sa_average < sa_floor:
        # Infeasible incumbent: feasibility first, objectives later.
        if candidate.sa_average > current.sa_average:
            return True, (
                f"sa {current.sa_average:.3f} -> {candidate.sa_average:.3f} "
                f"(seeking floor {sa_floor})"
            )
        return False, f"sa {candidate.sa_average:.3f} does not raise infeasible {current.sa_average:.3f}"
    if candidate.sa_average < sa_floor:
        return False, f"sa {candidate.sa_average:.3f} below floor {sa_floor}"
    if candidate.dominates(current):
        return True, "dominates incumbent on all objectives"
    before, after = current.score(weights), candidate.score(weights)
    if after < before:
        return True, f"weighted score {before:.6g} -> {after:.6g}"
    return False, f"weighted score {after:.6g} not below {before:.6g}"


# ---------------------------------------------------------------------------
# experiment plans

class PlanError(ConfigurationError):
    """Experiment plan file failed validation."""


@dataclass(frozen=True)
class NamedConfiguration:
    name: str
    tasks: Path
    elements: Path
    scale: Path | None = None

    def load(self) -> Configuration:
        return load_configuration(self.tasks, self.elements, self.scale)


@dataclass
class ExperimentPlan:
    """A file-backed experiment: named designs, scenario, seeds, search knobs."""

    name: str
    scenario_path: Path
    configurations: list[NamedConfiguration]
    master_seeds: list[int]
    trials_per_config: int = DEFAULT_TRIALS
    trial_length: float = DEFAULT_TRIAL_LENGTH
    sa_floor: float | None = None
    budget: int | None = None
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    jobs: int = 1

    def seeds(self) -> list[int]:
        return self.master_seeds[: self.trials_per_config]

    def load_scenario(self) -> Scenario:
        return load_scenario(self.scenario_path)


def load_plan(path: str | Path) -> ExperimentPlan:
    """Load an experiment plan; relative paths resolve against the plan file.

    ``master_seeds`` is either an explicit list or ``{first, count}``;
    omitted entirely it defaults to ``1..trials_per_config``.
    """
    path = Path(path)
    where = str(path)
    issues: list[Violation] = []
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise PlanError([Violation("error", where, "plan file not found")]) from None
    except yaml.YAMLError as exc:
        raise PlanError([Violation("error", where, f"YAML parse failure: {exc}")]) from None
    if not isinstance(raw, dict):
        raise PlanError([Violation("error", where, "plan must be a mapping")])

    base = path.parent

    def resolve(value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else base / p

    configurations: list[NamedConfiguration] = []
    names_seen: set[str] = set()
    for i, entry in enumerate(raw.get("configurations") or []):
        spot = f"{where} configurations[{i}]"
        if not isinstance(entry, dict) or not {"name", "tasks", "elements"} <= set(entry):
            issues.append(Violation("error", spot, "needs name, tasks and elements"))
            continue
        name = str(entry["name"])
        if name in names_seen:
            issues.append(Violation("error", spot, f"duplicate configuration name {name!r}"))
            continue
        names_seen.add(name)
        scale = entry.get("scale")
        configurations.append(
            NamedConfiguration(
                name=name,
                tasks=resolve(str(entry["tasks"])),
                elements=resolve(str(entry["elements"])),
                scale=resolve(str(scale)) if scale else None,
            )
        )
    if not configurations:
        issues.append(Violation("error", where, "plan needs at least one configuration"))

    if "scenario" not in raw:
        issues.append(Violation("error", where, "plan needs a scenario path"))
        scenario_path = Path(".")
    else:
        scenario_path = resolve(str(raw["scenario"]))

    raw_seeds = raw.get("master_seeds")
    trials = raw.get("trials_per_config")
    seeds: list[int] = []
    if isinstance(raw_seeds, dict):
        first = raw_seeds.get("first", 1)
        count = raw_seeds.get("count")
        if not isinstance(first, int) or not isinstance(count, int) or count < 1:
            issues.append(Violation("error", where, "master_seeds shorthand needs integer first and count >= 1"))
        else:
            seeds = list(range(first, first + count))
    elif isinstance(raw_seeds, list):
        for s in raw_seeds:
            if not isinstance(s, int):
                issues.append(Violation("error", where, f"master seed {s!r} is not an integer"))
            else:
                seeds.append(s)
    elif raw_seeds is not None:
        issues.append(Violation("error", where, "master_seeds must be a list or {first, count}"))

    if trials is None:
        trials = len(seeds) if seeds else DEFAULT_TRIALS
    if not isinstance(trials, int) or trials < 1:
        issues.append(Violation("error", where, "trials_per_config must be an integer >= 1"))
        trials = 1
    if not seeds:
        seeds = list(range(1, trials + 1))
    if len(seeds) < trials:
        issues.append(
            Violation("error", where, f"{trials} trials per config but only {len(seeds)} master seeds")
        )

    length = raw.get("trial_length", DEFAULT_TRIAL_LENGTH)
    if not isinstance(length, (int, float)) or length <= 0:
        issues.append(Violation("error", where, "trial_length must be > 0"))
        length = DEFAULT_TRIAL_LENGTH

    sa_floor = raw.get("sa_floor")
    if sa_floor is not None and (not isinstance(sa_floor, (int, float)) or not 0 <= sa_floor <= 100):
        issues.append(Violation("error", where, "sa_floor must be within [0, 100]"))
        sa_floor = None

    budget = raw.get("budget")
    if budget is not None and (not isinstance(budget, int) or budget < 0):
        issues.append(Violation("error", where, "budget must be an integer >= 0"))
        budget = None

    weights = ObjectiveWeights()
    raw_weights = raw.get("weights")
    if raw_weights is not None:
        if not isinstance(raw_weights, dict):
            issues.append(Violation("error", where, "weights must be a mapping"))
        else:
            try:
                weights = ObjectiveWeights(
                    cognitive=float(raw_weights.get("cognitive", 1.0)),
                    perceptual=float(raw_weights.get("perceptual", 1.0)),
                    eyes_off=float(raw_weights.get("eyes_off", 1.0)),
                )
            except (TypeError, ValueError) as exc:
                issues.append(Violation("error", where, f"bad weights: {exc}"))

    jobs = raw.get("jobs", 1)
    if not isinstance(jobs, int) or jobs < 1:
        issues.append(Violation("error", where, "jobs must be an integer >= 1"))
        jobs = 1

    if issues:
        raise PlanError(issues)
    return ExperimentPlan(
        name=str(raw.get("name", path.stem)),
        scenario_path=scenario_path,
        configurations=configurations,
        master_seeds=seeds,
        trials_per_config=trials,
        trial_length=float(length),
        sa_floor=float(sa_floor) if sa_floor is not None else None,
        budget=budget,
        weights=weights,
        jobs=jobs,
    )
