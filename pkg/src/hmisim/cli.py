"""Command-line entry point.

Five subcommands cover the workflow end to end::

    hmisim validate      check a task catalog (and optionally a scenario)
    hmisim run           one seeded trial -> metrics.csv, trace.jsonl, task_counts.csv
    hmisim compare       paired A/B batch -> summary.csv, scatter.csv, paired.csv
    hmisim optimize      local search -> moves.log, optimized_tasks.csv, summary.csv, scatter.csv
    hmisim export-trace  one seeded trial -> trace.jsonl + plot-ready timeline.csv

Every subcommand is deterministic given its flags, files and seeds.
Exit codes: 0 success, 1 validation failure, 2 runtime/usage failure.
The default output directory comes from ``$HMISIM_OUT_DIR`` (falling
back to the current directory).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .experiment import (
    DEFAULT_TRIAL_LENGTH,
    DEFAULT_TRIALS,
    ExperimentPlan,
    ObjectiveWeights,
    SearchResult,
    compare,
    load_plan,
    local_search,
)
from .metrics import (
    METRICS_CSV_HEADER,
    aggregate,
    write_counts_csv,
    write_metrics_csv,
    write_paired_csv,
    write_scatter_csv,
    write_summary_csv,
    write_timeline_csv,
    write_trace,
)
from .scenario import cross_validate, load_scenario
from .tasks import Configuration, ConfigurationError, Violation, load_configuration, write_tasks_csv
from .trial import run_trial


class UsageError(Exception):
    """Flags/plan combination does not form a runnable invocation."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmisim",
        description="Discrete-event simulation of driver-cockpit interaction "
        "under adaptive vehicle automation.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="subcommand")

    def add_config_flags(p: argparse.ArgumentParser, required: bool) -> None:
        p.add_argument("--tasks", help="task catalog CSV", required=required)
        p.add_argument("--elements", help="interface element catalog YAML", required=required)
        p.add_argument("--scale", help="workload scale overrides YAML (optional)")

    def add_out_flag(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--out",
            default=os.environ.get("HMISIM_OUT_DIR", "."),
            help="output directory (default: $HMISIM_OUT_DIR or the current directory)",
        )

    p_validate = sub.add_parser("validate", help="validate a configuration (and scenario)")
    add_config_flags(p_validate, required=True)
    p_validate.add_argument("--scenario", help="scenario YAML to cross-validate (optional)")
    p_validate.set_defaults(handler=_cmd_validate)

    p_run = sub.add_parser("run", help="run one seeded trial and write its artifacts")
    add_config_flags(p_run, required=True)
    p_run.add_argument("--scenario", required=True, help="scenario YAML")
    p_run.add_argument("--seed", type=int, default=1, help="master seed (default 1)")
    p_run.add_argument(
        "--length", type=float, default=DEFAULT_TRIAL_LENGTH,
        help=f"trial length in seconds (default {DEFAULT_TRIAL_LENGTH:g})",
    )
    add_out_flag(p_run)
    p_run.set_defaults(handler=_cmd_run)

    p_export = sub.add_parser("export-trace", help="run one trial, export trace + timeline CSV")
    add_config_flags(p_export, required=True)
    p_export.add_argument("--scenario", required=True, help="scenario YAML")
    p_export.add_argument("--seed", type=int, default=1, help="master seed (default 1)")
    p_export.add_argument(
        "--length", type=float, default=DEFAULT_TRIAL_LENGTH,
        help=f"trial length in seconds (default {DEFAULT_TRIAL_LENGTH:g})",
    )
    add_out_flag(p_export)
    p_export.set_defaults(handler=_cmd_export_trace)

    p_compare = sub.add_parser("compare", help="paired A/B comparison of two designs")
    p_compare.add_argument("--plan", help="experiment plan YAML (first two configurations)")
    add_config_flags(p_compare, required=False)
    p_compare.add_argument("--tasks-b", help="task catalog CSV of the second design")
    p_compare.add_argument("--scenario", help="scenario YAML")
    _add_batch_flags(p_compare)
    add_out_flag(p_compare)
    p_compare.set_defaults(handler=_cmd_compare)

    p_opt = sub.add_parser("optimize", help="local search over design moves")
    p_opt.add_argument("--plan", help="experiment plan YAML (first configuration)")
    add_config_flags(p_opt, required=False)
    p_opt.add_argument("--scenario", help="scenario YAML")
    p_opt.add_argument(
        "--sa-floor", type=float,
        help="median situation-awareness floor in percent (required here or in the plan)",
    )
    p_opt.add_argument(
        "--budget", type=int,
        help="candidate evaluation budget (required here or in the plan)",
    )
    p_opt.add_argument(
        "--weights",
        help="objective weights as 'COGNITIVE,PERCEPTUAL,EYES_OFF' (default 1,1,1)",
    )
    _add_batch_flags(p_opt)
    add_out_flag(p_opt)
    p_opt.set_defaults(handler=_cmd_optimize)

    return parser


def _add_batch_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="first master seed (seeds count up from it)")
    p.add_argument("--seeds-file", help="file with one master seed per line")
    p.add_argument("--trials", type=int, help=f"trials per design (default {DEFAULT_TRIALS})")
    p.add_argument("--length", type=float, help=f"trial length in seconds (default {DEFAULT_TRIAL_LENGTH:g})")
    p.add_argument("--jobs", type=int, help="worker processes for trial fan-out (default 1)")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ConfigurationError as exc:
        print(exc, file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure: stable exit contract
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


# ---------------------------------------------------------------------------
# handlers

def _cmd_validate(args: argparse.Namespace) -> int:
    issues: list[Violation] = []
    config: Configuration | None = None
    try:
        config = load_configuration(args.tasks, args.elements, args.scale)
        issues.extend(config.warnings)
    except ConfigurationError as exc:
        issues.extend(exc.violations)
    scenario = None
    if args.scenario:
        try:
            scenario = load_scenario(args.scenario)
        except ConfigurationError as exc:
            issues.extend(exc.violations)
    if config is not None and scenario is not None:
        issues.extend(cross_validate(scenario, config))
    for violation in issues:
        print(violation)
    errors = sum(1 for v in issues if v.severity == "error")
    if errors:
        print(f"FAIL: {errors} error(s), {len(issues) - errors} warning(s)")
        return 1
    suffix = f", {len(issues)} warning(s)" if issues else ""
    assert config is not None
    print(f"OK: {len(config.tasks)} task(s), {len(config.elements)} element(s){suffix}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_configuration(args.tasks, args.elements, args.scale)
    scenario = load_scenario(args.scenario)
    result = run_trial(config, scenario, args.seed, args.length)
    out = _out_dir(args)
    write_metrics_csv([result.metrics], out / "metrics.csv")
    write_trace(result.records, out / "trace.jsonl")
    write_counts_csv(result.metrics.per_task_counts, out / "task_counts.csv")
    for name, value in zip(METRICS_CSV_HEADER[1:], result.metrics.indicator_row()):
        print(f"{name}={value!r}")
    return 0


def _cmd_export_trace(args: argparse.Namespace) -> int:
    config = load_configuration(args.tasks, args.elements, args.scale)
    scenario = load_scenario(args.scenario)
    result = run_trial(config, scenario, args.seed, args.length)
    out = _out_dir(args)
    write_trace(result.records, out / "trace.jsonl")
    write_timeline_csv(result.records, out / "timeline.csv")
    print(f"{len(result.records)} trace records -> {out / 'trace.jsonl'}, {out / 'timeline.csv'}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    plan = load_plan(args.plan) if args.plan else None
    if plan is not None:
        if len(plan.configurations) < 2:
            raise UsageError("compare needs a plan with at least two configurations")
        named_a, named_b = plan.configurations[0], plan.configurations[1]
        config_a, config_b = named_a.load(), named_b.load()
        scenario = plan.load_scenario()
        name_a, name_b = named_a.name, named_b.name
    else:
        if not (args.tasks and args.tasks_b and args.elements and args.scenario):
            raise UsageError("compare needs --plan or --tasks/--tasks-b/--elements/--scenario")
        config_a = load_configuration(args.tasks, args.elements, args.scale)
        config_b = load_configuration(args.tasks_b, args.elements, args.scale)
        scenario = load_scenario(args.scenario)
        name_a, name_b = Path(args.tasks).stem, Path(args.tasks_b).stem
        if name_a == name_b:
            name_a, name_b = "A", "B"
    seeds, length, jobs = _batch_settings(args, plan)

    result = compare(
        config_a, config_b, scenario, seeds, length, jobs=jobs, name_a=name_a, name_b=name_b
    )
    out = _out_dir(args)
    write_summary_csv(result.summaries(), out / "summary.csv")
    write_scatter_csv(result.summaries(), out / "scatter.csv")
    write_paired_csv(result.seeds, result.paired_diffs, out / "paired.csv")
    for name, summary in result.summaries().items():
        medians = " ".join(f"{k}={summary.medians[k]!r}" for k in METRICS_CSV_HEADER[1:])
        print(f"{name}: trials={summary.trials} {medians}")
    return 0


def _cmd_optimize(args: argparse.Namespace) -> int:
    plan = load_plan(args.plan) if args.plan else None
    if plan is not None:
        named = plan.configurations[0]
        config = named.load()
        scenario = plan.load_scenario()
    else:
        if not (args.tasks and args.elements and args.scenario):
            raise UsageError("optimize needs --plan or --tasks/--elements/--scenario")
        config = load_configuration(args.tasks, args.elements, args.scale)
        scenario = load_scenario(args.scenario)
    seeds, length, jobs = _batch_settings(args, plan)

    sa_floor = args.sa_floor if args.sa_floor is not None else (plan.sa_floor if plan else None)
    if sa_floor is None:
        raise UsageError("optimize needs --sa-floor (there is no endorsed default)")
    budget = args.budget if args.budget is not None else (plan.budget if plan else None)
    if budget is None:
        raise UsageError("optimize needs --budget (candidate evaluation limit)")
    if args.weights is not None:
        weights = _parse_weights(args.weights)
    else:
        weights = plan.weights if plan else ObjectiveWeights()

    result = local_search(
        config, scenario, seeds, length,
        sa_floor=sa_floor, budget=budget, weights=weights, jobs=jobs,
    )
    out = _out_dir(args)
    write_tasks_csv(result.config, out / "optimized_tasks.csv")
    _write_moves_log(result, out / "moves.log", sa_floor, budget, weights)
    if result.initial_metrics is not None and result.final_metrics is not None:
        summaries = {
            "initial": aggregate(result.initial_metrics),
            "optimized": aggregate(result.final_metrics),
        }
        write_summary_csv(summaries, out / "summary.csv")
        write_scatter_csv(summaries, out / "scatter.csv")

    if result.evaluations == 0:
        print("budget 0: no simulations run, design unchanged")
        return 0
    for record in result.log:
        if record.accepted:
            print(record.describe())
    assert result.objective is not None and result.initial_objective is not None
    print(
        f"{result.evaluations} candidate evaluation(s), {len(result.accepted_moves)} accepted move(s); "
        f"weighted score {result.initial_objective.score(weights)!r} -> {result.objective.score(weights)!r}, "
        f"median sa {result.objective.sa_average!r} (floor {sa_floor:g}, "
        f"{'feasible' if result.feasible else 'infeasible'})"
    )
    return 0


# ---------------------------------------------------------------------------
# shared plumbing

def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_seeds_file(path: str) -> list[int]:
    seeds: list[int] = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigurationError(
            [Violation("error", path, "seeds file not found")]
        ) from None
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            seeds.append(int(line))
        except ValueError:
            raise ConfigurationError(
                [Violation("error", f"{path} line {line_no}", f"not an integer seed: {line!r}")]
            ) from None
    if not seeds:
        raise ConfigurationError([Violation("error", path, "seeds file holds no seeds")])
    return seeds


def _batch_settings(
    args: argparse.Namespace, plan: ExperimentPlan | None
) -> tuple[list[int], float, int]:
    """Resolve (seeds, trial length, jobs); flags override the plan."""
    if args.seeds_file:
        seeds = _read_seeds_file(args.seeds_file)
    elif args.seed is not None:
        trials = args.trials or (plan.trials_per_config if plan else DEFAULT_TRIALS)
        seeds = list(range(args.seed, args.seed + trials))
    elif plan is not None:
        seeds = list(plan.master_seeds)
    else:
        trials = args.trials or DEFAULT_TRIALS
        seeds = list(range(1, trials + 1))
    trials = args.trials or (plan.trials_per_config if plan else len(seeds))
    if len(seeds) < trials:
        raise ConfigurationError(
            [Violation("error", "seeds", f"{trials} trials need {trials} seeds, got {len(seeds)}")]
        )
    seeds = seeds[:trials]
    length = args.length if args.length is not None else (plan.trial_length if plan else DEFAULT_TRIAL_LENGTH)
    if length <= 0:
        raise ConfigurationError([Violation("error", "trials", f"trial length must be > 0, got {length}")])
    jobs = args.jobs if args.jobs is not None else (plan.jobs if plan else 1)
    if jobs < 1:
        raise ConfigurationError([Violation("error", "trials", f"jobs must be >= 1, got {jobs}")])
    return seeds, float(length), jobs


def _parse_weights(text: str) -> ObjectiveWeights:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError("--weights needs exactly three comma-separated numbers")
    try:
        cognitive, perceptual, eyes = (float(p) for p in parts)
        return ObjectiveWeights(cognitive=cognitive, perceptual=perceptual, eyes_off=eyes)
    except ValueError as exc:
        raise UsageError(f"bad --weights: {exc}") from None


def _write_moves_log(
    result: SearchResult, path: Path, sa_floor: float, budget: int, weights: ObjectiveWeights
) -> None:
    def describe_point(point) -> str:
        return (
            f"cog={point.cognitive_overload!r} perc={point.perceptual_overload!r} "
            f"eyes={point.eyes_off!r} sa={point.sa_average!r} "
            f"(weighted score {point.score(weights)!r})"
        )

    lines = [
        f"# local search: budget {budget}, sa floor {sa_floor:g}, "
        f"weights cog={weights.cognitive:g} perc={weights.perceptual:g} eyes={weights.eyes_off:g}",
    ]
    if result.initial_objective is None:
        lines.append("# budget 0: no evaluations, design unchanged")
    else:
        lines.append(f"# initial: {describe_point(result.initial_objective)}")
        if result.initial_objective.sa_average < sa_floor:
            lines.append(
                f"# initial design infeasible: sa {result.initial_objective.sa_average!r} "
                f"below floor {sa_floor:g}; seeking feasibility first"
            )
        lines.extend(record.describe() for record in result.log)
        assert result.objective is not None
        lines.append(f"# final: {describe_point(result.objective)}")
        lines.append(
            f"# {result.evaluations} candidate evaluation(s), "
            f"{len(result.accepted_moves)} accepted move(s), "
            f"{'feasible' if result.feasible else 'infeasible'}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    raise SystemExit(main())
