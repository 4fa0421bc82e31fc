from __future__ import annotations

import math
from importlib import resources
from pathlib import Path

import pytest

from hmisim.experiment import (
    Comparison,
    ExperimentPlan,
    MoveRecord,
    NamedConfiguration,
    ObjectivePoint,
    ObjectiveWeights,
    PlanError,
    ReallocateLocation,
    RemoveTask,
    ReplaceDescriptor,
    SerializeSignals,
    _accepts,
    apply_move,
    compare,
    enumerate_moves,
    load_plan,
    local_search,
    objective_point,
    replay_moves,
    run_many,
)
from hmisim.tasks import ConfigurationError
from hmisim.workload import AttentionalChannel

PKG_DATA = Path(str(resources.files("hmisim") / "data"))

THREE_MOVES = [
    ReallocateLocation(task="ad_available_msg", new_location="head_up_display"),
    RemoveTask(task="ad_available_vocal"),
    SerializeSignals(first="tor10_haptic", second="drive_now_vocal"),
]


# ---------------------------------------------------------------------------
# batches and pairing


def test_run_many_returns_results_in_seed_order(demo_config, demo_scenario):
    seeds = [5, 2, 9]
    results = run_many(demo_config, demo_scenario, seeds, trial_length=1000.0)
    assert [m.seed for m in results] == seeds


def test_run_many_parallel_matches_sequential(demo_config, demo_scenario):
    seeds = [1, 2, 3, 4]
    sequential = run_many(demo_config, demo_scenario, seeds, trial_length=1500.0, jobs=1)
    parallel = run_many(demo_config, demo_scenario, seeds, trial_length=1500.0, jobs=4)
    assert sequential == parallel


def test_compare_identical_configs_has_zero_diffs(demo_config, demo_scenario):
    comparison = compare(
        demo_config,
        demo_config,
        demo_scenario,
        seeds=[1, 2, 3],
        trial_length=1000.0,
        name_a="base",
        name_b="same",
    )
    assert comparison.paired_diffs == [(0.0, 0.0, 0.0, 0.0)] * 3
    assert comparison.summary_a.medians == comparison.summary_b.medians
    assert set(comparison.summaries()) == {"base", "same"}
    assert comparison.seeds == [1, 2, 3]


def test_compare_pairs_seeds_one_to_one(demo_config, optimized_config, demo_scenario):
    comparison = compare(
        demo_config, optimized_config, demo_scenario, seeds=[1, 2], trial_length=1000.0
    )
    for i, (a, b) in enumerate(zip(comparison.metrics_a, comparison.metrics_b)):
        assert a.seed == b.seed == comparison.seeds[i]
        diff = comparison.paired_diffs[i]
        assert diff[0] == b.eyes_off_fraction - a.eyes_off_fraction
        assert diff[3] == b.sa_average - a.sa_average


# ---------------------------------------------------------------------------
# objective


def test_weights_validation():
    with pytest.raises(ValueError):
        ObjectiveWeights(cognitive=-1.0)
    with pytest.raises(ValueError):
        ObjectiveWeights(cognitive=0.0, perceptual=0.0, eyes_off=0.0)
    assert ObjectiveWeights(cognitive=0.0, perceptual=2.0, eyes_off=0.0).perceptual == 2.0


def test_objective_point_score_and_finiteness():
    point = ObjectivePoint(1.0, 2.0, 3.0, 80.0)
    assert point.score(ObjectiveWeights()) == 6.0
    assert point.score(ObjectiveWeights(cognitive=2.0, perceptual=0.5, eyes_off=1.0)) == 6.0
    with pytest.raises(ValueError):
        ObjectivePoint(math.nan, 0.0, 0.0, 0.0)


def test_dominates_requires_strict_improvement_somewhere():
    base = ObjectivePoint(1.0, 2.0, 3.0, 80.0)
    assert ObjectivePoint(1.0, 2.0, 2.9, 10.0).dominates(base)  # sa plays no part
    assert ObjectivePoint(0.5, 1.0, 1.0, 80.0).dominates(base)
    assert not ObjectivePoint(1.0, 2.0, 3.0, 99.0).dominates(base)  # equal everywhere
    assert not ObjectivePoint(0.5, 2.5, 1.0, 80.0).dominates(base)  # trade-off
    assert not base.dominates(base)


def test_objective_point_uses_lower_median(demo_config, demo_scenario):
    metrics = run_many(demo_config, demo_scenario, [1, 2, 3, 4], trial_length=800.0)
    point = objective_point(metrics)
    eyes = sorted(m.eyes_off_fraction for m in metrics)
    assert point.eyes_off == eyes[1]  # lower of the two middle values


# ---------------------------------------------------------------------------
# moves


def test_reallocate_updates_location_and_gaze(demo_config):
    moved = apply_move(demo_config, ReallocateLocation("check_navigation", "head_up_display"))
    task = moved.task_map()["check_navigation"]
    assert task.location == "head_up_display"
    assert task.gaze_time == 0.1
    # original untouched
    assert demo_config.task_map()["check_navigation"].location == "central_console"


def test_reallocate_non_visual_task_keeps_zero_gaze(demo_config):
    moved = apply_move(demo_config, ReallocateLocation("tor60_vocal", "instrument_cluster"))
    task = moved.task_map()["tor60_vocal"]
    assert task.location == "instrument_cluster"
    assert task.gaze_time == 0.0


def test_reallocate_to_unknown_element_rejected(demo_config):
    with pytest.raises(ConfigurationError):
        apply_move(demo_config, ReallocateLocation("check_speed", "holographic_dome"))


def test_remove_task(demo_config):
    smaller = apply_move(demo_config, RemoveTask("ad_available_vocal"))
    assert "ad_available_vocal" not in smaller.task_map()
    assert len(smaller.tasks) == len(demo_config.tasks) - 1


def test_remove_trigger_target_rejected(demo_config):
    # ad_available_msg triggers activate_ad; dropping the target dangles
    with pytest.raises(ConfigurationError):
        apply_move(demo_config, RemoveTask("activate_ad"))


def test_serialize_signals_sets_follow_up(demo_config):
    chained = apply_move(demo_config, SerializeSignals("tor10_haptic", "drive_now_vocal"))
    assert chained.task_map()["tor10_haptic"].triggers == "drive_now_vocal"
    assert demo_config.task_map()["tor10_haptic"].triggers is None


def test_serializing_into_a_cycle_rejected(demo_config):
    with pytest.raises(ConfigurationError):
        apply_move(demo_config, SerializeSignals("tor10_haptic", "tor10_haptic"))


def test_replace_descriptor_both_slots(demo_config):
    lighter = apply_move(
        demo_config, ReplaceDescriptor("check_navigation", "cognitive", "Simple association")
    )
    task = lighter.task_map()["check_navigation"]
    assert task.cognitive_descriptor == "Simple association"
    assert task.cognitive_workload == 1.0

    lighter = apply_move(
        demo_config, ReplaceDescriptor("check_navigation", "perceptual", "Detect simple signal")
    )
    task = lighter.task_map()["check_navigation"]
    assert task.perceptual_descriptor == "Detect simple signal"
    assert task.perceptual_workload == 1.0


def test_replace_descriptor_bad_slot_rejected(demo_config):
    with pytest.raises(ConfigurationError):
        apply_move(demo_config, ReplaceDescriptor("check_speed", "emotional", "Sigh"))


def test_unknown_task_in_move_rejected(demo_config):
    with pytest.raises(ConfigurationError):
        apply_move(demo_config, RemoveTask("ghost"))


# ---------------------------------------------------------------------------
# neighborhood


def test_neighborhood_contains_the_bundled_move_set(demo_config, demo_scenario):
    moves = enumerate_moves(demo_config, demo_scenario)
    for move in THREE_MOVES:
        assert move in moves


def test_reallocations_target_only_visual_surfaces(demo_config, demo_scenario):
    tasks = demo_config.task_map()
    reallocs = [m for m in enumerate_moves(demo_config, demo_scenario) if isinstance(m, ReallocateLocation)]
    assert reallocs
    for move in reallocs:
        assert tasks[move.task].perception_type is AttentionalChannel.VISUAL
        destination = demo_config.elements[move.new_location]
        assert destination.on_road or destination.gaze_time > 0
        assert move.new_location != tasks[move.task].location


def test_removals_spare_referenced_tasks(demo_config, demo_scenario):
    removals = {m.task for m in enumerate_moves(demo_config, demo_scenario) if isinstance(m, RemoveTask)}
    assert removals == {
        "ad_available_msg",
        "ad_available_vocal",
        "level_change_msg",
        "tor60_vocal",
        "tor10_haptic",
        "drive_now_vocal",
    }


def test_serializations_are_exactly_the_legal_co_emitted_pairs(demo_config, demo_scenario):
    pairs = {
        (m.first, m.second)
        for m in enumerate_moves(demo_config, demo_scenario)
        if isinstance(m, SerializeSignals)
    }
    # tor10 pair: the vocal already chains take_over, so only the haptic
    # can lead; availability pair: the message already chains activate_ad
    assert pairs == {
        ("tor10_haptic", "drive_now_vocal"),
        ("ad_available_vocal", "ad_available_msg"),
    }


def test_descriptor_swaps_are_strictly_lighter(demo_config, demo_scenario):
    tasks = demo_config.task_map()
    swaps = [m for m in enumerate_moves(demo_config, demo_scenario) if isinstance(m, ReplaceDescriptor)]
    assert swaps
    for move in swaps:
        task = tasks[move.task]
        if move.slot == "cognitive":
            from hmisim.workload import ScaleCategory

            value = demo_config.scale.lookup(ScaleCategory.COGNITIVE, move.descriptor)
            assert value < task.cognitive_workload
        else:
            from hmisim.workload import perceptual_category

            value = demo_config.scale.lookup(
                perceptual_category(task.perception_type), move.descriptor
            )
            assert value < task.perceptual_workload
    # nothing lighter exists below the floor of a scale
    assert not any(m.task == "tor10_haptic" and m.slot == "perceptual" for m in swaps)


def test_replay_moves_reproduces_bundled_optimized_design(demo_config, optimized_config):
    rebuilt = replay_moves(demo_config, THREE_MOVES)
    assert rebuilt.tasks == optimized_config.tasks


# ---------------------------------------------------------------------------
# acceptance rule


def point(cog=1.0, perc=1.0, eyes=1.0, sa=80.0):
    return ObjectivePoint(cog, perc, eyes, sa)


def test_accepts_domination():
    ok, reason = _accepts(point(), point(eyes=0.5), ObjectiveWeights(), sa_floor=50.0)
    assert ok and "dominates" in reason


def test_accepts_weighted_sum_improvement_on_trade_off():
    # worse cognitive, much better eyes-off: not dominating, better sum
    ok, reason = _accepts(point(), point(cog=1.5, eyes=0.1), ObjectiveWeights(), sa_floor=50.0)
    assert ok and "weighted score" in reason


def test_rejects_equal_score():
    ok, _ = _accepts(point(), point(), ObjectiveWeights(), sa_floor=50.0)
    assert not ok


def test_rejects_below_floor_even_when_dominating():
    ok, reason = _accepts(point(sa=80.0), point(eyes=0.0, sa=49.0), ObjectiveWeights(), sa_floor=50.0)
    assert not ok and "below floor" in reason


def test_infeasible_incumbent_accepts_only_awareness_gains():
    incumbent = point(sa=40.0)
    better_sa_worse_objectives = point(cog=9.0, perc=9.0, eyes=9.0, sa=45.0)
    ok, reason = _accepts(incumbent, better_sa_worse_objectives, ObjectiveWeights(), sa_floor=50.0)
    assert ok and "seeking floor" in reason

    better_objectives_same_sa = point(eyes=0.0, sa=40.0)
    ok, reason = _accepts(incumbent, better_objectives_same_sa, ObjectiveWeights(), sa_floor=50.0)
    assert not ok and "does not raise" in reason


def test_weight_vector_steers_the_trade_off():
    current, candidate = point(), point(cog=1.5, eyes=0.9)
    eyes_heavy = ObjectiveWeights(cognitive=0.1, perceptual=1.0, eyes_off=10.0)
    cog_heavy = ObjectiveWeights(cognitive=10.0, perceptual=1.0, eyes_off=0.1)
    assert _accepts(current, candidate, eyes_heavy, sa_floor=0.0)[0]
    assert not _accepts(current, candidate, cog_heavy, sa_floor=0.0)[0]


# ---------------------------------------------------------------------------
# local search


def test_local_search_budget_zero_runs_nothing(scripted_config, scripted_scenario):
    result = local_search(
        scripted_config,
        scripted_scenario,
        seeds=[1],
        trial_length=-123.0,  # would raise if any trial actually ran
        sa_floor=50.0,
        budget=0,
    )
    assert result.config is scripted_config
    assert result.evaluations == 0
    assert result.objective is None and result.initial_objective is None
    assert result.feasible is None
    assert result.log == [] and result.accepted_moves == []
    assert not result.improved()


def test_local_search_validates_floor(scripted_config, scripted_scenario):
    with pytest.raises(ValueError):
        local_search(
            scripted_config, scripted_scenario, [1], 100.0, sa_floor=101.0, budget=1
        )


def test_local_search_finds_the_head_up_reallocation(scripted_config, scripted_scenario):
    result = local_search(
        scripted_config,
        scripted_scenario,
        seeds=[1, 2, 3],
        trial_length=100.0,
        sa_floor=75.0,
        budget=40,
    )
    assert result.accepted_moves == [ReallocateLocation("check_speed", "head_up_display")]
    assert result.initial_objective.eyes_off == 5.6
    assert result.objective.eyes_off == 0.0
    assert result.objective.sa_average == 81.0
    assert result.feasible is True
    assert result.improved()
    # one accepted evaluation plus one full pass over the new neighborhood
    assert 1 < result.evaluations <= 40
    assert sum(r.accepted for r in result.log) == 1
    assert all(isinstance(r, MoveRecord) for r in result.log)
    # the accepted-move log reproduces the returned design
    rebuilt = replay_moves(scripted_config, result.accepted_moves)
    assert rebuilt.tasks == result.config.tasks
    assert result.final_metrics is not None
    assert objective_point(result.final_metrics) == result.objective


def test_local_search_infeasible_start_seeks_awareness(scripted_config, scripted_scenario):
    # The scripted design tops out at SA 81; a floor of 90 is unreachable.
    # Dropping the final-request vibration postpones the level change to
    # the forced downgrade at t=70, which *raises* average awareness to 85
    # (the stale belief is wrong for 30 s instead of 38 s) -> it is the
    # only admissible move, and the search must still report infeasible.
    result = local_search(
        scripted_config,
        scripted_scenario,
        seeds=[1],
        trial_length=100.0,
        sa_floor=90.0,
        budget=40,
    )
    assert result.feasible is False
    assert result.accepted_moves == [RemoveTask("tor10_haptic")]
    assert result.initial_objective.sa_average == 81.0
    assert result.objective.sa_average == 85.0
    rejected_reasons = [r.reason for r in result.log if not r.accepted]
    assert any("does not raise" in reason for reason in rejected_reasons)


def test_local_search_respects_budget(scripted_config, scripted_scenario):
    result = local_search(
        scripted_config,
        scripted_scenario,
        seeds=[1],
        trial_length=100.0,
        sa_floor=0.0,
        budget=3,
    )
    assert result.evaluations <= 3
    assert len(result.log) == result.evaluations


# ---------------------------------------------------------------------------
# experiment plans


def test_bundled_demo_plan_loads(tmp_path):
    plan = load_plan(PKG_DATA / "demo_plan.yaml")
    assert [c.name for c in plan.configurations] == ["base", "optimized"]
    assert plan.master_seeds == list(range(1, 21))
    assert plan.trials_per_config == 20
    assert plan.seeds() == list(range(1, 21))
    assert plan.trial_length == 60_000.0
    assert plan.sa_floor == 75.0
    assert plan.budget == 40
    assert plan.weights == ObjectiveWeights(1.0, 1.0, 1.0)
    # relative paths resolved against the plan's own directory
    assert plan.scenario_path == PKG_DATA / "demo_scenario.yaml"
    assert plan.configurations[0].tasks == PKG_DATA / "demo_tasks.csv"
    config = plan.configurations[0].load()
    assert len(config.tasks) == 12
    assert plan.load_scenario().name == "demo-motorway"


def write_plan(tmp_path, body):
    path = tmp_path / "plan.yaml"
    path.write_text(body)
    return path


MINIMAL_PLAN = """\
scenario: scenario.yaml
configurations:
  - {name: base, tasks: tasks.csv, elements: elements.yaml}
"""


def test_plan_defaults(tmp_path):
    plan = load_plan(write_plan(tmp_path, MINIMAL_PLAN))
    assert plan.name == "plan"
    assert plan.master_seeds == list(range(1, 21))
    assert plan.trials_per_config == 20
    assert plan.trial_length == 60_000.0
    assert plan.sa_floor is None and plan.budget is None
    assert plan.jobs == 1
    assert plan.configurations[0].tasks == tmp_path / "tasks.csv"
    assert plan.configurations[0].scale is None


def test_plan_explicit_seed_list_sets_trial_count(tmp_path):
    plan = load_plan(write_plan(tmp_path, MINIMAL_PLAN + "master_seeds: [11, 7, 5]\n"))
    assert plan.master_seeds == [11, 7, 5]
    assert plan.trials_per_config == 3
    assert plan.seeds() == [11, 7, 5]


def test_plan_seed_shorthand(tmp_path):
    plan = load_plan(
        write_plan(tmp_path, MINIMAL_PLAN + "master_seeds: {first: 100, count: 5}\n")
    )
    assert plan.master_seeds == [100, 101, 102, 103, 104]


def test_plan_trials_can_use_seed_prefix(tmp_path):
    plan = load_plan(
        write_plan(
            tmp_path,
            MINIMAL_PLAN + "master_seeds: [4, 5, 6, 7]\ntrials_per_config: 2\n",
        )
    )
    assert plan.seeds() == [4, 5]


@pytest.mark.parametrize(
    ("extra", "fragment"),
    [
        ("master_seeds: [1]\ntrials_per_config: 5\n", "only 1 master seeds"),
        ("master_seeds: [1, two]\n", "not an integer"),
        ("master_seeds: 7\n", "list or {first, count}"),
        ("master_seeds: {first: 1, count: 0}\n", "count >= 1"),
        ("trial_length: -1\n", "trial_length must be > 0"),
        ("sa_floor: 140\n", "within [0, 100]"),
        ("budget: -3\n", "budget must be an integer >= 0"),
        ("weights: {cognitive: -1}\n", "bad weights"),
        ("jobs: 0\n", "jobs must be an integer >= 1"),
    ],
)
def test_plan_rejects_bad_values(tmp_path, extra, fragment):
    with pytest.raises(PlanError) as err:
        load_plan(write_plan(tmp_path, MINIMAL_PLAN + extra))
    assert fragment in str(err.value)


def test_plan_needs_scenario_and_configurations(tmp_path):
    with pytest.raises(PlanError) as err:
        load_plan(write_plan(tmp_path, "name: empty\n"))
    text = str(err.value)
    assert "at least one configuration" in text
    assert "needs a scenario path" in text


def test_plan_rejects_duplicate_configuration_names(tmp_path):
    body = MINIMAL_PLAN + "  - {name: base, tasks: other.csv, elements: elements.yaml}\n"
    with pytest.raises(PlanError) as err:
        load_plan(write_plan(tmp_path, body))
    assert "duplicate configuration name" in str(err.value)


def test_plan_missing_file(tmp_path):
    with pytest.raises(PlanError) as err:
        load_plan(tmp_path / "absent.yaml")
    assert "plan file not found" in str(err.value)
