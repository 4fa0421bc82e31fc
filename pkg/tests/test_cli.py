from __future__ import annotations

import subprocess
import sys
from importlib import resources
from pathlib import Path

import pytest

from hmisim.cli import main
from hmisim.experiment import ReallocateLocation, apply_move
from hmisim.tasks import write_tasks_csv

DATA = Path(__file__).parent / "data"
PKG_DATA = Path(str(resources.files("hmisim") / "data"))

SCRIPTED = [
    "--tasks", str(DATA / "scripted_tasks.csv"),
    "--elements", str(DATA / "scripted_elements.yaml"),
]
SCRIPTED_SCENARIO = ["--scenario", str(DATA / "scripted_scenario.yaml")]
DEMO = [
    "--tasks", str(PKG_DATA / "demo_tasks.csv"),
    "--elements", str(PKG_DATA / "demo_elements.yaml"),
]


# ---------------------------------------------------------------------------
# validate


def test_validate_ok(capsys):
    code = main(["validate", *DEMO, "--scenario", str(PKG_DATA / "demo_scenario.yaml")])
    out = capsys.readouterr().out
    assert code == 0
    assert "OK: 12 task(s), 7 element(s)" in out


def test_validate_reports_errors(tmp_path, capsys):
    broken = tmp_path / "broken.csv"
    text = (DATA / "scripted_tasks.csv").read_text()
    broken.write_text(text.replace("Priority", "Prio"))
    code = main(["validate", "--tasks", str(broken), "--elements", str(DATA / "scripted_elements.yaml")])
    out = capsys.readouterr().out
    assert code == 1
    assert "missing column 'Priority'" in out
    assert "FAIL:" in out


def test_validate_counts_warnings(tmp_path, capsys):
    noisy = tmp_path / "noisy.csv"
    lines = (DATA / "scripted_tasks.csv").read_text().splitlines()
    rows = [lines[0] + ",Zing"] + [line + ",x" for line in lines[1:]]
    noisy.write_text("\n".join(rows) + "\n")
    code = main(["validate", "--tasks", str(noisy), "--elements", str(DATA / "scripted_elements.yaml")])
    out = capsys.readouterr().out
    assert code == 0
    assert "warning:" in out
    assert "OK: 4 task(s), 4 element(s), 1 warning(s)" in out


def test_validate_missing_file_fails(tmp_path, capsys):
    code = main(["validate", "--tasks", str(tmp_path / "nope.csv"), "--elements", str(DATA / "scripted_elements.yaml")])
    assert code == 1
    assert "not found" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# run / export-trace


def run_args(out_dir, seed=1):
    return [
        "run", *SCRIPTED, *SCRIPTED_SCENARIO,
        "--seed", str(seed), "--length", "100", "--out", str(out_dir),
    ]


def test_run_writes_artifacts_and_prints_indicators(tmp_path, capsys):
    code = main(run_args(tmp_path))
    out = capsys.readouterr().out
    assert code == 0
    assert "eyes_off_pct=5.6" in out
    assert "sa_avg_pct=81.0" in out
    for name in ("metrics.csv", "trace.jsonl", "task_counts.csv"):
        assert (tmp_path / name).exists()
    counts = (tmp_path / "task_counts.csv").read_text()
    assert "check_speed,4,4,0,0" in counts


def test_run_twice_is_byte_identical(tmp_path, capsys):
    assert main(run_args(tmp_path / "one")) == 0
    assert main(run_args(tmp_path / "two")) == 0
    capsys.readouterr()
    for name in ("metrics.csv", "trace.jsonl", "task_counts.csv"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_run_bad_length_is_validation_failure(tmp_path, capsys):
    code = main([
        "run", *SCRIPTED, *SCRIPTED_SCENARIO,
        "--length", "-5", "--out", str(tmp_path),
    ])
    assert code == 1
    assert "trial length must be > 0" in capsys.readouterr().err


def test_run_missing_scenario_file(tmp_path, capsys):
    code = main([
        "run", *SCRIPTED, "--scenario", str(tmp_path / "ghost.yaml"),
        "--out", str(tmp_path),
    ])
    assert code == 1
    assert "scenario file not found" in capsys.readouterr().err


def test_out_dir_env_default(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("HMISIM_OUT_DIR", str(tmp_path / "from_env"))
    code = main(["run", *SCRIPTED, *SCRIPTED_SCENARIO, "--seed", "1", "--length", "100"])
    capsys.readouterr()
    assert code == 0
    assert (tmp_path / "from_env" / "trace.jsonl").exists()


def test_export_trace(tmp_path, capsys):
    code = main([
        "export-trace", *SCRIPTED, *SCRIPTED_SCENARIO,
        "--seed", "1", "--length", "100", "--out", str(tmp_path),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "trace records" in out
    assert (tmp_path / "trace.jsonl").exists()
    timeline = (tmp_path / "timeline.csv").read_text().splitlines()
    assert timeline[0] == "time,kind,task,cognitive_sum,perceptual_sum,awareness,level,road_max"
    assert len(timeline) > 10


# ---------------------------------------------------------------------------
# compare


@pytest.fixture()
def hud_variant(tmp_path_factory, scripted_config):
    """Scripted catalog with the speed check moved onto the windshield."""
    moved = apply_move(scripted_config, ReallocateLocation("check_speed", "head_up_display"))
    path = tmp_path_factory.mktemp("variant") / "hud_tasks.csv"
    write_tasks_csv(moved, path)
    return path


def test_compare_via_flags(tmp_path, capsys, hud_variant):
    code = main([
        "compare", *SCRIPTED, "--tasks-b", str(hud_variant), *SCRIPTED_SCENARIO,
        "--seed", "1", "--trials", "3", "--length", "100",
        "--out", str(tmp_path),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "scripted_tasks: trials=3" in out
    assert "hud_tasks: trials=3" in out
    for name in ("summary.csv", "scatter.csv", "paired.csv"):
        assert (tmp_path / name).exists()
    paired = (tmp_path / "paired.csv").read_text().splitlines()
    assert paired[0] == "seed,d_eyes_off_pct,d_cog_overload_pct,d_perc_overload_pct,d_sa_avg_pct"
    assert len(paired) == 4
    # moving the only off-road glance task erases all eyes-off time
    assert paired[1].startswith("1,-5.6,")


def test_compare_needs_inputs(capsys):
    code = main(["compare", "--tasks", "x.csv"])
    assert code == 2
    assert "usage error: compare needs" in capsys.readouterr().err


def test_compare_via_plan(tmp_path, capsys):
    code = main([
        "compare", "--plan", str(PKG_DATA / "demo_plan.yaml"),
        "--trials", "2", "--length", "600",
        "--out", str(tmp_path),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "base: trials=2" in out
    assert "optimized: trials=2" in out
    assert len((tmp_path / "paired.csv").read_text().splitlines()) == 3
    scatter = (tmp_path / "scatter.csv").read_text().splitlines()
    assert scatter[0].startswith("config,seed,")
    assert len(scatter) == 5  # two designs x two seeds


def test_compare_seeds_file(tmp_path, capsys, hud_variant):
    seeds_file = tmp_path / "seeds.txt"
    seeds_file.write_text("# paired seeds\n7\n9\n")
    code = main([
        "compare", *SCRIPTED, "--tasks-b", str(hud_variant), *SCRIPTED_SCENARIO,
        "--seeds-file", str(seeds_file), "--length", "100",
        "--out", str(tmp_path),
    ])
    assert code == 0
    paired = (tmp_path / "paired.csv").read_text().splitlines()
    assert [line.split(",")[0] for line in paired[1:]] == ["7", "9"]
    capsys.readouterr()


def test_bad_seeds_file(tmp_path, capsys, hud_variant):
    seeds_file = tmp_path / "seeds.txt"
    seeds_file.write_text("seven\n")
    code = main([
        "compare", *SCRIPTED, "--tasks-b", str(hud_variant), *SCRIPTED_SCENARIO,
        "--seeds-file", str(seeds_file), "--out", str(tmp_path),
    ])
    assert code == 1
    assert "not an integer seed" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# optimize


def test_optimize_budget_zero_is_a_dry_run(tmp_path, capsys, scripted_config):
    code = main([
        "optimize", *SCRIPTED, *SCRIPTED_SCENARIO,
        "--sa-floor", "75", "--budget", "0",
        "--seed", "1", "--trials", "1", "--length", "100",
        "--out", str(tmp_path),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "budget 0: no simulations run, design unchanged" in out
    expected = tmp_path / "expected.csv"
    write_tasks_csv(scripted_config, expected)
    assert (tmp_path / "optimized_tasks.csv").read_bytes() == expected.read_bytes()
    assert "# budget 0" in (tmp_path / "moves.log").read_text()
    assert not (tmp_path / "summary.csv").exists()


def test_optimize_requires_floor_and_budget(capsys):
    code = main([
        "optimize", *SCRIPTED, *SCRIPTED_SCENARIO, "--budget", "4",
    ])
    assert code == 2
    assert "needs --sa-floor" in capsys.readouterr().err

    code = main([
        "optimize", *SCRIPTED, *SCRIPTED_SCENARIO, "--sa-floor", "75",
    ])
    assert code == 2
    assert "needs --budget" in capsys.readouterr().err


def test_optimize_runs_the_search(tmp_path, capsys):
    code = main([
        "optimize", *SCRIPTED, *SCRIPTED_SCENARIO,
        "--sa-floor", "75", "--budget", "40", "--weights", "1,1,1",
        "--seed", "1", "--trials", "2", "--length", "100",
        "--out", str(tmp_path),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "accepted: reallocate check_speed to head_up_display" in out
    assert "feasible" in out
    assert "head_up_display" in (tmp_path / "optimized_tasks.csv").read_text()
    log = (tmp_path / "moves.log").read_text()
    assert "accepted: reallocate check_speed to head_up_display" in log
    assert "# final:" in log
    for name in ("summary.csv", "scatter.csv"):
        lines = (tmp_path / name).read_text().splitlines()
        assert lines[1].startswith("initial,")
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[2].startswith("optimized,")


def test_optimize_via_plan_budget_flag_overrides(tmp_path, capsys):
    code = main([
        "optimize", "--plan", str(PKG_DATA / "demo_plan.yaml"),
        "--budget", "0", "--out", str(tmp_path),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "budget 0" in out
    assert (tmp_path / "optimized_tasks.csv").exists()
    assert not (tmp_path / "summary.csv").exists()


def test_optimize_bad_weights(capsys, tmp_path):
    code = main([
        "optimize", *SCRIPTED, *SCRIPTED_SCENARIO,
        "--sa-floor", "75", "--budget", "0", "--weights", "1,2",
        "--out", str(tmp_path),
    ])
    assert code == 2
    assert "usage error: --weights needs exactly three" in capsys.readouterr().err


def test_optimize_bad_floor_is_runtime_error(capsys, tmp_path):
    code = main([
        "optimize", *SCRIPTED, *SCRIPTED_SCENARIO,
        "--sa-floor", "150", "--budget", "1",
        "--seed", "1", "--trials", "1", "--length", "100",
        "--out", str(tmp_path),
    ])
    assert code == 2
    assert "error: ValueError" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# process-level smoke test


def test_module_invocation_round_trip(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "hmisim.cli", "run", *SCRIPTED, *SCRIPTED_SCENARIO,
         "--seed", "3", "--length", "100", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert result.returncode == 0, result.stderr
    assert "eyes_off_pct=5.6" in result.stdout
    assert (tmp_path / "trace.jsonl").exists()


def test_unknown_subcommand_exits_via_argparse():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
