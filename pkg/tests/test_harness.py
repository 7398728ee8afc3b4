from __future__ import annotations

import csv
import json
import math
import os

import pytest

from macrozip.core import Trajectory, write_trajectories
from macrozip.harness import cli
from macrozip.harness.config import (
    ConfigError,
    ExperimentConfig,
    HuffmanGrid,
    MazeSettings,
    config_from_dict,
    config_to_dict,
    dumps,
    loads,
)
from macrozip.harness.pipeline import CONDITIONS, PipelineError, jumpstart, run_pipeline
from macrozip.harness.report import (
    METRICS_HEADER,
    ReportError,
    emit_report,
    load_metrics,
    metrics_csv,
)


def tiny_config(**kw) -> ExperimentConfig:
    base = dict(
        seeds=[0],
        train_task_count=2,
        test_task_count=1,
        episodes=20,
        train_episodes=300,
        maze=MazeSettings(width=10, height=10),
    )
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def tiny_report():
    return run_pipeline(tiny_config())


def test_config_round_trip():
    cfg = ExperimentConfig(domain="mountain_car", seeds=[3, 4], huffman=HuffmanGrid(n_max=5))
    assert loads(dumps(cfg)) == cfg
    assert config_from_dict(config_to_dict(cfg)) == cfg


@pytest.mark.parametrize(
    "text",
    [
        'domain = "chess"',
        "seeds = []",
        "train_task_count = 0",
        "[huffman]\nl_min = 4\nl_max = 2",
        "bogus = 1",
        "[maze]\nwidht = 3",
        "episodes = ",
    ],
)
def test_config_validation(text):
    with pytest.raises(ConfigError):
        loads(text)


def test_jumpstart_window():
    assert jumpstart([1.0] * 10 + [0.0] * 90) == 1.0
    assert jumpstart([4.0, 0.0, 0.0]) == 4.0


def test_pipeline_shapes(tiny_report):
    assert set(tiny_report.conditions) == set(CONDITIONS)
    for result in tiny_report.conditions.values():
        assert result.episodes == 20 and len(result.mean_curve) == 20
    ex = tiny_report.extractions[0]
    assert ex.corpus and all(t.task_id.startswith("s0_train") for t in ex.corpus)
    assert abs(sum(ex.huffman.distribution.values()) - 1) < 1e-9


def test_emit_report_artifacts(tiny_report, tmp_path):
    emit_report(tiny_report, tmp_path)
    for name in ("metrics.csv", "macros.json", "bounds.json", "summary.md", "config.toml", "tasks.json",
                 "mean_curve_maze.png", "corpus/seed0_raw.jsonl", "search/huffman_seed0.csv"):
        assert (tmp_path / name).exists(), name
    rows = list(csv.reader((tmp_path / "metrics.csv").open()))
    assert tuple(rows[0]) == METRICS_HEADER
    assert len(rows) == 1 + len(CONDITIONS) * 1 * 20
    macros = json.loads((tmp_path / "macros.json").read_text())
    assert abs(sum(m["prob"] for m in macros[0]["huffman"]["macros"]) - 1) < 1e-9
    assert abs(sum(m["prob"] for m in macros[0]["lzw"]["macros"]) - 1) < 1e-9
    assert not (tmp_path / "PARTIAL").exists()


def test_metrics_recompute_matches_summary(tiny_report, tmp_path):
    emit_report(tiny_report, tmp_path)
    loaded = load_metrics(tmp_path / "metrics.csv")
    summary = (tmp_path / "summary.md").read_text()
    for cond in CONDITIONS:
        assert loaded[cond].jumpstart == tiny_report.conditions[cond].jumpstart
        assert loaded[cond].total_reward == tiny_report.conditions[cond].total_reward
        row = next(line for line in summary.splitlines() if line.startswith(f"| {cond} |"))
        _, js, total, _ = [c.strip() for c in row.split("|")[1:]]
        assert float(js) == loaded[cond].jumpstart and float(total) == loaded[cond].total_reward


def test_empty_conditions_give_header_only_csv():
    assert metrics_csv({}) == ",".join(METRICS_HEADER) + "\n"


def test_zero_test_tasks(tmp_path):
    report = run_pipeline(tiny_config(test_task_count=0))
    assert report.conditions == {} and report.extractions
    emit_report(report, tmp_path)
    assert (tmp_path / "metrics.csv").read_text() == ",".join(METRICS_HEADER) + "\n"
    assert "No test tasks" in (tmp_path / "summary.md").read_text()


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_directory_fails_before_writing(tiny_report, tmp_path):
    target = tmp_path / "locked"
    target.mkdir()
    target.chmod(0o500)
    try:
        with pytest.raises(ReportError):
            emit_report(tiny_report, target)
        assert list(target.iterdir()) == []
    finally:
        target.chmod(0o700)


def test_file_in_place_of_directory_fails_cleanly(tiny_report, tmp_path):
    blocker = tmp_path / "out"
    blocker.write_text("not a directory")
    with pytest.raises(ReportError):
        emit_report(tiny_report, blocker)
    assert blocker.read_text() == "not a directory"


def test_stage_failure_names_stage():
    cfg = tiny_config(maze=MazeSettings(map_paths=["/nonexistent/x.map"]))
    with pytest.raises(PipelineError) as info:
        run_pipeline(cfg)
    assert info.value.stage == "tasks"
    assert info.value.partial is not None and info.value.partial.partial


def test_partial_report_is_flagged(tiny_report, tmp_path):
    tiny_report.partial = True
    try:
        emit_report(tiny_report, tmp_path)
    finally:
        tiny_report.partial = False
    assert (tmp_path / "PARTIAL").exists()
    assert "PARTIAL RUN" in (tmp_path / "summary.md").read_text()


def test_mountain_car_extraction_is_small(tmp_path):
    report = run_pipeline(ExperimentConfig(domain="mountain_car", train_task_count=3, test_task_count=1, episodes=5))
    ex = report.extractions[0]
    assert ex.registry is not None and 1 <= len(ex.registry) <= 12
    assert all(t.is_continuous for t in ex.corpus)
    assert all(not t.is_continuous for t in ex.symbols)


# ---- CLI -------------------------------------------------------------------


def write_config(tmp_path, **kw) -> str:
    path = tmp_path / "cfg.toml"
    path.write_text(dumps(tiny_config(**kw)))
    return str(path)


def test_cli_run_bounds_replay(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "run"
    assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "metrics.csv").exists()
    (out / "mean_curve_maze.png").unlink()
    assert cli.main(["replay", "--artifacts", str(out)]) == 0
    assert (out / "mean_curve_maze.png").exists()
    code = cli.main(["bounds", "--artifacts", str(out)])
    table = capsys.readouterr().out
    assert "lzw_bits" in table
    checked = [ln for ln in table.splitlines() if ln.split()[:1] in (["preprocessing_steps"], ["huffman_bits"], ["lzw_bits"])]
    assert code == (2 if any(ln.endswith("FAIL") for ln in checked) else 0)


def test_cli_env_override_and_seed(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, test_task_count=0)
    out = tmp_path / "env_out"
    monkeypatch.setenv("MACROZIP_OUT", str(out))
    assert cli.main(["run", "--config", cfg, "--seed", "5"]) == 0
    assert (out / "corpus" / "seed5_raw.jsonl").exists()
    assert loads((out / "config.toml").read_text()).seeds == [5]


def test_cli_extract(tmp_path, capsys):
    path = tmp_path / "t.jsonl"
    write_trajectories([Trajectory(actions=(0, 0, 0, 1, 1, 1) * 4), Trajectory(actions=(1, 1, 1, 0, 0, 0) * 3)], path)
    assert cli.main(["extract", "--input", str(path), "--codec", "lzw", "--b-max", "6"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) == {"lzw"} and out["lzw"]["codebook"]["kind"] == "lzw"
    assert cli.main(["extract", "--input", str(path), "--codec", "both"]) == 0
    assert set(json.loads(capsys.readouterr().out)) == {"huffman", "lzw"}


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["explode"],
        ["run"],
        ["run", "--config", "x.toml", "--bogus"],
        ["extract", "--input", "x", "--codec", "zip"],
    ],
)
def test_cli_usage_errors_exit_1(argv, capsys):
    assert cli.main(argv) == 1
    assert "usage" in capsys.readouterr().err


def test_cli_validation_errors_exit_1(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('domain = "chess"\n')
    assert cli.main(["run", "--config", str(bad)]) == 1
    assert cli.main(["run", "--config", str(tmp_path / "missing.toml")]) == 1
    junk = tmp_path / "junk.jsonl"
    junk.write_text("{not json}\n")
    assert cli.main(["extract", "--input", str(junk)]) == 1


def test_cli_runtime_failure_exits_2(tmp_path):
    cfg = write_config(tmp_path, maze=MazeSettings(map_paths=[str(tmp_path / "nope.map")]))
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_cli_determinism(tmp_path):
    cfg = write_config(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--config", cfg, "--out", str(a)]) == 0
    assert cli.main(["run", "--config", cfg, "--out", str(b)]) == 0
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
    assert not math.isnan(load_metrics(a / "metrics.csv")["huffman"].jumpstart)
