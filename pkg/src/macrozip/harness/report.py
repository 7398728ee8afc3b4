"""Write run artifacts: metrics CSV, codebooks, bounds, corpora, plots and a summary."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from collections.abc import Sequence
from pathlib import Path

from macrozip.agent import EpisodeStats
from macrozip.bounds import format_table, reports_to_json
from macrozip.core import Trajectory
from macrozip.envs.maze import ACTION_NAMES
from macrozip.envs.movingai import dump_map
from macrozip.harness.config import dumps as config_dumps
from macrozip.harness.pipeline import CONDITIONS, ConditionResult, ExperimentReport, SeedExtraction

METRICS_HEADER = ("condition", "task", "episode", "return", "steps")
CURVE_HEADER = ("episode", "return", "steps", "reached_goal")
COLORS = {"primitives": "black", "random_macros": "green", "huffman": "red", "lzw": "blue"}


class ReportError(OSError):
    pass


def _num(x: float) -> str:
    # repr round-trips exactly, so recomputed metrics match the summary bit for bit
    return repr(float(x)) if not float(x).is_integer() else str(int(x))


def ensure_writable(directory: str | Path) -> Path:
    """Create ``directory`` if needed and prove it accepts files, before anything is written."""
    path = Path(directory)
    try:
        path.mkdir(parents=True, exist_ok=True)
        fd, probe = tempfile.mkstemp(dir=path, prefix=".probe")
        os.close(fd)
        os.unlink(probe)
    except OSError as exc:
        raise ReportError(f"output directory {path} is not writable: {exc}") from exc
    return path


def metrics_csv(conditions: dict[str, ConditionResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    for cond in CONDITIONS:
        result = conditions.get(cond)
        if result is None:
            continue
        for task_id, curve in result.curves.items():
            for e in curve:
                w.writerow((cond, task_id, e.episode, _num(e.ret), e.steps))
    return buf.getvalue()


def learning_curve_csv(curve: Sequence[EpisodeStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for e in curve:
        w.writerow((e.episode, _num(e.ret), e.steps, int(e.reached_goal)))
    return buf.getvalue()


def load_metrics(path: str | Path) -> dict[str, ConditionResult]:
    """Rebuild condition results from a metrics.csv file."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != METRICS_HEADER:
            raise ValueError(f"{path}: expected header {','.join(METRICS_HEADER)}")
        out: dict[str, ConditionResult] = {}
        for lineno, row in enumerate(reader, 2):
            try:
                cond, task, episode, ret, steps = row
                stats = EpisodeStats(int(episode), float(ret), int(steps), False)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            out.setdefault(cond, ConditionResult(cond)).curves.setdefault(task, []).append(stats)
    return out


def _macro_label(actions: Sequence, domain: str) -> str:
    if domain == "maze":
        return "".join(ACTION_NAMES[a] for a in actions)
    return " ".join(f"c{a}" for a in actions)


def macros_json(ex: SeedExtraction, domain: str) -> dict:
    h, lz = ex.huffman, ex.lzw
    out = {
        "seed": ex.seed,
        "alphabet_size": ex.alphabet_size,
        "huffman": {
            "n": h.best_n,
            "l": h.best_l,
            "objective": h.objective_value,
            "macros": [
                {"id": m.id, "actions": list(m.actions), "label": _macro_label(m.actions, domain),
                 "prob": h.distribution[m.id]}
                for m in h.macros
            ],
            "codebook": h.codebook.to_json(),
        },
        "lzw": {
            "b_limit": lz.b_limit,
            "objective": lz.objective_value,
            "macros": [
                {"actions": list(e), "label": _macro_label(e, domain), "prob": lz.distribution[e]}
                for e in lz.macros
            ],
            "codebook": lz.to_codebook().to_json(),
        },
        "compression": ex.compression,
    }
    if ex.registry is not None:
        out["clusters"] = ex.registry.to_json()
    return out


def plot_mean_curves(conditions: dict[str, ConditionResult], path: str | Path, title: str = "") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for cond in CONDITIONS:
        result = conditions.get(cond)
        if result is None or not result.curves:
            continue
        ax.plot(result.mean_curve, color=COLORS[cond], label=cond, linewidth=1.2)
    ax.set_xlabel("episode")
    ax.set_ylabel("mean return")
    if title:
        ax.set_title(title)
    if ax.lines:
        ax.legend(loc="lower right")
    fig.tight_layout()
    # fixed metadata keeps the PNG bytes stable across runs
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else _num(x)


def summary_md(report: ExperimentReport) -> str:
    cfg = report.config
    lines = [f"# Run summary: {cfg.domain}", ""]
    if report.partial:
        lines += ["**PARTIAL RUN**: a stage failed; only completed seeds are included.", ""]
    lines += [
        f"- seeds: {', '.join(str(s) for s in cfg.seeds)}",
        f"- tasks per seed: {cfg.train_task_count} train, {cfg.test_task_count} test",
        f"- episodes per test task: {cfg.episodes} (the training budget is reused for evaluation)",
        "",
        "## Conditions",
        "",
    ]
    if report.conditions:
        lines += ["| condition | jumpstart | total_reward |", "|---|---|---|"]
        for cond in CONDITIONS:
            r = report.conditions[cond]
            lines.append(f"| {cond} | {_fmt(r.jumpstart)} | {_fmt(r.total_reward)} |")
        lines += ["", "Per task jumpstart:", "", "| task | " + " | ".join(CONDITIONS) + " |",
                  "|---" * (len(CONDITIONS) + 1) + "|"]
        for task in report.conditions[CONDITIONS[0]].curves:
            row = [_fmt(report.conditions[c].task_jumpstart(task)) for c in CONDITIONS]
            lines.append(f"| {task} | " + " | ".join(row) + " |")
    else:
        lines.append("No test tasks were evaluated.")
    lines.append("")
    for ex in report.extractions:
        lines += [f"## Seed {ex.seed}", ""]
        lines.append(f"- corpus: {len(ex.corpus)} trajectories, alphabet {ex.alphabet_size}")
        lines.append(f"- huffman: n={ex.huffman.best_n}, l={ex.huffman.best_l}")
        lines.append(f"- lzw: b_limit={ex.lzw.b_limit}, {len(ex.lzw.codebook.grown)} grown entries")
        for k, v in ex.compression.items():
            lines.append(f"- {k}: {v:.3f}")
        lines += ["", "```", format_table(ex.bounds), "```", ""]
    return "\n".join(lines)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _jsonl(trajs: Sequence[Trajectory]) -> str:
    return "".join(json.dumps(t.to_json()) + "\n" for t in trajs)


def emit_report(report: ExperimentReport, directory: str | Path) -> list[Path]:
    """Write every artifact of ``report`` under ``directory`` and return the paths."""
    root = ensure_writable(directory)
    written: list[Path] = []

    def put(rel: str, text: str) -> None:
        path = root / rel
        _write(path, text)
        written.append(path)

    domain = report.config.domain
    put("config.toml", config_dumps(report.config))
    put("metrics.csv", metrics_csv(report.conditions))
    put("macros.json", json.dumps([macros_json(ex, domain) for ex in report.extractions], indent=2) + "\n")
    put("bounds.json", reports_to_json([r for ex in report.extractions for r in ex.bounds]) + "\n")
    tasks = []
    for ex in report.extractions:
        put(f"corpus/seed{ex.seed}_raw.jsonl", _jsonl(ex.corpus))
        put(f"corpus/seed{ex.seed}_symbols.jsonl", _jsonl(ex.symbols))
        put(f"search/huffman_seed{ex.seed}.csv", ex.huffman.report_csv())
        put(f"search/lzw_seed{ex.seed}.csv", ex.lzw.report_csv())
        for name, grid in ex.maps.items():
            if not os.path.isabs(name):
                put(name, dump_map(grid))
        tasks += [dict(t.manifest(), role="train") for t in ex.train_tasks]
        tasks += [dict(t.manifest(), role="test") for t in ex.test_tasks]
    put("tasks.json", json.dumps(tasks, indent=2) + "\n")
    for cond, result in report.conditions.items():
        for task_id, curve in result.curves.items():
            put(f"curves/{cond}/{task_id}.csv", learning_curve_csv(curve))
    plot = root / f"mean_curve_{domain}.png"
    plot_mean_curves(report.conditions, plot, f"{domain}: mean return per episode")
    written.append(plot)
    put("summary.md", summary_md(report))
    if report.partial:
        put("PARTIAL", "run aborted before all seeds completed\n")
    return written
