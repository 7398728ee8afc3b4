"""Command line entry point: ``macrozip run|extract|bounds|replay``.

Exit codes: 0 success, 1 validation or usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from macrozip.bounds import HUFFMAN_DP, format_table, verify_bounds
from macrozip.core import read_trajectories
from macrozip.harness.config import ConfigError, load
from macrozip.harness.pipeline import PipelineError, run_pipeline
from macrozip.harness.report import ReportError, emit_report, load_metrics, plot_mean_curves
from macrozip.huffman import search_huffman
from macrozip.lzw import min_b_limit, search_b_limit

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
OUT_ENV = "MACROZIP_OUT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; route it to our validation code instead
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="macrozip", description="Macro discovery by trajectory compression.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the full pipeline from a TOML config")
    run.add_argument("--config", required=True, help="experiment TOML file")
    run.add_argument("--seed", type=int, action="append", help="override config seeds (repeatable)")
    run.add_argument("--out", help=f"output directory (else ${OUT_ENV}, else the config value)")
    run.add_argument("--workers", type=int, help="override the worker pool size")

    ext = sub.add_parser("extract", help="run the codecs on a trajectory JSONL file")
    ext.add_argument("--input", required=True, help="JSON Lines trajectory corpus")
    ext.add_argument("--codec", choices=("huffman", "lzw", "both"), default="both")
    ext.add_argument("--b-max", type=int, default=6)
    ext.add_argument("--n-max", type=int, default=12)
    ext.add_argument("--l-min", type=int, default=2)
    ext.add_argument("--l-max", type=int, default=5)
    ext.add_argument("--lam", type=float, default=2.0)
    ext.add_argument("--alphabet-size", type=int, help="defaults to 1 + largest action id")

    bnd = sub.add_parser("bounds", help="re-verify the cost bounds from a finished run")
    bnd.add_argument("--artifacts", required=True, help="output directory of a run")

    rep = sub.add_parser("replay", help="re-render the mean curve plot from metrics.csv")
    rep.add_argument("--artifacts", required=True, help="output directory of a run")
    rep.add_argument("--output", help="image path (default: mean_curve_<domain>.png in the artifacts dir)")
    return p


def _cmd_run(args: argparse.Namespace) -> int:
    config = load(args.config)
    changes: dict = {}
    if args.seed:
        changes["seeds"] = list(args.seed)
    if args.workers is not None:
        changes["workers"] = args.workers
    out = args.out or os.environ.get(OUT_ENV) or config.output_dir
    changes["output_dir"] = out
    config = dataclasses.replace(config, **changes)
    try:
        report = run_pipeline(config)
    except PipelineError as exc:
        if exc.partial is not None and exc.partial.extractions:
            emit_report(exc.partial, out)
            print(f"partial artifacts written to {out}", file=sys.stderr)
        raise
    emit_report(report, out)
    print(f"artifacts written to {out}")
    return EXIT_OK


def _cmd_extract(args: argparse.Namespace) -> int:
    corpus = read_trajectories(args.input)
    if not corpus:
        raise ValueError(f"{args.input}: no trajectories")
    if any(t.is_continuous for t in corpus):
        raise ValueError("extract works on discrete corpora; symbolize continuous actions first")
    alphabet = args.alphabet_size or 1 + max(a for t in corpus for a in t.actions)
    out: dict = {}
    if args.codec in ("huffman", "both"):
        h = search_huffman(corpus, args.n_max, args.l_min, args.l_max, args.lam, primitives=range(alphabet))
        out["huffman"] = {
            "n": h.best_n,
            "l": h.best_l,
            "objective": h.objective_value,
            "macros": [{"actions": list(m.actions), "prob": h.distribution[m.id]} for m in h.macros],
            "codebook": h.codebook.to_json(),
        }
    if args.codec in ("lzw", "both"):
        lz = search_b_limit(corpus, max(args.b_max, min_b_limit(alphabet)), args.lam, alphabet)
        out["lzw"] = {
            "b_limit": lz.b_limit,
            "objective": lz.objective_value,
            "codebook": lz.to_codebook().to_json(),
        }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _cmd_bounds(args: argparse.Namespace) -> int:
    root = Path(args.artifacts)
    config = load(root / "config.toml")
    corpora = sorted((root / "corpus").glob("seed*_symbols.jsonl"))
    if not corpora:
        raise ValueError(f"{root}: no symbolized corpora under corpus/")
    alphabets = {e["seed"]: e["alphabet_size"] for e in json.loads((root / "macros.json").read_text())}
    ok = True
    for path in corpora:
        symbols = read_trajectories(path)
        alphabet = alphabets[int(path.stem.split("_")[0][len("seed"):])]
        h = config.huffman
        huff = search_huffman(symbols, h.n_max, h.l_min, h.l_max, h.lam, primitives=range(alphabet))
        lz = search_b_limit(symbols, max(config.lzw.b_max, min_b_limit(alphabet)), config.lzw.lam, alphabet)
        reports = verify_bounds(symbols, huff, lz.codebook, (h.l_min, h.l_max), alphabet)
        print(f"[{path.stem}]")
        print(format_table(reports))
        ok &= all(r.holds is not False for r in reports if r.theorem != HUFFMAN_DP)
    return EXIT_OK if ok else EXIT_RUNTIME


def _cmd_replay(args: argparse.Namespace) -> int:
    root = Path(args.artifacts)
    domain = load(root / "config.toml").domain
    conditions = load_metrics(root / "metrics.csv")
    target = Path(args.output) if args.output else root / f"mean_curve_{domain}.png"
    plot_mean_curves(conditions, target, f"{domain}: mean return per episode")
    print(target)
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "extract": _cmd_extract, "bounds": _cmd_bounds, "replay": _cmd_replay}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (PipelineError, ReportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
