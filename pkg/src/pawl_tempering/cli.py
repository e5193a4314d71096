"""Command-line entry point: ``run``, ``bench`` and ``report``.

Exit codes: 0 success, 1 configuration error, 2 runtime contract violation.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .config import ConfigError, RunConfig, load_config
from .engine import NoColdSamplesError, Sampler

logger = logging.getLogger("pawl_tempering")

DESK_REPLICATES = 100
PAPER_REPLICATES = 1000
DEFAULT_N_GRID = (1_000, 10_000, 100_000)


def _n_grid(text: str) -> list[int]:
    try:
        grid = [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --n-grid {text!r}") from None
    if not grid or min(grid) < 1:
        raise argparse.ArgumentTypeError("--n-grid needs positive integers")
    return grid


def _base_config(args) -> RunConfig:
    return load_config(args.config) if args.config else RunConfig()


def cmd_run(args) -> int:
    config = _base_config(args)
    if args.seed is not None:
        config = config.with_(seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sampler = Sampler(config, record=True).run()
    with open(out / "trace.csv", "w") as fh:
        sampler.trace().write_csv(fh)
    summary = sampler.summary()
    if summary.cold_samples == 0:
        raise NoColdSamplesError("no T=1 samples; the run never visited the cold rung")
    text = summary.to_text()
    (out / "summary.txt").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_bench(args) -> int:
    base = _base_config(args)
    if args.variants:
        names = [v.strip() for v in args.variants.split(",") if v.strip()]
    elif args.figure:
        names = list(harness.FIGURES[args.figure])
    else:
        names = list(dict.fromkeys(n for f in harness.FIGURES.values() for n in f))
    unknown = [n for n in names if n not in harness.VARIANTS]
    if unknown:
        raise ConfigError(f"unknown variants {unknown}; known: {sorted(harness.VARIANTS)}")
    replicates = args.replicates or (PAPER_REPLICATES if args.full_paper_scale else DESK_REPLICATES)
    seed = args.seed if args.seed is not None else 0

    results = harness.run_benchmark(
        [harness.VARIANTS[n] for n in names], args.n_grid, replicates, seed, base,
        skip_empty=args.skip_empty,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(harness.results_csv(results))
    (out / "timings.csv").write_text(harness.timings_csv(results))
    if args.keep_estimates:
        (out / "estimates.csv").write_text(harness.estimates_csv(results, seed))
    sys.stdout.write(harness.results_csv(results))
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    results_path = Path(args.results) if args.results else out / "results.csv"
    if not results_path.exists():
        raise ConfigError(f"results file not found: {results_path}")
    timings_path = results_path.with_name("timings.csv")
    results = harness.read_results(
        results_path.read_text(),
        timings_path.read_text() if timings_path.exists() else None,
    )
    out.mkdir(parents=True, exist_ok=True)
    variants = {r.variant for r in results}
    if args.figure:
        figures = [args.figure]
    else:
        figures = [f for f, names in harness.FIGURES.items() if variants & set(names)]
    for fig in figures:
        table = harness.figure_data(results, fig)
        (out / f"figure_{fig}.csv").write_text(table)
        sys.stdout.write(table)
    if any(r.M == 1 and r.variant in harness.SPEEDUP_FAMILY for r in results):
        text = harness.speedup_report(results)
        (out / "speedup.txt").write_text(text)
        sys.stdout.write(text)
    elif variants & set(harness.SPEEDUP_FAMILY):
        logger.warning("speedup report skipped: no M=1 baseline in %s", results_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pawl-st", description="Wang-Landau forced simulated tempering sampler and benchmark"
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single run; writes trace.csv and summary.txt")
    p.add_argument("--config", help="key = value config file (defaults: benchmark setup)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, help="override engine.seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="variant sweep; writes results.csv and timings.csv")
    p.add_argument("--config", help="base config for target, ladder and proposal settings")
    p.add_argument("--out", default="bench", help="output directory")
    p.add_argument("--seed", type=int, help="base seed; replicate r uses seed + r")
    p.add_argument("--replicates", type=int, help=f"replicates per cell (default {DESK_REPLICATES})")
    p.add_argument("--n-grid", type=_n_grid, default=list(DEFAULT_N_GRID), help="comma list of N")
    p.add_argument("--figure", choices=sorted(harness.FIGURES), help="only this figure's variants")
    p.add_argument("--variants", help="comma list of variant names (overrides --figure)")
    p.add_argument("--full-paper-scale", action="store_true", help=f"{PAPER_REPLICATES} replicates")
    p.add_argument("--keep-estimates", action="store_true", help="also write estimates.csv")
    p.add_argument(
        "--skip-empty",
        action="store_true",
        help="leave replicates that never reach T=1 out of the RMSE instead of aborting",
    )
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="figure tables and speedup report from results.csv")
    p.add_argument("--out", default="bench", help="directory holding results.csv; reports go here")
    p.add_argument("--results", help="explicit path to results.csv")
    p.add_argument("--figure", choices=sorted(harness.FIGURES))
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
