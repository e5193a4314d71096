"""Variant sweeps over the bimodal benchmark, RMSE tables and report output."""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .bias import Deterministic, FlatHistogram, Frozen
from .config import RunConfig, resolve_t0
from .engine import run_replicates

logger = logging.getLogger(__name__)

ALGORITHMS = ("plain_st", "sa_deterministic", "wang_landau")
RESULT_COLUMNS = (
    "variant", "algorithm", "t0", "c", "adaptive", "M", "split", "N", "R", "empty", "rmse",
)
FIGURE_COLUMNS = ("figure", "variant", "N", "rmse", "runtime_s")
# replicates are batched so that batch * particles stays below this
_BATCH_PARTICLES = 1 << 14


class BenchmarkError(RuntimeError):
    pass


@dataclass(frozen=True)
class VariantSpec:
    name: str
    algorithm: str
    t0: str = "1"
    c: float = 0.1
    adaptive_proposal: bool = False
    M: int = 1
    split: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")

    def run_config(self, base: RunConfig, n_iter: int) -> RunConfig:
        if self.algorithm == "plain_st":
            schedule = Frozen()
        elif self.algorithm == "sa_deterministic":
            schedule = Deterministic(resolve_t0(self.t0, n_iter))
        else:
            fh = base.schedule if isinstance(base.schedule, FlatHistogram) else FlatHistogram()
            schedule = FlatHistogram(self.c, fh.gamma0, fh.decay)
        return base.with_(
            schedule=schedule,
            proposal=replace(base.proposal, adapt=self.adaptive_proposal),
            split=replace(base.split, enabled=self.split),
            n_iter=n_iter,
            particles=self.M,
        )


def _wl(c: float, adaptive: bool = False, M: int = 1, split: bool = False) -> VariantSpec:
    name = f"wl_c{c:g}" + ("_adaptive" if adaptive else "")
    name += f"_M{M}" if M > 1 else ""
    name += "_split" if split else ""
    return VariantSpec(name, "wang_landau", c=c, adaptive_proposal=adaptive, M=M, split=split)


VARIANTS: dict[str, VariantSpec] = {
    v.name: v
    for v in [
        VariantSpec("plain_st", "plain_st"),
        VariantSpec("plain_st_adaptive", "plain_st", adaptive_proposal=True),
        VariantSpec("sa_t0_1", "sa_deterministic", t0="1"),
        VariantSpec("sa_t0_N4", "sa_deterministic", t0="N/4"),
        VariantSpec("sa_t0_N2", "sa_deterministic", t0="N/2"),
        _wl(0.01),
        _wl(0.1),
        _wl(0.5),
        _wl(0.1, adaptive=True),
        _wl(0.1, adaptive=True, M=10),
        _wl(0.1, adaptive=True, M=100),
        _wl(0.1, adaptive=True, split=True),
    ]
}

FIGURES: dict[str, tuple[str, ...]] = {
    "schedules": (
        "plain_st", "sa_t0_1", "sa_t0_N4", "sa_t0_N2", "wl_c0.01", "wl_c0.1", "wl_c0.5",
    ),
    "adaptive": (
        "plain_st", "plain_st_adaptive", "wl_c0.1", "wl_c0.1_adaptive",
        "wl_c0.1_adaptive_M10", "wl_c0.1_adaptive_M100",
    ),
}
SPEEDUP_FAMILY = ("wl_c0.1_adaptive", "wl_c0.1_adaptive_M10", "wl_c0.1_adaptive_M100")


@dataclass(frozen=True)
class BenchResult:
    variant: str
    N: int
    R: int
    rmse: float
    runtime_s: float = math.nan
    M: int = 1
    # replicates that never visited T = 1 (only with skip_empty)
    empty: int = 0
    estimates: tuple[float, ...] | None = field(default=None, compare=False)


def rmse(estimates: Iterable[float], true_mean: float = 0.0) -> float:
    est = np.asarray(list(estimates), dtype=float)
    if est.size == 0:
        raise ValueError("rmse of an empty set of estimates")
    return float(np.sqrt(np.mean((est - true_mean) ** 2)))


Estimator = Callable[[RunConfig, Sequence[int]], np.ndarray]


def engine_estimator(config: RunConfig, seeds: Sequence[int]) -> np.ndarray:
    """Cold-rung posterior means, one per seed, batched where possible."""
    if config.split.enabled:
        chunk = 1
    else:
        chunk = max(1, _BATCH_PARTICLES // config.particles)
    out = []
    for i in range(0, len(seeds), chunk):
        out.append(run_replicates(config, seeds[i : i + chunk]).posterior_means())
    return np.concatenate(out)


def run_benchmark(
    variants: Sequence[VariantSpec],
    n_grid: Sequence[int],
    R: int,
    base_seed: int = 0,
    base_config: RunConfig | None = None,
    estimator: Estimator = engine_estimator,
    skip_empty: bool = False,
) -> list[BenchResult]:
    """One :class:`BenchResult` per (variant, N).

    Replicate ``r`` is seeded ``base_seed + r`` for every variant, so
    comparisons between variants are paired. A replicate without any T = 1
    state aborts the sweep, unless ``skip_empty`` is set, in which case it is
    left out of the RMSE and counted in ``BenchResult.empty``.
    """
    if R < 1:
        raise ValueError(f"need at least one replicate, got R = {R}")
    base = base_config or RunConfig()
    true_mean = base.resolved_true_mean()
    seeds = [base_seed + r for r in range(R)]
    results = []
    for v in variants:
        for n in n_grid:
            config = v.run_config(base, int(n))
            start = time.perf_counter()
            est = np.asarray(estimator(config, seeds), dtype=float)
            elapsed = time.perf_counter() - start
            bad = np.flatnonzero(~np.isfinite(est))
            if bad.size and (not skip_empty or bad.size == R):
                raise BenchmarkError(
                    f"variant {v.name}, N={n}, replicate {bad[0]} (seed {seeds[bad[0]]}): "
                    "no T=1 samples"
                )
            if bad.size:
                logger.warning("%s N=%d: %d replicates without T=1 samples skipped", v.name, n, bad.size)
            score = rmse(est[np.isfinite(est)], true_mean)
            results.append(
                BenchResult(v.name, int(n), R, score, elapsed / R, v.M, bad.size, tuple(est))
            )
            logger.info("%s N=%d rmse=%.4g (%.2fs)", v.name, n, results[-1].rmse, elapsed)
    return sorted(results, key=lambda r: (r.variant, r.N))


# ----------------------------------------------------------------- CSV output


def results_csv(results: Sequence[BenchResult]) -> str:
    """Deterministic results table (no timings, so reruns are byte-identical)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in sorted(results, key=lambda r: (r.variant, r.N)):
        v = VARIANTS.get(r.variant)
        meta = (
            (v.algorithm, v.t0 if v.algorithm == "sa_deterministic" else "",
             f"{v.c:g}" if v.algorithm == "wang_landau" else "", int(v.adaptive_proposal),
             v.M, int(v.split))
            if v else ("", "", "", "", r.M, "")
        )
        w.writerow((r.variant, *meta, r.N, r.R, r.empty, f"{r.rmse:.17g}"))
    return buf.getvalue()


def timings_csv(results: Sequence[BenchResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("variant", "N", "runtime_s"))
    for r in sorted(results, key=lambda r: (r.variant, r.N)):
        w.writerow((r.variant, r.N, f"{r.runtime_s:.17g}"))
    return buf.getvalue()


def estimates_csv(results: Sequence[BenchResult], base_seed: int = 0) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("variant", "N", "replicate", "seed", "estimate"))
    for r in sorted(results, key=lambda r: (r.variant, r.N)):
        for i, e in enumerate(r.estimates or ()):
            w.writerow((r.variant, r.N, i, base_seed + i, f"{e:.17g}"))
    return buf.getvalue()


def read_results(text: str, timings: str | None = None) -> list[BenchResult]:
    runtime = {}
    if timings:
        for row in csv.DictReader(io.StringIO(timings)):
            runtime[(row["variant"], int(row["N"]))] = float(row["runtime_s"])
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        key = (row["variant"], int(row["N"]))
        out.append(
            BenchResult(
                row["variant"], key[1], int(row["R"]), float(row["rmse"]),
                runtime.get(key, math.nan), int(row["M"]), int(row.get("empty") or 0),
            )
        )
    return out


def figure_data(results: Sequence[BenchResult], figure: str) -> str:
    """Long-format CSV ``figure,variant,N,rmse,runtime_s`` for one figure."""
    if figure not in FIGURES:
        raise ValueError(f"figure must be one of {sorted(FIGURES)}, got {figure!r}")
    wanted = FIGURES[figure]
    rows = [r for r in results if r.variant in wanted]
    present = {(r.variant, r.N) for r in rows}
    n_values = sorted({r.N for r in rows})
    missing = [(v, n) for v in wanted for n in n_values if (v, n) not in present]
    if missing:
        logger.warning(
            "figure %s: %d variant/N combinations missing, e.g. %s", figure, len(missing), missing[0]
        )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIGURE_COLUMNS)
    for r in sorted(rows, key=lambda r: (figure, r.variant, r.N)):
        w.writerow((figure, r.variant, r.N, f"{r.rmse:.17g}", f"{r.runtime_s:.17g}"))
    return buf.getvalue()


def parse_figure_data(text: str) -> list[BenchResult]:
    """Inverse of :func:`figure_data`; ``R`` is not part of the table and reads as 0."""
    return [
        BenchResult(row["variant"], int(row["N"]), 0, float(row["rmse"]), float(row["runtime_s"]))
        for row in csv.DictReader(io.StringIO(text))
    ]


def speedup_report(results: Sequence[BenchResult], family: Sequence[str] = SPEEDUP_FAMILY) -> str:
    """Wall-clock and RMSE ratios against the single-particle run of ``family``."""
    rows = [r for r in results if r.variant in family]
    base = {r.N: r for r in rows if r.M == 1}
    if not base:
        raise BenchmarkError(f"speedup report needs an M=1 baseline among {list(family)}")
    lines = [
        f"{'variant':<24} {'M':>4} {'N':>8} {'time_ratio':>11} {'rmse_ratio':>11} {'ideal':>7}"
    ]
    for r in sorted(rows, key=lambda r: (r.N, r.M)):
        b = base.get(r.N)
        if b is None:
            continue
        t_ratio = r.runtime_s / b.runtime_s if b.runtime_s > 0 else math.nan
        e_ratio = r.rmse / b.rmse if b.rmse > 0 else math.nan
        t_text = "n/a" if math.isnan(t_ratio) else f"{t_ratio:.3f}"
        e_text = "n/a" if math.isnan(e_ratio) else f"{e_ratio:.3f}"
        lines.append(
            f"{r.variant:<24} {r.M:>4} {r.N:>8} {t_text:>11} {e_text:>11} "
            f"{1 / math.sqrt(r.M):>7.3f}"
        )
    return "\n".join(lines) + "\n"
