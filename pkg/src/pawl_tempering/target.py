"""Target densities and their tempered versions.

Everything is evaluated in the log domain; the benchmark mixture has
``pi(0) ~ 1e-50`` and naive products underflow long before the tails.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.special import logsumexp

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
QUADRATURE_MIN_POINTS = 1000


class TargetDensity(Protocol):
    def log_density(self, x):
        """Log density at ``x`` (scalar or array, broadcasts elementwise)."""


@dataclass(frozen=True)
class GaussianMixture:
    """One-dimensional mixture of normals, ``sum_j w_j N(mean_j, sd_j^2)``."""

    weights: tuple[float, ...]
    means: tuple[float, ...]
    sds: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if not (len(self.weights) == len(self.means) == len(self.sds)) or w.size == 0:
            raise ValueError("weights, means and sds must be non-empty and equally long")
        if np.any(w <= 0) or np.any(w > 1):
            raise ValueError(f"mixture weights must lie in (0, 1], got {self.weights}")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1, got {w.sum()!r}")
        if np.any(np.asarray(self.sds, dtype=float) <= 0):
            raise ValueError(f"mixture sds must be positive, got {self.sds}")
        object.__setattr__(self, "_logw", np.log(w))
        object.__setattr__(self, "_mu", np.asarray(self.means, dtype=float))
        object.__setattr__(self, "_sd", np.asarray(self.sds, dtype=float))

    @property
    def mean(self) -> float:
        return float(np.dot(self.weights, self.means))

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        z = (x[..., None] - self._mu) / self._sd
        terms = self._logw - 0.5 * z * z - np.log(self._sd) - LOG_SQRT_2PI
        if terms.shape[-1] == 2:
            # two-component fast path; same value as logsumexp
            out = np.logaddexp(terms[..., 0], terms[..., 1])
        else:
            out = logsumexp(terms, axis=-1)
        return out if out.ndim else float(out)


def paper_mixture() -> GaussianMixture:
    """Equal mixture of N(-15, 1) and N(15, 1); the benchmark target."""
    return GaussianMixture(weights=(0.5, 0.5), means=(-15.0, 15.0), sds=(1.0, 1.0))


def standard_normal() -> GaussianMixture:
    return GaussianMixture(weights=(1.0,), means=(0.0,), sds=(1.0,))


@dataclass(frozen=True)
class TemperedDensity:
    """``pi(x) ** (1 / temperature)``, unnormalised."""

    base: TargetDensity
    temperature: float

    def __post_init__(self):
        if not self.temperature >= 1.0:
            raise ValueError(f"temperature must be >= 1, got {self.temperature}")

    def log_density(self, x):
        return tempered_log_density(self, x)


def log_density(target: TargetDensity, x):
    return target.log_density(x)


def tempered_log_density(t: TemperedDensity, x):
    return t.base.log_density(x) / t.temperature


def log_partition_quadrature(
    t: TemperedDensity,
    lo: float = -60.0,
    hi: float = 60.0,
    n_points: int = 100_001,
) -> float:
    """Log of ``int_lo^hi pi(x)^(1/T) dx`` by composite Simpson.

    The interval must carry essentially all of the mass; for the benchmark
    mixture the default ``[-60, 60]`` leaves tails below 1e-300.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if n_points < QUADRATURE_MIN_POINTS:
        raise ValueError(f"n_points must be >= {QUADRATURE_MIN_POINTS}, got {n_points}")
    # Simpson wants an odd number of nodes
    n = n_points if n_points % 2 == 1 else n_points + 1
    grid = np.linspace(lo, hi, n)
    lf = np.asarray(tempered_log_density(t, grid))
    peak = lf.max()
    return float(peak + np.log(simpson(np.exp(lf - peak), x=grid)))


def tempered_log_partitions(
    target: TargetDensity, temps: Sequence[float], lo: float = -60.0, hi: float = 60.0
) -> np.ndarray:
    return np.array(
        [log_partition_quadrature(TemperedDensity(target, float(T)), lo, hi) for T in temps]
    )
