"""Wang-Landau bias weights, step-size schedules and the flat-histogram rule.

Arrays may carry leading batch axes (one row per independent run); the rung
axis is always last.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np


@dataclass(frozen=True)
class Deterministic:
    """``gamma_t = t0 / max(t0, t)``."""

    t0: int = 1

    def __post_init__(self):
        if self.t0 < 1:
            raise ValueError(f"t0 must be >= 1, got {self.t0}")


@dataclass(frozen=True)
class FlatHistogram:
    """``gamma = gamma0 * decay ** fh_events``; ``c`` is the flatness threshold."""

    c: float = 0.1
    gamma0: float = 1.0
    decay: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.c <= 1.0:
            raise ValueError(f"c must lie in (0, 1], got {self.c}")
        if not self.gamma0 > 0:
            raise ValueError(f"gamma0 must be positive, got {self.gamma0}")
        if not 0.0 < self.decay < 1.0:
            raise ValueError(f"decay must lie in (0, 1), got {self.decay}")


@dataclass(frozen=True)
class Frozen:
    """No bias learning: the weights stay uniform (plain simulated tempering)."""


StepSchedule = Union[Deterministic, FlatHistogram, Frozen]


def step_size(s: StepSchedule, t: int, fh_events=0):
    if t < 1:
        raise ValueError(f"step_size needs t >= 1, got {t}")
    if isinstance(s, Deterministic):
        return s.t0 / max(s.t0, t)
    if isinstance(s, FlatHistogram):
        return s.gamma0 * s.decay ** np.asarray(fh_events, dtype=float)
    if isinstance(s, Frozen):
        return 0.0
    raise TypeError(f"unknown schedule {s!r}")


def flat_histogram_met(nu_counts, c: float):
    """``max_i |nu(i) - 1/d| < c/d`` on the last axis; False with no samples."""
    counts = np.asarray(nu_counts, dtype=float)
    d = counts.shape[-1]
    total = counts.sum(axis=-1, keepdims=True)
    # an empty histogram gives dev = 1/d >= c/d, i.e. never flat
    dev = np.abs(counts / np.maximum(total, 1.0) - 1.0 / d).max(axis=-1)
    met = dev < c / d
    return met if met.ndim else bool(met)


def normalize_log(log_w: np.ndarray) -> np.ndarray:
    """Shift log weights so ``sum(exp(log_w)) == 1`` along the last axis."""
    m = log_w.max(axis=-1, keepdims=True)
    return log_w - (m + np.log(np.exp(log_w - m).sum(axis=-1, keepdims=True)))


@dataclass(frozen=True)
class BiasState:
    log_theta: np.ndarray
    nu_counts: np.ndarray
    t: int = 0
    fh_events: np.ndarray | int = 0

    @classmethod
    def uniform(cls, d: int, batch: tuple[int, ...] = ()) -> "BiasState":
        return cls(
            log_theta=np.full(batch + (d,), -np.log(d)),
            nu_counts=np.zeros(batch + (d,), dtype=np.int64),
            t=0,
            fh_events=np.zeros(batch, dtype=np.int64) if batch else 0,
        )

    @property
    def d(self) -> int:
        return self.log_theta.shape[-1]

    @property
    def theta(self) -> np.ndarray:
        return np.exp(self.log_theta)


def update_bias(b: BiasState, rung_hits, gamma) -> BiasState:
    """Mean-indicator Wang-Landau update followed by renormalisation.

    ``rung_hits[..., i]`` counts the particles sitting at rung ``i``; with a
    single particle this is the textbook one-indicator update.
    """
    hits = np.asarray(rung_hits)
    if hits.shape != b.log_theta.shape:
        raise ValueError(f"rung_hits shape {hits.shape} != bias shape {b.log_theta.shape}")
    m = hits.sum(axis=-1, keepdims=True)
    if m.min() < 1:
        raise ValueError("rung_hits must count at least one particle")
    gamma = np.asarray(gamma, dtype=float)[..., None] if np.ndim(gamma) else gamma
    log_theta = normalize_log(b.log_theta + gamma * (hits / m - 1.0 / b.d))
    return replace(b, log_theta=log_theta, nu_counts=b.nu_counts + hits, t=b.t + 1)


def biased_log_weight(b: BiasState, rung: int) -> float:
    """Log pseudo-prior of ``rung``: ``-log theta(rung)``."""
    if not 0 <= rung < b.d:
        raise IndexError(f"rung {rung} outside bias of length {b.d}")
    return -b.log_theta[..., rung]


def remap_on_split(
    b: BiasState, mapping: Sequence[int], parent_rung: int, new_rung: int
) -> BiasState:
    """Carry the weights over to a ladder that gained one rung.

    The new rung starts with its parent's weight; the histogram restarts.
    """
    if len(mapping) != b.d:
        raise ValueError(f"mapping has {len(mapping)} entries for {b.d} rungs")
    if tuple(mapping) == tuple(range(b.d)):
        return b
    d_new = b.d + 1
    mapped = np.asarray(mapping)
    if len(set(mapping)) != b.d or np.any(np.diff(mapped) <= 0) or mapped.max() >= d_new:
        raise ValueError(f"mapping {mapping} is not injective and order-preserving")
    log_theta = np.empty(b.log_theta.shape[:-1] + (d_new,))
    log_theta[..., mapped] = b.log_theta
    log_theta[..., new_rung] = b.log_theta[..., parent_rung]
    return replace(
        b,
        log_theta=normalize_log(log_theta),
        nu_counts=np.zeros(log_theta.shape, dtype=np.int64),
    )
