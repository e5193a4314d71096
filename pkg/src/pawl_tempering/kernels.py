"""Metropolis moves on the pair (x, rung) and adaptive proposal scaling.

The scalar functions mirror the textbook formulas; the ``*_from_log_pi``
variants take cached log densities and broadcast over particle arrays, and
are what the engine calls.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bias import BiasState
from .partition import TemperatureLadder
from .target import TargetDensity

OPTIMAL_RATE = 0.234


@dataclass(frozen=True)
class ProposalState:
    log_sigma: np.ndarray | float
    target_rate: float = OPTIMAL_RATE
    adapt_rate_exponent: float = 0.6

    def __post_init__(self):
        if not 0.0 < self.target_rate < 1.0:
            raise ValueError(f"target_rate must lie in (0, 1), got {self.target_rate}")

    @classmethod
    def from_sigma(cls, sigma: float, **kwargs) -> "ProposalState":
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        return cls(log_sigma=float(np.log(sigma)), **kwargs)

    @property
    def sigma(self):
        return np.exp(self.log_sigma)


@dataclass(frozen=True)
class MoveOutcome:
    new_x: float
    new_rung: int
    accepted_x: bool
    accepted_rung: bool
    log_alpha_x: float
    log_alpha_rung: float


def log_accept_x_from_log_pi(log_pi_x, log_pi_prop, T):
    return np.minimum(0.0, (log_pi_prop - log_pi_x) / T)


def log_accept_x(target: TargetDensity, T: float, x: float, x_prop: float) -> float:
    """Log acceptance of a symmetric random-walk move at temperature ``T``.

    The bias is constant within a rung, so it drops out here.
    """
    if T < 1.0:
        raise ValueError(f"temperature must be >= 1, got {T}")
    return float(log_accept_x_from_log_pi(target.log_density(x), target.log_density(x_prop), T))


def log_accept_rung_from_log_pi(log_pi_x, temps, log_theta, k, k_prop):
    """Vectorised rung-move acceptance; ``-inf`` where ``k_prop`` leaves the ladder.

    ``temps`` is the ladder array, ``log_theta`` the bias with the rung axis
    last (any leading axes must broadcast against ``k``).
    """
    d = temps.shape[-1]
    inside = (k_prop >= 0) & (k_prop < d)
    kp = np.where(inside, k_prop, k)
    inv_t = 1.0 / temps
    if log_theta.ndim == 1:
        log_theta_k, log_theta_kp = log_theta[k], log_theta[kp]
    else:
        rows = np.arange(log_theta.shape[0])[:, None]
        log_theta_k, log_theta_kp = log_theta[rows, k], log_theta[rows, kp]
    # pseudo-prior of rung i is 1 / theta(i)
    log_r = log_pi_x * (inv_t[kp] - inv_t[k]) + (log_theta_k - log_theta_kp)
    return np.where(inside, np.minimum(0.0, log_r), -np.inf)


def log_accept_rung(
    target: TargetDensity,
    ladder: TemperatureLadder,
    bias: BiasState,
    x: float,
    k: int,
    k_prop: int,
) -> float:
    if abs(k_prop - k) != 1:
        raise ValueError(f"rung proposals move by one step, got {k} -> {k_prop}")
    if not 0 <= k < ladder.d:
        raise IndexError(f"rung {k} outside ladder of {ladder.d} rungs")
    out = log_accept_rung_from_log_pi(
        target.log_density(x),
        ladder.as_array(),
        np.asarray(bias.log_theta, dtype=float),
        np.array([k]),
        np.array([k_prop]),
    )
    return float(out[0])


def propose_x(x, sigma, rng: np.random.Generator):
    """Gaussian random-walk proposal; draws one normal per element of ``x``."""
    z = rng.standard_normal(np.shape(x)) if np.ndim(x) else rng.standard_normal()
    return x + sigma * z


def adapt_scale(p: ProposalState, alpha, t: int) -> ProposalState:
    """Robbins-Monro step of ``log sigma`` toward the target acceptance rate."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any((alpha < 0.0) | (alpha > 1.0)):
        raise ValueError(f"acceptance probability must lie in [0, 1], got {alpha}")
    if t < 1:
        raise ValueError(f"adapt_scale needs t >= 1, got {t}")
    rho = t ** -p.adapt_rate_exponent
    log_sigma = p.log_sigma + rho * (alpha - p.target_rate)
    return replace(p, log_sigma=log_sigma if log_sigma.ndim else float(log_sigma))
