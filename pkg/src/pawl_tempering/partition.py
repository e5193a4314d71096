"""Temperature ladder (the partition along the rung index) and rung splitting.

The reaction coordinate of the tempering sampler is simply the rung index
``k``, so ``rung_index`` is the identity. It is kept as a function so the
engine never assumes that.

The split rule here is a stand-in: a rung is split when its recent visits
cluster on one side of that rung's running median of ``|x|``. It lives
behind :class:`SplitPolicy` so another statistic can replace it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


@dataclass(frozen=True)
class TemperatureLadder:
    temps: tuple[float, ...]

    def __post_init__(self):
        temps = tuple(float(T) for T in self.temps)
        object.__setattr__(self, "temps", temps)
        if len(temps) < 1:
            raise ValueError("ladder needs at least one temperature")
        if temps[0] != 1.0:
            raise ValueError(f"ladder must start at T = 1, got {temps[0]}")
        if any(b <= a for a, b in zip(temps, temps[1:])):
            raise ValueError(f"ladder must be strictly increasing, got {temps}")

    @classmethod
    def arithmetic(cls, t_max: float, d: int) -> "TemperatureLadder":
        """``d`` evenly spaced temperatures from 1 to ``t_max``."""
        if d < 2:
            raise ValueError(f"arithmetic ladder needs d >= 2, got {d}")
        return cls(tuple(np.linspace(1.0, float(t_max), d)))

    @property
    def d(self) -> int:
        return len(self.temps)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.temps)


def _check_rung(ladder: TemperatureLadder, k: int) -> None:
    if not 0 <= k < ladder.d:
        raise IndexError(f"rung {k} outside ladder of {ladder.d} rungs")


def rung_index(ladder: TemperatureLadder, k: int) -> int:
    _check_rung(ladder, k)
    return int(k)


def neighbors(ladder: TemperatureLadder, k: int) -> set[int]:
    _check_rung(ladder, k)
    return {j for j in (k - 1, k + 1) if 0 <= j < ladder.d}


@dataclass(frozen=True)
class SplitPolicy:
    enabled: bool = False
    skew_threshold: float = 0.75
    min_samples: int = 200
    max_rungs: int = 20
    # 0: only evaluate when the flat-histogram criterion fires
    every: int = 0

    def __post_init__(self):
        if not 0.5 < self.skew_threshold < 1.0:
            raise ValueError(f"skew_threshold must lie in (0.5, 1), got {self.skew_threshold}")
        if self.min_samples < 10:
            raise ValueError(f"min_samples must be >= 10, got {self.min_samples}")
        if self.max_rungs < 1:
            raise ValueError(f"max_rungs must be positive, got {self.max_rungs}")
        if self.every < 0:
            raise ValueError(f"every must be >= 0, got {self.every}")


class SplitResult(NamedTuple):
    ladder: TemperatureLadder
    split: bool
    # mapping[old_rung] -> new rung index
    mapping: tuple[int, ...]
    parent: int = -1
    new_rung: int = -1


def maybe_split(
    ladder: TemperatureLadder,
    policy: SplitPolicy,
    half_counts: Sequence[Sequence[int]],
) -> SplitResult:
    """Insert at most one rung where visits are skewed about the rung median.

    ``half_counts[k] = (below, above)``. The lowest qualifying rung wins. A
    rung ``k < d - 1`` splits the gap above it; the top rung splits the gap
    below it.
    """
    identity = tuple(range(ladder.d))
    counts = np.asarray(half_counts, dtype=np.int64).reshape(-1, 2)
    if len(counts) != ladder.d:
        raise ValueError(f"expected {ladder.d} half-count pairs, got {len(counts)}")
    if not policy.enabled or ladder.d < 2 or ladder.d >= policy.max_rungs:
        return SplitResult(ladder, False, identity)

    totals = counts.sum(axis=1)
    for k in range(ladder.d):
        if totals[k] < policy.min_samples:
            continue
        if counts[k].max() / totals[k] < policy.skew_threshold:
            continue
        lo = k if k < ladder.d - 1 else k - 1
        new_temp = 0.5 * (ladder.temps[lo] + ladder.temps[lo + 1])
        temps = ladder.temps[: lo + 1] + (new_temp,) + ladder.temps[lo + 1 :]
        mapping = tuple(i if i <= lo else i + 1 for i in range(ladder.d))
        return SplitResult(TemperatureLadder(temps), True, mapping, k, lo + 1)
    return SplitResult(ladder, False, identity)


@dataclass
class RungMedianTracker:
    """Running median of ``|x|`` per rung plus below/above visit counts.

    The median follows a sign-driven stochastic approximation with step
    ``n ** -0.5`` where ``n`` is the number of visits to the rung.
    """

    d: int
    median: np.ndarray = field(init=False)
    visits: np.ndarray = field(init=False)
    half_counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.median = np.zeros(self.d)
        self.visits = np.zeros(self.d, dtype=np.int64)
        self.half_counts = np.zeros((self.d, 2), dtype=np.int64)

    def observe(self, rungs: np.ndarray, x: np.ndarray) -> None:
        rungs = np.asarray(rungs).ravel()
        ax = np.abs(np.asarray(x, dtype=float)).ravel()
        above = ax > self.median[rungs]
        np.add.at(self.half_counts, (rungs, above.astype(np.int64)), 1)
        hits = np.bincount(rungs, minlength=self.d)
        signs = np.bincount(rungs, weights=np.where(above, 1.0, -1.0), minlength=self.d)
        self.visits += hits
        seen = hits > 0
        self.median[seen] += signs[seen] / np.sqrt(self.visits[seen])

    def reset_counts(self) -> None:
        self.half_counts[:] = 0

    def remap(self, mapping: Sequence[int], parent: int, new_rung: int) -> None:
        d_new = len(mapping) + 1
        median = np.zeros(d_new)
        visits = np.zeros(d_new, dtype=np.int64)
        median[list(mapping)] = self.median
        visits[list(mapping)] = self.visits
        median[new_rung] = self.median[parent]
        visits[new_rung] = self.visits[parent]
        self.d = d_new
        self.median, self.visits = median, visits
        self.half_counts = np.zeros((d_new, 2), dtype=np.int64)
