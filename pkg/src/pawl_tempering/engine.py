"""Lock-step particle engine for Wang-Landau forced simulated tempering.

State is held as ``(B, M)`` arrays: ``B`` independent runs (one per seed)
of ``M`` particles each. Runs never interact, so a batch of seeds produces
exactly what the same seeds produce one at a time; the benchmark harness
relies on this to vectorise replicates.

Random numbers: particle ``p`` of the run seeded ``s`` owns two PCG64
streams spawned from ``SeedSequence(s, spawn_key=(p,))``. The first yields
the normals for x-proposals (and the initial draw from ``pi_0``), the
second yields three uniforms per sweep (x accept, rung direction, rung
accept). Draws are pulled in blocks, and since each stream is consumed in
order the block length never affects results.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .bias import (
    BiasState,
    FlatHistogram,
    Frozen,
    flat_histogram_met,
    remap_on_split,
    step_size,
    update_bias,
)
from .config import RunConfig
from .kernels import (
    ProposalState,
    adapt_scale,
    log_accept_rung_from_log_pi,
    log_accept_x_from_log_pi,
)
from .partition import RungMedianTracker, TemperatureLadder, maybe_split, rung_index

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("t", "particle", "x", "rung", "acc_x", "acc_rung", "sigma", "gamma", "fh_events")
# cap on particles * block length held in memory at once
_DRAW_BUDGET = 1 << 20


class NoColdSamplesError(RuntimeError):
    """No recorded state sits at T = 1, so there is nothing to average."""


@dataclass
class ParticleState:
    x: float
    rung: int


class ParticleStreams:
    def __init__(self, seeds: Sequence[int], n_particles: int):
        self.shape = (len(seeds), n_particles)
        self.normal: list[np.random.Generator] = []
        self.uniform: list[np.random.Generator] = []
        for seed in seeds:
            for p in range(n_particles):
                ss_normal, ss_uniform = np.random.SeedSequence(int(seed), spawn_key=(p,)).spawn(2)
                self.normal.append(np.random.Generator(np.random.PCG64(ss_normal)))
                self.uniform.append(np.random.Generator(np.random.PCG64(ss_uniform)))

    def normals(self, n: int) -> np.ndarray:
        """``(n, B, M)`` standard normals."""
        z = np.stack([g.standard_normal(n) for g in self.normal], axis=1)
        return z.reshape((n,) + self.shape)

    def uniforms(self, n: int) -> np.ndarray:
        """``(n, B, M, 3)`` uniforms on [0, 1)."""
        u = np.stack([g.random((n, 3)) for g in self.uniform], axis=1)
        return u.reshape((n,) + self.shape + (3,))


@dataclass
class Trace:
    t: np.ndarray
    particle: np.ndarray
    x: np.ndarray
    rung: np.ndarray
    acc_x: np.ndarray
    acc_rung: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray
    fh_events: np.ndarray
    bias: BiasState | None = None
    ladder: TemperatureLadder | None = None

    def __len__(self) -> int:
        return len(self.t)

    def write_csv(self, fh: IO[str]) -> None:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for row in zip(
            self.t, self.particle, self.x, self.rung,
            self.acc_x, self.acc_rung, self.sigma, self.gamma, self.fh_events,
        ):
            t, p, x, k, ax, ar, s, g, f = row
            fh.write(f"{t},{p},{x:.17g},{k},{int(ax)},{int(ar)},{s:.17g},{g:.17g},{f}\n")

    @classmethod
    def read_csv(cls, fh: IO[str]) -> "Trace":
        header = fh.readline().strip().split(",")
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2).reshape(-1, len(TRACE_COLUMNS))
        ints = lambda j: data[:, j].astype(np.int64)
        return cls(
            t=ints(0), particle=ints(1), x=data[:, 2], rung=ints(3),
            acc_x=data[:, 4].astype(bool), acc_rung=data[:, 5].astype(bool),
            sigma=data[:, 6], gamma=data[:, 7], fh_events=ints(8),
        )


def posterior_mean(trace: Trace) -> float:
    """Mean of ``x`` over all recorded states on the T = 1 rung."""
    cold = np.asarray(trace.rung) == 0
    if not cold.any():
        raise NoColdSamplesError("no T=1 samples in trace")
    return float(np.mean(np.asarray(trace.x)[cold]))


@dataclass
class Summary:
    posterior_mean: float
    cold_samples: int
    occupation: np.ndarray
    theta: np.ndarray
    temps: tuple[float, ...]
    acceptance_x: float
    acceptance_rung: float
    sigma: float
    fh_events: int
    splits: int
    n_iter: int
    particles: int
    seed: int
    wall_clock_s: float

    def to_text(self) -> str:
        fmt = lambda v: f"{v:.17g}"
        lines = {
            "posterior_mean": fmt(self.posterior_mean),
            "cold_samples": str(self.cold_samples),
            "occupation": ",".join(map(fmt, self.occupation)),
            "theta": ",".join(map(fmt, self.theta)),
            "temps": ",".join(map(fmt, self.temps)),
            "acceptance_x": fmt(self.acceptance_x),
            "acceptance_rung": fmt(self.acceptance_rung),
            "sigma": fmt(self.sigma),
            "fh_events": str(self.fh_events),
            "splits": str(self.splits),
            "iterations": str(self.n_iter),
            "particles": str(self.particles),
            "seed": str(self.seed),
            "wall_clock_s": f"{self.wall_clock_s:.6f}",
        }
        return "".join(f"{k} = {v}\n" for k, v in lines.items())


def parse_summary(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


class Sampler:
    """``B`` independent runs of one configuration, advanced sweep by sweep.

    Parameters
    ----------
    config:
        Run configuration; ``config.seed`` is ignored when ``seeds`` is given.
    seeds:
        One seed per independent run. Defaults to ``[config.seed]``.
    record:
        Keep a full :class:`Trace` (single run only).
    """

    def __init__(self, config: RunConfig, seeds: Sequence[int] | None = None, record: bool = False):
        config.validate()
        self.config = config
        self.seeds = [config.seed] if seeds is None else [int(s) for s in seeds]
        if not self.seeds:
            raise ValueError("need at least one seed")
        B, M = len(self.seeds), config.particles
        if config.split.enabled and B > 1:
            raise ValueError("rung splitting runs one seed at a time; ladders would diverge")
        if record and B > 1:
            raise ValueError("trace recording runs one seed at a time")
        self.shape = (B, M)
        self.ladder = config.ladder
        self._temps = self.ladder.as_array()
        self.streams = ParticleStreams(self.seeds, M)

        d = self.ladder.d
        init = config.init
        if init.kind == "normal":
            self.x = init.mean + init.sd * self.streams.normals(1)[0]
        else:
            self.x = np.full(self.shape, float(init.x))
        if init.rungs == "uniform":
            u = self.streams.uniforms(1)[0, ..., 0]
            self.rung = np.minimum((u * d).astype(np.int64), d - 1)
        else:
            self.rung = np.zeros(self.shape, dtype=np.int64)
        self.log_pi = config.target.log_density(self.x)

        self.bias = BiasState.uniform(d, (B,))
        p = config.proposal
        self.proposal = ProposalState(
            log_sigma=np.full(B, np.log(p.sigma)),
            target_rate=p.target_rate,
            adapt_rate_exponent=p.adapt_exponent,
        )
        self.t = 0
        self.x_moves = 0
        self.splits = 0
        self.tracker = RungMedianTracker(d) if config.split.enabled else None

        self.cold_sum = np.zeros(B)
        self.cold_sq_sum = np.zeros(B)
        self.cold_count = np.zeros(B, dtype=np.int64)
        self.occupancy = np.zeros((B, d), dtype=np.int64)
        self.acc_x_sum = np.zeros(B, dtype=np.int64)
        self.acc_x_count = 0
        self.acc_rung_sum = np.zeros(B, dtype=np.int64)
        self.acc_rung_count = 0
        self.alpha_history: list[np.ndarray] = []
        self.keep_alpha_history = False

        self.record = record
        self._trace_rows: list[tuple] = []
        self.wall_clock_s = 0.0

    # ------------------------------------------------------------------ moves

    def _x_move(self, z: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        sigma = np.exp(self.proposal.log_sigma)[:, None]
        x_prop = self.x + sigma * z
        lp_prop = self.config.target.log_density(x_prop)
        log_a = log_accept_x_from_log_pi(self.log_pi, lp_prop, self._temps[self.rung])
        acc = np.log(u) < log_a
        self.x = np.where(acc, x_prop, self.x)
        self.log_pi = np.where(acc, lp_prop, self.log_pi)
        return acc, log_a

    def _rung_move(self, u_dir: np.ndarray, u_acc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        k_prop = self.rung + np.where(u_dir < 0.5, -1, 1)
        log_a = log_accept_rung_from_log_pi(
            self.log_pi, self._temps, self.bias.log_theta, self.rung, k_prop
        )
        acc = np.log(u_acc) < log_a
        self.rung = np.where(acc, k_prop, self.rung)
        return acc, log_a

    def sweep(self, z: np.ndarray, u: np.ndarray) -> None:
        """One x-move and/or rung-move per particle, then the barrier."""
        cfg = self.config
        self.t += 1
        t = self.t
        composition = cfg.proposal.composition
        do_x = composition != "alternate" or t % 2 == 1
        do_rung = composition == "both" or (composition == "alternate" and t % 2 == 0)
        no_move = np.zeros(self.shape, dtype=bool)

        acc_x = acc_r = no_move
        if do_x:
            acc_x, log_a_x = self._x_move(z, u[..., 0])
            alpha = np.exp(log_a_x).sum(axis=1) / self.shape[1]
            self.x_moves += 1
            self.acc_x_sum += acc_x.sum(axis=1)
            self.acc_x_count += 1
        if do_rung:
            acc_r, _ = self._rung_move(u[..., 1], u[..., 2])
            self.acc_rung_sum += acc_r.sum(axis=1)
            self.acc_rung_count += 1

        # ---- barrier: single writer from here on
        d = self.ladder.d
        B = self.shape[0]
        hits = np.bincount(
            (self.rung + d * np.arange(B)[:, None]).ravel(), minlength=B * d
        ).reshape(B, d)
        self.occupancy += hits
        cold = self.rung == 0
        x_cold = np.where(cold, self.x, 0.0)
        self.cold_sum += x_cold.sum(axis=1)
        self.cold_sq_sum += (x_cold * x_cold).sum(axis=1)
        self.cold_count += cold.sum(axis=1)

        schedule = cfg.schedule
        gamma = step_size(schedule, t, self.bias.fh_events)
        fired = np.zeros(self.shape[0], dtype=bool)
        if not isinstance(schedule, Frozen):
            self.bias = update_bias(self.bias, hits, gamma)
            if isinstance(schedule, FlatHistogram):
                fired = flat_histogram_met(self.bias.nu_counts, schedule.c)
                if fired.any():
                    nu = np.where(fired[:, None], 0, self.bias.nu_counts)
                    self.bias = BiasState(
                        self.bias.log_theta, nu, self.bias.t, self.bias.fh_events + fired
                    )

        p = cfg.proposal
        if do_x and p.adapt and (p.adapt_until == 0 or t <= p.adapt_until):
            self.proposal = adapt_scale(self.proposal, alpha, self.x_moves)
        if do_x and self.keep_alpha_history:
            self.alpha_history.append(acc_x.sum(axis=1) / self.shape[1])

        if self.tracker is not None:
            self.tracker.observe(self.rung, self.x)
            every = cfg.split.every
            if fired[0] or (every and t % every == 0):
                self._maybe_split()

        if self.record and t % cfg.record_stride == 0:
            g = np.broadcast_to(np.asarray(gamma, dtype=float), (self.shape[0],))
            self._trace_rows.append(
                (t, self.x[0].copy(), self.rung[0].copy(), acc_x[0].copy(), acc_r[0].copy(),
                 float(np.exp(self.proposal.log_sigma[0])), float(g[0]),
                 int(np.asarray(self.bias.fh_events).reshape(-1)[0]))
            )

    def _maybe_split(self) -> None:
        res = maybe_split(self.ladder, self.config.split, self.tracker.half_counts)
        if not res.split:
            self.tracker.reset_counts()
            return
        logger.info("split rung %d: ladder now %s", res.parent, res.ladder.temps)
        self.bias = remap_on_split(self.bias, res.mapping, res.parent, res.new_rung)
        mapping = np.asarray(res.mapping)
        self.rung = mapping[self.rung]
        occ = np.zeros((self.shape[0], res.ladder.d), dtype=np.int64)
        occ[:, mapping] = self.occupancy
        self.occupancy = occ
        self.tracker.remap(res.mapping, res.parent, res.new_rung)
        self.ladder = res.ladder
        self._temps = self.ladder.as_array()
        self.splits += 1

    # -------------------------------------------------------------------- run

    def run(self, n_iter: int | None = None) -> "Sampler":
        n_iter = self.config.n_iter if n_iter is None else n_iter
        n_particles = self.shape[0] * self.shape[1]
        block = max(1, min(4096, _DRAW_BUDGET // n_particles))
        start = time.perf_counter()
        done = 0
        while done < n_iter:
            b = min(block, n_iter - done)
            z = self.streams.normals(b)
            u = self.streams.uniforms(b)
            for j in range(b):
                self.sweep(z[j], u[j])
            done += b
        self.wall_clock_s += time.perf_counter() - start
        return self

    # ---------------------------------------------------------------- results

    def particles(self, run: int = 0) -> list[ParticleState]:
        return [
            ParticleState(float(x), rung_index(self.ladder, int(k)))
            for x, k in zip(self.x[run], self.rung[run])
        ]

    def posterior_means(self) -> np.ndarray:
        """Per-run mean of ``x`` over all cold states; NaN for runs with none."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.cold_sum / self.cold_count

    def posterior_variances(self) -> np.ndarray:
        """Per-run (biased) variance of the cold states; NaN for runs with none."""
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = self.cold_sum / self.cold_count
            return self.cold_sq_sum / self.cold_count - mean * mean

    def occupation(self) -> np.ndarray:
        return self.occupancy / self.occupancy.sum(axis=1, keepdims=True)

    def trace(self) -> Trace:
        if not self.record:
            raise RuntimeError("sampler was built with record=False")
        M = self.shape[1]
        n = len(self._trace_rows)
        cols = list(zip(*self._trace_rows)) if n else [()] * 8
        rep = lambda v, dtype: np.repeat(np.asarray(v, dtype=dtype), M)
        return Trace(
            t=rep(cols[0], np.int64),
            particle=np.tile(np.arange(M), n),
            x=np.concatenate(cols[1]) if n else np.empty(0),
            rung=np.concatenate(cols[2]) if n else np.empty(0, dtype=np.int64),
            acc_x=np.concatenate(cols[3]) if n else np.empty(0, dtype=bool),
            acc_rung=np.concatenate(cols[4]) if n else np.empty(0, dtype=bool),
            sigma=rep(cols[5], float),
            gamma=rep(cols[6], float),
            fh_events=rep(cols[7], np.int64),
            bias=self.bias,
            ladder=self.ladder,
        )

    def summary(self, run: int = 0) -> Summary:
        fh = np.asarray(self.bias.fh_events).reshape(-1)
        return Summary(
            posterior_mean=float(self.posterior_means()[run]),
            cold_samples=int(self.cold_count[run]),
            occupation=self.occupation()[run],
            theta=self.bias.theta[run],
            temps=self.ladder.temps,
            acceptance_x=float(self.acc_x_sum[run] / max(self.acc_x_count * self.shape[1], 1)),
            acceptance_rung=float(
                self.acc_rung_sum[run] / max(self.acc_rung_count * self.shape[1], 1)
            ),
            sigma=float(np.exp(self.proposal.log_sigma[run])),
            fh_events=int(fh[run]),
            splits=self.splits,
            n_iter=self.t,
            particles=self.shape[1],
            seed=self.seeds[run],
            wall_clock_s=self.wall_clock_s,
        )


def init_run(config: RunConfig, record: bool = False) -> Sampler:
    return Sampler(config, record=record)


def run(config: RunConfig) -> tuple[Trace, Summary]:
    sampler = Sampler(config, record=True).run()
    return sampler.trace(), sampler.summary()


def run_replicates(config: RunConfig, seeds: Sequence[int]) -> Sampler:
    """Run one independent chain set per seed, vectorised across seeds."""
    return Sampler(config, seeds=seeds).run()
