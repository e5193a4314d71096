"""Run configuration and its key = value file format.

Example file (every section and key is optional; defaults reproduce the
bimodal benchmark with adaptive Wang-Landau, c = 0.1)::

    [target]
    weights = 0.5, 0.5
    means = -15, 15
    sds = 1, 1

    [ladder]
    t_max = 10
    rungs = 10

    [schedule]
    kind = flat_histogram
    c = 0.1

    [engine]
    iterations = 10000
    particles = 10
    seed = 1
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

from .bias import Deterministic, FlatHistogram, Frozen, StepSchedule
from .partition import SplitPolicy, TemperatureLadder
from .target import GaussianMixture, paper_mixture

COMPOSITIONS = ("both", "alternate", "x_only")


class ConfigError(ValueError):
    """Invalid or unknown configuration key."""


@dataclass(frozen=True)
class ProposalSpec:
    sigma: float = 10.0
    target_rate: float = 0.234
    adapt: bool = True
    adapt_exponent: float = 0.6
    # stop adapting after this many sweeps; 0 adapts for the whole run
    adapt_until: int = 0
    composition: str = "both"


@dataclass(frozen=True)
class InitSpec:
    kind: str = "normal"
    mean: float = 0.0
    sd: float = 1.0
    x: float = 0.0
    rungs: str = "cold"


@dataclass(frozen=True)
class RunConfig:
    target: GaussianMixture = field(default_factory=paper_mixture)
    ladder: TemperatureLadder = field(default_factory=lambda: TemperatureLadder.arithmetic(10, 10))
    schedule: StepSchedule = field(default_factory=FlatHistogram)
    proposal: ProposalSpec = field(default_factory=ProposalSpec)
    split: SplitPolicy = field(default_factory=SplitPolicy)
    n_iter: int = 10_000
    particles: int = 1
    seed: int = 0
    init: InitSpec = field(default_factory=InitSpec)
    record_stride: int = 1
    true_mean: float | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.n_iter < 1:
            raise ConfigError(f"engine.iterations must be >= 1, got {self.n_iter}")
        if self.particles < 1:
            raise ConfigError(f"engine.particles must be >= 1, got {self.particles}")
        if self.record_stride < 1:
            raise ConfigError(f"engine.record_stride must be >= 1, got {self.record_stride}")
        if self.seed < 0:
            raise ConfigError(f"engine.seed must be non-negative, got {self.seed}")
        p = self.proposal
        if not p.sigma > 0:
            raise ConfigError(f"proposal.sigma must be positive, got {p.sigma}")
        if not 0 < p.target_rate < 1:
            raise ConfigError(f"proposal.target_rate must lie in (0, 1), got {p.target_rate}")
        if not 0.5 < p.adapt_exponent <= 1:
            raise ConfigError(
                f"proposal.adapt_exponent must lie in (0.5, 1], got {p.adapt_exponent}"
            )
        if p.adapt_until < 0:
            raise ConfigError(f"proposal.adapt_until must be >= 0, got {p.adapt_until}")
        if p.composition not in COMPOSITIONS:
            raise ConfigError(
                f"proposal.composition must be one of {COMPOSITIONS}, got {p.composition!r}"
            )
        if self.init.kind not in ("normal", "point"):
            raise ConfigError(f"engine.init must be 'normal' or 'point', got {self.init.kind!r}")
        if self.init.kind == "normal" and not self.init.sd > 0:
            raise ConfigError(f"engine.init_sd must be positive, got {self.init.sd}")
        if self.init.rungs not in ("cold", "uniform"):
            raise ConfigError(
                f"engine.init_rungs must be 'cold' or 'uniform', got {self.init.rungs!r}"
            )
        if self.split.enabled and self.split.max_rungs < self.ladder.d:
            raise ConfigError(
                f"split.max_rungs ({self.split.max_rungs}) is below the ladder size {self.ladder.d}"
            )

    def with_(self, **changes: Any) -> "RunConfig":
        return replace(self, **changes)

    def resolved_true_mean(self) -> float:
        """True target mean for RMSE; known for the benchmark mixture only."""
        if self.true_mean is not None:
            return self.true_mean
        if self.target == paper_mixture():
            return 0.0
        raise ConfigError("target.true_mean is required to score RMSE on a custom target")


def resolve_t0(expr: str | int, n_iter: int) -> int:
    """``1``, ``N/4``, ``N/2`` or a plain integer, evaluated against ``n_iter``."""
    if isinstance(expr, int):
        return expr
    text = str(expr).replace(" ", "").upper()
    if text.startswith("N/"):
        try:
            div = int(text[2:])
        except ValueError:
            raise ConfigError(f"schedule.t0: cannot parse {expr!r}") from None
        return max(1, n_iter // div)
    if text == "N":
        return n_iter
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"schedule.t0: cannot parse {expr!r}") from None


# ---------------------------------------------------------------- file format


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.split(",") if v.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_KEYS: dict[str, dict[str, Callable[[str], Any]]] = {
    "target": {
        "kind": str,
        "weights": _floats,
        "means": _floats,
        "sds": _floats,
        "true_mean": float,
    },
    "ladder": {"temps": _floats, "t_max": float, "rungs": int},
    "schedule": {"kind": str, "t0": str, "c": float, "gamma0": float, "decay": float},
    "proposal": {
        "sigma": float,
        "target_rate": float,
        "adapt": _bool,
        "adapt_exponent": float,
        "adapt_until": int,
        "composition": str,
    },
    "engine": {
        "iterations": int,
        "particles": int,
        "seed": int,
        "init": str,
        "init_mean": float,
        "init_sd": float,
        "init_x": float,
        "init_rungs": str,
        "record_stride": int,
    },
    "split": {
        "enabled": _bool,
        "skew_threshold": float,
        "min_samples": int,
        "max_rungs": int,
        "every": int,
    },
}


def _read_sections(text: str) -> dict[str, dict[str, Any]]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    out: dict[str, dict[str, Any]] = {}
    for section in parser.sections():
        if section not in _KEYS:
            raise ConfigError(f"unknown section [{section}]")
        out[section] = {}
        for key, raw in parser.items(section):
            if key not in _KEYS[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            try:
                out[section][key] = _KEYS[section][key](raw)
            except ValueError as exc:
                raise ConfigError(f"{section}.{key}: {exc}") from None
    return out


def parse_config(text: str) -> RunConfig:
    s = _read_sections(text)
    base = RunConfig()
    try:
        return _build(s, base)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _build(s: dict[str, dict[str, Any]], base: RunConfig) -> RunConfig:
    tg = s.get("target", {})
    if tg.get("kind", "mixture") != "mixture":
        raise ConfigError(f"target.kind: only 'mixture' is supported, got {tg['kind']!r}")
    target = base.target
    if {"weights", "means", "sds"} & tg.keys():
        missing = {"weights", "means", "sds"} - tg.keys()
        if missing:
            raise ConfigError(f"target: missing {sorted(missing)} alongside the other mixture keys")
        target = GaussianMixture(tg["weights"], tg["means"], tg["sds"])

    ld = s.get("ladder", {})
    if "temps" in ld:
        if {"t_max", "rungs"} & ld.keys():
            raise ConfigError("ladder: give either temps or (t_max, rungs), not both")
        ladder = TemperatureLadder(ld["temps"])
    elif {"t_max", "rungs"} & ld.keys():
        if {"t_max", "rungs"} - ld.keys():
            raise ConfigError("ladder: t_max and rungs must be given together")
        ladder = TemperatureLadder.arithmetic(ld["t_max"], ld["rungs"])
    else:
        ladder = base.ladder

    en = s.get("engine", {})
    n_iter = en.get("iterations", base.n_iter)

    sc = s.get("schedule", {})
    kind = sc.get("kind", "flat_histogram")
    if kind == "flat_histogram":
        if "t0" in sc:
            raise ConfigError("schedule.t0 applies to kind = deterministic only")
        defaults = FlatHistogram()
        schedule: StepSchedule = FlatHistogram(
            sc.get("c", defaults.c), sc.get("gamma0", defaults.gamma0), sc.get("decay", defaults.decay)
        )
    elif kind == "deterministic":
        extra = {"c", "gamma0", "decay"} & sc.keys()
        if extra:
            raise ConfigError(f"schedule.{sorted(extra)[0]} applies to kind = flat_histogram only")
        schedule = Deterministic(resolve_t0(sc.get("t0", "1"), n_iter))
    elif kind == "frozen":
        if set(sc) - {"kind"}:
            raise ConfigError("schedule kind = frozen takes no parameters")
        schedule = Frozen()
    else:
        raise ConfigError(f"schedule.kind must be flat_histogram, deterministic or frozen, got {kind!r}")

    pr = s.get("proposal", {})
    proposal = replace(base.proposal, **pr)
    init = InitSpec(
        kind=en.get("init", "normal"),
        mean=en.get("init_mean", 0.0),
        sd=en.get("init_sd", 1.0),
        x=en.get("init_x", 0.0),
        rungs=en.get("init_rungs", "cold"),
    )
    split = replace(base.split, **s.get("split", {}))
    return RunConfig(
        target=target,
        ladder=ladder,
        schedule=schedule,
        proposal=proposal,
        split=split,
        n_iter=n_iter,
        particles=en.get("particles", base.particles),
        seed=en.get("seed", base.seed),
        init=init,
        record_stride=en.get("record_stride", base.record_stride),
        true_mean=tg.get("true_mean"),
    )


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())
