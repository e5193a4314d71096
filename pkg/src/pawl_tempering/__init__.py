"""Simulated tempering driven by a parallel adaptive Wang-Landau bias."""
from .bias import BiasState, Deterministic, FlatHistogram, Frozen
from .config import ConfigError, RunConfig, load_config, parse_config
from .engine import Sampler, Summary, Trace, posterior_mean, run, run_replicates
from .partition import SplitPolicy, TemperatureLadder
from .target import GaussianMixture, TemperedDensity, paper_mixture

__all__ = [
    "BiasState",
    "ConfigError",
    "Deterministic",
    "FlatHistogram",
    "Frozen",
    "GaussianMixture",
    "RunConfig",
    "Sampler",
    "SplitPolicy",
    "Summary",
    "TemperatureLadder",
    "TemperedDensity",
    "Trace",
    "load_config",
    "paper_mixture",
    "parse_config",
    "posterior_mean",
    "run",
    "run_replicates",
]
