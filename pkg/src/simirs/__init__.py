"""Simulator for IRS-assisted multi-BS mmWave downlinks: discrete passive
beamforming by fractional programming and user association by auction."""

from .config import PROFILES, ConfigError, ScenarioConfig, desk_profile, paper_profile
from .engine import METHODS, monte_carlo, run_alternating, run_baseline, sweep
from .phases import PhaseVector

__version__ = "0.1.0"

__all__ = [
    "PROFILES",
    "ConfigError",
    "ScenarioConfig",
    "desk_profile",
    "paper_profile",
    "METHODS",
    "monte_carlo",
    "run_alternating",
    "run_baseline",
    "sweep",
    "PhaseVector",
    "__version__",
]
