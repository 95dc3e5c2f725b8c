"""Experiment harness and command line interface."""

from .config import FLAGSHIP, ConfigError, RunConfig, load_config
from .experiments import (PreconditionError, run, run_concentration, run_ground_state, run_stability,
                          run_stationary, run_sweep, run_transport, run_validate)

__all__ = [
    "FLAGSHIP",
    "ConfigError",
    "RunConfig",
    "load_config",
    "PreconditionError",
    "run",
    "run_concentration",
    "run_ground_state",
    "run_stability",
    "run_stationary",
    "run_sweep",
    "run_transport",
    "run_validate",
]
