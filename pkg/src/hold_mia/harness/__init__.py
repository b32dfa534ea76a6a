"""Experiment orchestration and the command-line interface."""

from __future__ import annotations

from .config import ExperimentConfig, GridConfig, NetworkConfig, load_config
from .plots import emit_plots
from .sweep import (
    RunRecord,
    aggregate_ci,
    aggregate_time_ci,
    derive_seed,
    read_records,
    run_experiment,
    run_single,
)

__all__ = [
    "ExperimentConfig",
    "GridConfig",
    "NetworkConfig",
    "RunRecord",
    "aggregate_ci",
    "aggregate_time_ci",
    "derive_seed",
    "emit_plots",
    "load_config",
    "read_records",
    "run_experiment",
    "run_single",
]
