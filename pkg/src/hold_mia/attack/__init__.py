"""Membership inference against trained score networks."""

from __future__ import annotations

from .pia import (
    AttackConfig,
    AttackReport,
    attack_metric,
    attack_metrics,
    attack_times,
    deterministic_forward_estimate,
    per_time_auroc,
    residual_matrix,
    run_pia,
)

__all__ = [
    "AttackConfig",
    "AttackReport",
    "attack_metric",
    "attack_metrics",
    "attack_times",
    "deterministic_forward_estimate",
    "per_time_auroc",
    "residual_matrix",
    "run_pia",
]
