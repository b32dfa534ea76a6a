"""Renyi-DP accounting for the forward diffusion mechanism."""

from __future__ import annotations

from .accountant import (
    PrivacyReport,
    aux_guess_mse,
    dataset_sensitivity,
    effective_correlation,
    gaussian_renyi_divergence,
    privacy_report,
    rdp_epsilon,
    sensitivity,
    sensitivity_derivative,
)

__all__ = [
    "PrivacyReport",
    "aux_guess_mse",
    "dataset_sensitivity",
    "effective_correlation",
    "gaussian_renyi_divergence",
    "privacy_report",
    "rdp_epsilon",
    "sensitivity",
    "sensitivity_derivative",
]
