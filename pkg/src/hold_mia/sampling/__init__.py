"""Reverse-time samplers driven by a score model."""

from __future__ import annotations

from .integrators import (
    IntegratorConfig,
    generate,
    integrate,
    probability_flow_step,
    reverse_sde_step,
    sample_prior,
)

__all__ = [
    "IntegratorConfig",
    "generate",
    "integrate",
    "probability_flow_step",
    "reverse_sde_step",
    "sample_prior",
]
