"""HOLD++ forward process: parameters, block-scalar algebra and moments."""

from __future__ import annotations

from .blocks import BlockScalarMatrix, GaussianMoments, State
from .params import HoldParams, critical_parameters
from .process import (
    DampingReport,
    build_diffusion,
    build_drift,
    conditional_score_last_block,
    critical_damping_diagnostic,
    forward_moments,
    initial_cov,
    matrix_exp,
    moment_factors,
    sample_forward,
)

__all__ = [
    "BlockScalarMatrix",
    "DampingReport",
    "GaussianMoments",
    "HoldParams",
    "State",
    "build_diffusion",
    "build_drift",
    "conditional_score_last_block",
    "critical_damping_diagnostic",
    "critical_parameters",
    "forward_moments",
    "initial_cov",
    "matrix_exp",
    "moment_factors",
    "sample_forward",
]
