"""HOLD++ forward process: drift/diffusion matrices, moments and exact sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import structlog
from numpy.typing import ArrayLike, NDArray

from ..errors import NumericalError
from .blocks import BlockScalarMatrix, GaussianMoments, State
from .linalg import cholesky_stack, expm
from .params import HoldParams

logger = structlog.get_logger(__name__)

FloatArray = NDArray[np.float64]

CRITICAL_TOLERANCE = 1e-6


def build_drift(params: HoldParams) -> BlockScalarMatrix:
    """F = sum_i gamma_i (E_{i,i+1} - E_{i+1,i}) - xi E_{n,n}."""
    n = params.n
    f = np.zeros((n, n))
    for i, gamma in enumerate(params.gammas):
        f[i, i + 1] = gamma
        f[i + 1, i] = -gamma
    f[n - 1, n - 1] = -params.xi
    return BlockScalarMatrix(f)


def build_diffusion(params: HoldParams) -> BlockScalarMatrix:
    """G = sqrt(2 xi L^{-1}) E_{n,n}."""
    g = np.zeros((params.n, params.n))
    g[-1, -1] = np.sqrt(2.0 * params.xi * params.inv_mass)
    return BlockScalarMatrix(g)


def matrix_exp(a: BlockScalarMatrix, t: float) -> BlockScalarMatrix:
    """exp(A t) by scaling and squaring."""
    if not np.isfinite(t):
        raise NumericalError(f"non-finite time {t}")
    return a.exp(t)


def initial_cov(params: HoldParams) -> BlockScalarMatrix:
    """S_0 = diag(eps_num, beta L^{-1}, ..., beta L^{-1})."""
    diag = np.full(params.n, params.aux_variance)
    diag[0] = params.eps_num
    return BlockScalarMatrix.diagonal(diag)


def moment_factors(
    params: HoldParams, times: ArrayLike
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """
    Stacked forward-process factors for a vector of times.

    Returns:
        Tuple ``(E, S, L)`` of shape ``(k, n, n)`` each: ``E = exp(F t)``,
        ``S = L^{-1} I + E (S_0 - L^{-1} I) E^T`` and its lower Cholesky factor.
    """
    t = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("forward moments need finite times t >= 0")

    f = build_drift(params).entries
    n = params.n
    stationary = params.inv_mass * np.eye(n)
    e = expm(f[None, :, :] * t[:, None, None])
    centered = initial_cov(params).entries - stationary
    s = stationary + e @ centered @ np.swapaxes(e, -1, -2)
    s = 0.5 * (s + np.swapaxes(s, -1, -2))
    return e, s, cholesky_stack(s, t)


def forward_moments(params: HoldParams, x0: State, t: float) -> GaussianMoments:
    """Mean and covariance of x_t given x_0."""
    if x0.n != params.n or x0.d != params.d:
        raise ValueError(
            f"state has shape {x0.blocks.shape}, expected ({params.n}, {params.d})"
        )
    e, s, chol = moment_factors(params, [t])
    mean = State(e[0] @ x0.blocks)
    return GaussianMoments(
        mean=mean,
        cov=BlockScalarMatrix(s[0]),
        chol=BlockScalarMatrix(chol[0]),
        time=float(t),
    )


def sample_forward(
    params: HoldParams, x0: State, t: float, noise: ArrayLike
) -> State:
    """x_t = mu_t + (l_t (x) I_d) noise."""
    eps = np.asarray(noise, dtype=np.float64)
    if eps.size != params.state_dim:
        raise ValueError(f"noise has {eps.size} entries, expected {params.state_dim}")
    moments = forward_moments(params, x0, t)
    flat = moments.mean.flat + moments.chol.apply(eps.ravel())
    return State.from_flat(flat, params.n)


def conditional_score_last_block(
    moments: GaussianMoments, noise_last: ArrayLike
) -> FloatArray:
    """
    Last d-block of -Sigma_t^{-1}(x_t - mu_t), equal to -eps_n / l_t[n, n].

    Sigma^{-1} L eps = L^{-T} eps and the last row of L^{-T} is e_n / l_nn.
    """
    l_nn = float(moments.chol.entries[-1, -1])
    if not l_nn > 0:
        raise NumericalError(f"last Cholesky pivot {l_nn} is not positive")
    return -np.asarray(noise_last, dtype=np.float64) / l_nn


@dataclass(frozen=True)
class DampingReport:
    """Spectrum of the drift matrix and whether it is critically damped."""

    eigenvalues: FloatArray
    is_critical: bool
    rate: float
    residual: float


def critical_damping_diagnostic(f: BlockScalarMatrix) -> DampingReport:
    """
    Check that every eigenvalue of F is real, negative and equal.

    A single eigenvalue mu = tr(F) / n means F - mu I is nilpotent; testing
    that directly avoids the ill-conditioned eigenvalues of a Jordan block.
    """
    a = f.entries
    n = f.order
    mu = float(np.trace(a)) / n
    shifted = np.linalg.matrix_power(a - mu * np.eye(n), n)
    scale = max(float(np.linalg.norm(a, 2)), abs(mu), np.finfo(float).tiny) ** n
    residual = float(np.linalg.norm(shifted, 2)) / scale
    is_critical = mu < 0 and residual <= CRITICAL_TOLERANCE
    report = DampingReport(
        eigenvalues=np.linalg.eigvals(a),
        is_critical=bool(is_critical),
        rate=-mu,
        residual=residual,
    )
    if not report.is_critical:
        logger.warning(
            "damping_not_critical",
            order=n,
            residual=residual,
            eigenvalues=[complex(v) for v in report.eigenvalues],
        )
    return report
