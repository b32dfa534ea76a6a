"""
Renyi differential privacy of the HOLD++ forward mechanism.

A released x_t given x_0 is Gaussian with covariance S_t (x) I_d and mean
exp(F t) x_0. Two data points differing by v in the data block are therefore
separated by the Mahalanobis form v^T R_t^{-1} v under the effective
correlation R_t = (exp(F t)^T S_t^{-1} exp(F t))^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import pandas as pd
import structlog
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve

from ..core.blocks import BlockScalarMatrix
from ..core.linalg import expm1
from ..core.params import HoldParams
from ..core.process import build_drift, initial_cov
from ..data.metrics import data_diameter_sq
from ..errors import NumericalError

logger = structlog.get_logger(__name__)

FloatArray = NDArray[np.float64]

DEFAULT_GRID_POINTS = 50


def _check_time(t: float) -> None:
    if not (np.isfinite(t) and t >= 0):
        raise ValueError(f"time must be finite and non-negative, got {t}")


def _check_alpha(alpha: float) -> None:
    if not alpha > 1:
        raise ValueError(f"Renyi order must exceed 1, got {alpha}")


def effective_correlation(params: HoldParams, t: float) -> BlockScalarMatrix:
    """
    R_t = S_0 + L^{-1} (exp(-F t) exp(-F t)^T - I).

    With K = exp(-F t) - I the bracket is K + K^T + K K^T, which keeps the
    small-t regime free of cancellation; at t=0 it is exactly S_0.
    """
    _check_time(t)
    k = expm1(-build_drift(params).entries * t)
    r = initial_cov(params).entries + params.inv_mass * (k + k.T + k @ k.T)
    if not np.all(np.isfinite(r)):
        raise NumericalError(f"effective correlation at t={t:.6g} is not finite")
    return BlockScalarMatrix(0.5 * (r + r.T))


def _data_block_precision(r: FloatArray) -> float:
    """(R^{-1})[1, 1] as the reciprocal of the Schur complement of R[2:, 2:]."""
    schur = r[0, 0]
    if r.shape[0] > 1:
        schur -= float(r[0, 1:] @ solve(r[1:, 1:], r[1:, 0], assume_a="pos"))
    if not schur > 0:
        raise NumericalError(f"data-block Schur complement {schur} is not positive")
    return 1.0 / schur


def sensitivity(params: HoldParams, t: float, delta2f: float) -> float:
    """
    Delta f_t: worst-case v^T R_t^{-1} v over data-block differences
    with |u|^2 = delta2f.

    Auxiliary blocks of v are zero, so the form reduces to delta2f (R_t^{-1})[1, 1].
    """
    if delta2f < 0:
        raise ValueError("squared data diameter must be non-negative")
    return delta2f * _data_block_precision(effective_correlation(params, t).entries)


def dataset_sensitivity(params: HoldParams, t: float, dataset: ArrayLike) -> float:
    """Largest (y - z)^T R_t^{-1} (y - z) over pairs of points of a finite dataset."""
    return sensitivity(params, t, data_diameter_sq(dataset))


def sensitivity_derivative(params: HoldParams, t: float, delta2f: float) -> float:
    """d Delta f_t / dt = -2 xi L^{-1} delta2f (e_1^T R_t^{-1} exp(-F t) e_n)^2."""
    r = effective_correlation(params, t).entries
    inv_e = np.eye(params.n) + expm1(-build_drift(params).entries * t)
    row = solve(r, np.eye(params.n)[:, 0], assume_a="sym")
    coupling = float(row @ inv_e[:, -1])
    return -2.0 * params.xi * params.inv_mass * delta2f * coupling**2


def rdp_epsilon(params: HoldParams, t: float, delta2f: float, alpha: float) -> float:
    """Releasing x_t is RDP(alpha, alpha * Delta f_t / 2)."""
    _check_alpha(alpha)
    return alpha * sensitivity(params, t, delta2f) / 2.0


def gaussian_renyi_divergence(
    mean_shift: ArrayLike, cov: BlockScalarMatrix | ArrayLike, alpha: float
) -> float:
    """
    D_alpha(N(0, S) || N(v, S)) = (alpha / 2) v^T S^{-1} v.

    A BlockScalarMatrix of order n acts on shifts of length n * d; a plain
    array is used as the full covariance.

    Raises:
        NumericalError: If the covariance is not positive definite.
    """
    _check_alpha(alpha)
    if isinstance(cov, BlockScalarMatrix):
        entries = cov.entries
    else:
        entries = np.asarray(cov, float)
    entries = np.atleast_2d(entries)
    v = np.asarray(mean_shift, dtype=np.float64).ravel()
    order = entries.shape[0]
    if v.size % order:
        raise ValueError(
            f"shift of length {v.size} does not fit a covariance of order {order}"
        )
    blocks = v.reshape(order, -1)
    try:
        factor = cho_factor(entries, lower=True)
    except LinAlgError as exc:
        raise NumericalError("covariance is not positive definite") from exc
    return float(alpha / 2.0 * np.sum(blocks * cho_solve(factor, blocks)))


def aux_guess_mse(params: HoldParams, *, per_dimension: bool = True) -> float:
    """
    Expected squared error when an adversary guesses zeros for the auxiliary start.

    beta L^{-1} (n - 1) per data dimension, d times that for the full state.
    """
    mse = params.aux_variance * (params.n - 1)
    return mse if per_dimension else mse * params.d


@dataclass(frozen=True, eq=False)
class PrivacyReport:
    """Sensitivity curve and the RDP bounds derived from it."""

    t_grid: FloatArray
    delta_f: FloatArray
    derivative: FloatArray
    alpha: float
    delta2f: float
    epsilon_bound: float
    epsilon_approx: float
    aux_mse: float
    aux_mse_full: float

    @property
    def epsilon(self) -> FloatArray:
        return self.alpha * self.delta_f / 2.0

    @property
    def violations(self) -> int:
        """Number of grid steps where Delta f_t fails to decrease strictly."""
        return int(np.count_nonzero(np.diff(self.delta_f) >= 0))

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "delta2f": self.delta2f,
            "epsilon_bound": self.epsilon_bound,
            "epsilon_approx": self.epsilon_approx,
            "aux_mse": self.aux_mse,
            "aux_mse_full": self.aux_mse_full,
            "t_grid": self.t_grid.tolist(),
            "delta_f": self.delta_f.tolist(),
            "epsilon": self.epsilon.tolist(),
        }

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": self.t_grid,
                "delta_f": self.delta_f,
                "epsilon": self.epsilon,
                "derivative": self.derivative,
            }
        )


def privacy_report(
    params: HoldParams,
    delta2f: float,
    alpha: float,
    t_grid: ArrayLike | None = None,
) -> PrivacyReport:
    """Evaluate Delta f_t on an increasing grid, by default 50 points over [0, T]."""
    _check_alpha(alpha)
    grid = (
        np.linspace(0.0, params.horizon, DEFAULT_GRID_POINTS)
        if t_grid is None
        else np.asarray(t_grid, dtype=np.float64).ravel()
    )
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be non-empty and strictly increasing")
    delta_f = np.array([sensitivity(params, float(t), delta2f) for t in grid])
    derivative = np.array(
        [sensitivity_derivative(params, float(t), delta2f) for t in grid]
    )
    report = PrivacyReport(
        t_grid=grid,
        delta_f=delta_f,
        derivative=derivative,
        alpha=alpha,
        delta2f=delta2f,
        epsilon_bound=alpha * sensitivity(params, 0.0, delta2f) / 2.0,
        epsilon_approx=alpha * delta2f / (2.0 * params.eps_num),
        aux_mse=aux_guess_mse(params),
        aux_mse_full=aux_guess_mse(params, per_dimension=False),
    )
    if report.violations:
        logger.warning("sensitivity_not_decreasing", violations=report.violations)
    logger.debug(
        "privacy_report_computed",
        n=params.n,
        alpha=alpha,
        epsilon_bound=report.epsilon_bound,
    )
    return report
