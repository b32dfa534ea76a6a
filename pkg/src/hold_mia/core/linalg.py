"""Dense kernels on (stacks of) small square matrices."""

from __future__ import annotations

import math

import numpy as np
import structlog
from numpy.typing import NDArray

from ..errors import CholeskyError, NumericalError

logger = structlog.get_logger(__name__)

FloatArray = NDArray[np.float64]

TAYLOR_DEGREE = 18
SCALED_NORM = 0.5
CHOLESKY_JITTER = 1e-12


def _check_finite(a: FloatArray) -> None:
    if not np.all(np.isfinite(a)):
        raise NumericalError("matrix has non-finite entries")


def _scaling_exponent(a: FloatArray) -> int:
    # 1-norm of every matrix in the stack; one exponent serves the whole stack
    norm = float(np.abs(a).sum(axis=-2).max(initial=0.0))
    if norm <= SCALED_NORM:
        return 0
    return int(math.ceil(math.log2(norm / SCALED_NORM)))


def _taylor_expm1(b: FloatArray) -> FloatArray:
    """Truncated series of exp(B) - I evaluated in Horner form."""
    eye = np.eye(b.shape[-1])
    acc = np.broadcast_to(eye, b.shape).copy()
    for k in range(TAYLOR_DEGREE, 1, -1):
        acc = eye + (b @ acc) / k
    return b @ acc


def expm(a: FloatArray) -> FloatArray:
    """
    Matrix exponential by scaling and squaring.

    Args:
        a: Array of shape ``(..., m, m)``.

    Returns:
        ``exp(a)`` for every matrix in the stack.
    """
    a = np.asarray(a, dtype=np.float64)
    _check_finite(a)
    s = _scaling_exponent(a)
    e = np.eye(a.shape[-1]) + _taylor_expm1(a / 2.0**s)
    for _ in range(s):
        e = e @ e
    return e


def expm1(a: FloatArray) -> FloatArray:
    """
    ``exp(a) - I`` without cancellation for small ``a``.

    Squaring uses exp(2B) - I = K^2 + 2K with K = exp(B) - I.
    """
    a = np.asarray(a, dtype=np.float64)
    _check_finite(a)
    s = _scaling_exponent(a)
    k = _taylor_expm1(a / 2.0**s)
    for _ in range(s):
        k = k @ k + 2.0 * k
    return k


def cholesky_with_jitter(cov: FloatArray, time: float) -> FloatArray:
    """
    Lower Cholesky factor, retrying once with ``1e-12 * I`` added.

    Raises:
        CholeskyError: If the matrix is still not positive definite.
    """
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass

    min_eig = float(np.linalg.eigvalsh(cov).min())
    logger.warning("cholesky_jitter_applied", time=time, min_eigenvalue=min_eig)
    try:
        return np.linalg.cholesky(cov + CHOLESKY_JITTER * np.eye(cov.shape[-1]))
    except np.linalg.LinAlgError as exc:
        raise CholeskyError(time, min_eig) from exc


def cholesky_stack(covs: FloatArray, times: FloatArray) -> FloatArray:
    """Cholesky factors of a stack of covariances, one jitter retry per matrix."""
    try:
        return np.linalg.cholesky(covs)
    except np.linalg.LinAlgError:
        return np.stack(
            [
                cholesky_with_jitter(c, float(t))
                for c, t in zip(covs, times, strict=True)
            ]
        )
