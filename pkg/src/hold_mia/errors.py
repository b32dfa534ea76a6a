"""Exception hierarchy shared across the package."""

from __future__ import annotations


class HoldError(Exception):
    """Base class for all package errors."""


class NumericalError(HoldError, ArithmeticError):
    """A computation produced or received non-finite values."""


class CholeskyError(NumericalError):
    """A covariance factor was not numerically positive definite."""

    def __init__(self, time: float, min_eigenvalue: float) -> None:
        super().__init__(
            f"covariance at t={time:.6g} is not positive definite "
            f"(smallest eigenvalue {min_eigenvalue:.3e})"
        )
        self.time = time
        self.min_eigenvalue = min_eigenvalue


class DivergenceError(NumericalError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, loss: float) -> None:
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss


class CheckpointError(HoldError):
    """A checkpoint could not be written or read."""


class CheckpointVersionError(CheckpointError):
    """The checkpoint format version is not supported."""


class CheckpointDimensionError(CheckpointError):
    """The checkpoint architecture does not match what the caller expects."""


class CheckpointCorruptError(CheckpointError):
    """The checkpoint file is truncated or malformed."""


class DatasetError(HoldError, ValueError):
    """A dataset is empty, has the wrong dimension, or cannot be split."""
