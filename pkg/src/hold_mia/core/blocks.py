"""Block-scalar algebra: every nd x nd operator is A (x) I_d with A of size n x n."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .linalg import cholesky_with_jitter, expm

FloatArray = NDArray[np.float64]


def _frozen(values: ArrayLike, ndim: int) -> FloatArray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BlockScalarMatrix:
    """An n x n matrix ``A`` standing for ``A (x) I_d`` on block-major states."""

    entries: FloatArray

    def __post_init__(self) -> None:
        arr = _frozen(self.entries, 2)
        if arr.shape[0] != arr.shape[1]:
            raise ValueError(f"block-scalar matrix must be square, got {arr.shape}")
        object.__setattr__(self, "entries", arr)

    @classmethod
    def identity(cls, order: int) -> BlockScalarMatrix:
        return cls(np.eye(order))

    @classmethod
    def diagonal(cls, values: ArrayLike) -> BlockScalarMatrix:
        return cls(np.diag(np.asarray(values, dtype=np.float64)))

    @property
    def order(self) -> int:
        return int(self.entries.shape[0])

    @property
    def T(self) -> BlockScalarMatrix:
        return BlockScalarMatrix(self.entries.T)

    def __matmul__(self, other: BlockScalarMatrix) -> BlockScalarMatrix:
        return BlockScalarMatrix(self.entries @ other.entries)

    def __add__(self, other: BlockScalarMatrix) -> BlockScalarMatrix:
        return BlockScalarMatrix(self.entries + other.entries)

    def __sub__(self, other: BlockScalarMatrix) -> BlockScalarMatrix:
        return BlockScalarMatrix(self.entries - other.entries)

    def scale(self, factor: float) -> BlockScalarMatrix:
        return BlockScalarMatrix(factor * self.entries)

    def inverse(self) -> BlockScalarMatrix:
        return BlockScalarMatrix(np.linalg.inv(self.entries))

    def exp(self, t: float = 1.0) -> BlockScalarMatrix:
        return BlockScalarMatrix(expm(self.entries * t))

    def cholesky(self, time: float = 0.0) -> BlockScalarMatrix:
        return BlockScalarMatrix(cholesky_with_jitter(self.entries, time))

    def apply(self, x: ArrayLike) -> FloatArray:
        """
        Apply ``A (x) I_d`` to flattened states.

        Args:
            x: Array of shape ``(..., n * d)``.

        Returns:
            Array of the same shape, each d-block a mix of the input blocks.
        """
        arr = np.asarray(x, dtype=np.float64)
        n = self.order
        blocks = arr.reshape(*arr.shape[:-1], n, arr.shape[-1] // n)
        mixed = np.einsum("ij,...jd->...id", self.entries, blocks)
        return mixed.reshape(arr.shape)

    def dense(self, d: int) -> FloatArray:
        """The full nd x nd matrix ``A (x) I_d``."""
        return np.kron(self.entries, np.eye(d))


@dataclass(frozen=True, eq=False)
class State:
    """A point of the augmented space: block 1 is data, blocks 2..n auxiliary."""

    blocks: FloatArray

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", _frozen(self.blocks, 2))

    @classmethod
    def from_flat(cls, values: ArrayLike, n: int) -> State:
        flat = np.asarray(values, dtype=np.float64).ravel()
        if flat.size % n:
            raise ValueError(
                f"state of length {flat.size} does not split into {n} blocks"
            )
        return cls(flat.reshape(n, -1))

    @classmethod
    def from_data(cls, q0: ArrayLike, n: int) -> State:
        """Data point in block 1, zeros in every auxiliary block."""
        q = np.asarray(q0, dtype=np.float64).ravel()
        blocks = np.zeros((n, q.size))
        blocks[0] = q
        return cls(blocks)

    @property
    def n(self) -> int:
        return int(self.blocks.shape[0])

    @property
    def d(self) -> int:
        return int(self.blocks.shape[1])

    @property
    def flat(self) -> FloatArray:
        return self.blocks.reshape(-1)

    @property
    def q(self) -> FloatArray:
        return self.blocks[0]


@dataclass(frozen=True, eq=False)
class GaussianMoments:
    """Mean and block-scalar covariance of the forward process at one time."""

    mean: State
    cov: BlockScalarMatrix
    chol: BlockScalarMatrix
    time: float
