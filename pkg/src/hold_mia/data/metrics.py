"""Two-sample discrepancies used as a sample-quality metric."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.distance import cdist, pdist

from .processor import ensure_dataset

FloatArray = NDArray[np.float64]


def energy_distance(a: ArrayLike, b: ArrayLike) -> float:
    """2 E|a - b| - E|a - a'| - E|b - b'| over all pairs (V-statistic)."""
    x = ensure_dataset(a)
    y = ensure_dataset(b, x.shape[1])
    cross = cdist(x, y).mean()
    within_x = cdist(x, x).mean()
    within_y = cdist(y, y).mean()
    return max(float(2.0 * cross - within_x - within_y), 0.0)


@dataclass(frozen=True, eq=False)
class PermutationTest:
    statistic: float
    null: FloatArray
    p_value: float

    def critical_value(self, level: float = 0.95) -> float:
        return float(np.quantile(self.null, level))


def _energy_from_pooled(
    dist: FloatArray, idx_a: NDArray[np.int64], idx_b: NDArray[np.int64]
) -> float:
    cross = dist[np.ix_(idx_a, idx_b)].mean()
    within_a = dist[np.ix_(idx_a, idx_a)].mean()
    within_b = dist[np.ix_(idx_b, idx_b)].mean()
    return float(2.0 * cross - within_a - within_b)


def energy_permutation_test(
    a: ArrayLike,
    b: ArrayLike,
    permutations: int,
    rng: np.random.Generator,
) -> PermutationTest:
    """
    Permutation null of the energy distance under exchangeability of the pool.

    The p-value counts the observed statistic as one of the permutations.
    """
    x = ensure_dataset(a)
    y = ensure_dataset(b, x.shape[1])
    pooled = np.vstack([x, y])
    dist = cdist(pooled, pooled)
    m = len(x)
    observed = _energy_from_pooled(dist, np.arange(m), np.arange(m, len(pooled)))
    null = np.empty(permutations)
    for k in range(permutations):
        order = rng.permutation(len(pooled))
        null[k] = _energy_from_pooled(dist, order[:m], order[m:])
    p_value = (1.0 + np.count_nonzero(null >= observed)) / (1.0 + permutations)
    return PermutationTest(statistic=observed, null=null, p_value=float(p_value))


def data_diameter_sq(dataset: ArrayLike) -> float:
    """Largest squared Euclidean distance between two points of the dataset."""
    data = ensure_dataset(dataset)
    if len(data) < 2:
        return 0.0
    return float(pdist(data, "sqeuclidean").max())
