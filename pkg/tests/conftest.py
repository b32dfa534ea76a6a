"""Shared fixtures and small score models for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from hold_mia.core.params import HoldParams


class ConstantScore:
    """Score model returning the same vector for every state and time."""

    def __init__(self, value: np.ndarray) -> None:
        self.value = np.asarray(value, dtype=np.float64)

    def __call__(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(x).shape[0]
        return np.broadcast_to(self.value, (rows, self.value.size)).copy()


class StationaryScore:
    """Exact score of N(0, L^{-1} I) in the last block: -x_n / L^{-1}."""

    def __init__(self, params: HoldParams) -> None:
        self.params = params

    def __call__(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        return -np.atleast_2d(x)[:, -self.params.d :] / self.params.inv_mass


def random_params(rng: np.random.Generator, n: int, d: int) -> HoldParams:
    """Valid (not necessarily critical) parameters in moderate ranges."""
    return HoldParams(
        n=n,
        d=d,
        gammas=tuple(rng.uniform(1.0, 3.0, size=n - 1)),
        xi=float(rng.uniform(1.0, 3.0)),
        inv_mass=1.0,
        beta=float(rng.uniform(1.0, 10.0)),
        eps_num=float(10 ** rng.uniform(-4, -2)),
        horizon=float(rng.uniform(1.0, 2.0)),
    )


def brute_force_auroc(members: np.ndarray, holdouts: np.ndarray) -> float:
    """Pairwise count of member < holdout, ties counted 1/2."""
    wins = 0.0
    for m in members:
        for h in holdouts:
            wins += 1.0 if m < h else 0.5 if m == h else 0.0
    return wins / (len(members) * len(holdouts))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def cld_params() -> HoldParams:
    """Second-order process with gamma=1, xi=2, d=2."""
    return HoldParams(n=2, d=2, gammas=(1.0,), xi=2.0, beta=2.0, eps_num=1e-2)
