"""Reverse-time integration from the stationary prior with a learned score."""

from __future__ import annotations

from typing import Literal

import numpy as np
import structlog
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field

from ..core.params import HoldParams
from ..core.process import build_drift
from ..errors import NumericalError
from ..models.network import ScoreModel

logger = structlog.get_logger(__name__)

FloatArray = NDArray[np.float64]

Scheme = Literal["probability-flow", "reverse-sde"]


class IntegratorConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    steps: int = Field(default=500, ge=1)
    scheme: Scheme = "probability-flow"
    t_end: float | None = Field(default=None, ge=0.0)

    def resolved_t_end(self, horizon: float) -> float:
        t_end = self.t_end if self.t_end is not None else 1e-3 * horizon
        if not 0.0 <= t_end < horizon:
            raise ValueError(f"t_end={t_end} must lie in [0, T={horizon})")
        return t_end


def _as_batch(params: HoldParams, x: ArrayLike) -> FloatArray:
    arr = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if arr.shape[1] != params.state_dim:
        raise ValueError(
            f"states have {arr.shape[1]} entries, expected {params.state_dim}"
        )
    return arr


def _stacked_score(
    params: HoldParams, net: ScoreModel, x: FloatArray, t: float
) -> FloatArray:
    """S_theta: zeros in blocks 1..n-1, s_theta in block n."""
    full = np.zeros_like(x)
    full[:, -params.d :] = net(x, np.full(x.shape[0], t))
    return full


def _check(x: FloatArray, t: float) -> FloatArray:
    if not np.all(np.isfinite(x)):
        raise NumericalError(
            f"reverse integration produced non-finite states at t={t:.6g}"
        )
    return x


def sample_prior(
    params: HoldParams, rng: np.random.Generator, count: int
) -> FloatArray:
    """``count`` i.i.d. draws from N(0, L^{-1} I_nd), one flattened state per row."""
    if count < 1:
        raise ValueError("count must be at least 1")
    return np.sqrt(params.inv_mass) * rng.standard_normal((count, params.state_dim))


def probability_flow_step(
    params: HoldParams, net: ScoreModel, x: ArrayLike, t: float, dt: float
) -> FloatArray:
    """Euler step of dx = (F x - xi L^{-1} S_theta(x, t)) dt with dt <= 0."""
    if dt > 0:
        raise ValueError("reverse-time steps need dt <= 0")
    states = _as_batch(params, x)
    drift = build_drift(params).apply(states)
    drift -= params.xi * params.inv_mass * _stacked_score(params, net, states, t)
    return _check(states + drift * dt, t + dt)


def reverse_sde_step(
    params: HoldParams,
    net: ScoreModel,
    x: ArrayLike,
    t: float,
    dt: float,
    rng: np.random.Generator,
) -> FloatArray:
    """
    Euler-Maruyama step of dx = (F x - 2 xi L^{-1} S_theta) dt + G dw, dt <= 0.

    Noise of standard deviation sqrt(2 xi L^{-1} |dt|) enters block n only.
    """
    if dt > 0:
        raise ValueError("reverse-time steps need dt <= 0")
    states = _as_batch(params, x)
    drift = build_drift(params).apply(states)
    drift -= 2.0 * params.xi * params.inv_mass * _stacked_score(params, net, states, t)
    noise = np.zeros_like(states)
    noise[:, -params.d :] = rng.standard_normal((states.shape[0], params.d))
    scale = np.sqrt(2.0 * params.xi * params.inv_mass * abs(dt))
    return _check(states + drift * dt + scale * noise, t + dt)


def integrate(
    params: HoldParams,
    net: ScoreModel,
    cfg: IntegratorConfig,
    rng: np.random.Generator,
    start: ArrayLike,
) -> FloatArray:
    """Run the configured scheme from t=T down to t_end on a uniform grid."""
    t_end = cfg.resolved_t_end(params.horizon)
    grid = np.linspace(params.horizon, t_end, cfg.steps + 1)
    x = _as_batch(params, start)
    for t_now, t_next in zip(grid[:-1], grid[1:], strict=True):
        dt = float(t_next - t_now)
        if cfg.scheme == "probability-flow":
            x = probability_flow_step(params, net, x, float(t_now), dt)
        else:
            x = reverse_sde_step(params, net, x, float(t_now), dt, rng)
    return x


def generate(
    params: HoldParams,
    net: ScoreModel,
    cfg: IntegratorConfig,
    rng: np.random.Generator,
    count: int,
) -> FloatArray:
    """Synthetic data points: the q-block of reverse-integrated prior draws."""
    start = sample_prior(params, rng, count)
    final = integrate(params, net, cfg, rng, start)
    logger.debug("generated_samples", count=count, scheme=cfg.scheme, steps=cfg.steps)
    return final[:, : params.d]
