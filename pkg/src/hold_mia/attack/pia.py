"""Proximal-initialization membership inference against a HOLD++ score network."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np
import pandas as pd
import structlog
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field

from ..core.blocks import State
from ..core.params import HoldParams
from ..core.process import build_drift, forward_moments, initial_cov, moment_factors
from ..data.processor import ensure_dataset
from ..errors import NumericalError
from ..models.network import ScoreModel
from ..models.statistics import (
    ConfidenceInterval,
    RocCurve,
    auroc_confidence_interval,
    mann_whitney_auroc,
    roc_curve,
)

logger = structlog.get_logger(__name__)

FloatArray = NDArray[np.float64]


class AttackConfig(BaseModel):
    """
    Attack settings.

    Attributes:
        n_time: Number of attack times on the grid (k - 1) T / n_time.
        p: Norm order of the drift residual; ``inf`` is allowed.
        use_mean: Threshold the time-averaged residual instead of one column.
        time_index: 1-based column thresholded when ``use_mean`` is false.
        stochastic_eps: Draw the auxiliary noise instead of zeroing it.
        seed: Seed for the stochastic variant.
    """

    model_config = ConfigDict(frozen=True)

    n_time: int = Field(default=10, ge=1)
    p: float = Field(default=2.0, gt=0.0)
    use_mean: bool = True
    time_index: int = Field(default=1, ge=1)
    stochastic_eps: bool = False
    seed: int = 0


@dataclass(frozen=True, eq=False)
class AttackReport:
    """Per-point residuals, membership labels and the resulting ROC."""

    r: FloatArray
    labels: NDArray[np.bool_]
    times: FloatArray
    statistic: FloatArray
    roc: RocCurve
    auroc: float
    auroc_ci: ConfidenceInterval
    p: float

    @property
    def r_mean(self) -> FloatArray:
        return self.r.mean(axis=1)

    @property
    def n_time(self) -> int:
        return int(self.r.shape[1])

    def to_dict(self) -> dict[str, Any]:
        return {
            "p": self.p,
            "times": self.times.tolist(),
            "labels": self.labels.astype(int).tolist(),
            "r": self.r.tolist(),
            "r_mean": self.r_mean.tolist(),
            "roc": {"fpr": self.roc.fpr.tolist(), "tpr": self.roc.tpr.tolist()},
            "auroc": self.auroc,
            "auroc_ci": [self.auroc_ci.low, self.auroc_ci.high],
            "per_time_auroc": [
                per_time_auroc(self, k) for k in range(1, self.n_time + 1)
            ],
        }

    def roc_frame(self) -> pd.DataFrame:
        """ROC points with the threshold that produced each of them."""
        return pd.DataFrame(
            {"threshold": self.roc.thresholds, "fpr": self.roc.fpr, "tpr": self.roc.tpr}
        )


def attack_times(params: HoldParams, n_time: int) -> FloatArray:
    """t_k = (k - 1) T / n_time for k = 1..n_time."""
    if n_time < 1:
        raise ValueError("n_time must be at least 1")
    return np.arange(n_time) * params.horizon / n_time


def attack_metrics(
    params: HoldParams,
    net: ScoreModel,
    states: ArrayLike,
    times: ArrayLike,
    p: float = 2.0,
) -> FloatArray:
    """||F x_t - xi L^{-1} S_theta(x_t, t)||_p for a batch of states."""
    x = np.atleast_2d(np.asarray(states, dtype=np.float64))
    if x.shape[1] != params.state_dim:
        raise ValueError(
            f"states have {x.shape[1]} entries, expected {params.state_dim}"
        )
    if not np.all(np.isfinite(x)):
        raise NumericalError("attack state is not finite")
    t = np.broadcast_to(np.asarray(times, dtype=np.float64), (x.shape[0],))
    residual = build_drift(params).apply(x)
    residual[:, -params.d :] -= params.xi * params.inv_mass * net(x, t)
    return np.linalg.norm(residual, ord=p, axis=1)


def attack_metric(
    params: HoldParams, net: ScoreModel, x_t: State, t: float, p: float = 2.0
) -> float:
    return float(attack_metrics(params, net, x_t.flat[None, :], [t], p)[0])


def _initial_noise(
    params: HoldParams, net: ScoreModel, q0: FloatArray, aux_noise: FloatArray | None
) -> tuple[FloatArray, FloatArray]:
    """Starting states (B, n, d) and noise vectors with eps_n = -s(x_0, 0) l_0[n, n]."""
    count = q0.shape[0]
    x0 = np.zeros((count, params.n, params.d))
    x0[:, 0] = q0
    score = net(x0.reshape(count, -1), np.zeros(count))
    noise = np.zeros_like(x0)
    if aux_noise is not None:
        noise[:, :-1] = aux_noise
    noise[:, -1] = -score * np.sqrt(initial_cov(params).entries[-1, -1])
    return x0, noise


def deterministic_forward_estimate(
    params: HoldParams,
    net: ScoreModel,
    q0: ArrayLike,
    aux_noise: ArrayLike | None = None,
) -> Callable[[float], State]:
    """
    Reconstruct the forward trajectory of ``q0`` from the score at t=0.

    The auxiliary blocks start at zero and only the last noise coordinate is
    set, to -s_theta(x_0, 0) times the last Cholesky pivot of S_0. The
    returned callable maps a time to mu_t + (l_t (x) I_d) eps.
    """
    q = np.asarray(q0, dtype=np.float64).reshape(1, -1)
    if q.shape[1] != params.d:
        raise ValueError(f"data point has {q.shape[1]} entries, expected {params.d}")
    aux = None if aux_noise is None else np.asarray(aux_noise, dtype=np.float64)
    if aux is not None:
        aux = aux.reshape(1, params.n - 1, params.d)
    x0, noise = _initial_noise(params, net, q, aux)
    start = State(x0[0])
    eps = noise[0].reshape(-1)

    def estimate(t: float) -> State:
        moments = forward_moments(params, start, t)
        return State.from_flat(moments.mean.flat + moments.chol.apply(eps), params.n)

    return estimate


def residual_matrix(
    params: HoldParams,
    net: ScoreModel,
    points: ArrayLike,
    cfg: AttackConfig,
    rng: np.random.Generator | None = None,
) -> FloatArray:
    """R[i, k] for every point and every attack time, shape (points, n_time)."""
    q0 = ensure_dataset(points, params.d)
    aux = None
    if cfg.stochastic_eps and params.n > 1:
        gen = rng if rng is not None else np.random.default_rng(cfg.seed)
        aux = gen.standard_normal((len(q0), params.n - 1, params.d))
    x0, noise = _initial_noise(params, net, q0, aux)

    times = attack_times(params, cfg.n_time)
    e, _, chol = moment_factors(params, times)
    r = np.empty((len(q0), cfg.n_time))
    for k, t in enumerate(times):
        states = e[k] @ x0 + chol[k] @ noise
        r[:, k] = attack_metrics(params, net, states.reshape(len(q0), -1), t, cfg.p)
    return r


def _statistic(r: FloatArray, cfg: AttackConfig) -> FloatArray:
    if cfg.use_mean:
        return r.mean(axis=1)
    if cfg.time_index > r.shape[1]:
        raise ValueError(f"time index {cfg.time_index} exceeds n_time={r.shape[1]}")
    return r[:, cfg.time_index - 1]


def run_pia(
    params: HoldParams,
    net: ScoreModel,
    members: ArrayLike,
    holdouts: ArrayLike,
    cfg: AttackConfig,
) -> AttackReport:
    """
    Score members and holdouts and evaluate "member iff statistic < tau".

    Raises:
        DatasetError: If either set is empty or has the wrong dimension.
    """
    member_data = ensure_dataset(members, params.d)
    holdout_data = ensure_dataset(holdouts, params.d)
    rng = np.random.default_rng(cfg.seed)
    r = np.vstack(
        [
            residual_matrix(params, net, member_data, cfg, rng),
            residual_matrix(params, net, holdout_data, cfg, rng),
        ]
    )
    labels = np.concatenate(
        [np.ones(len(member_data), dtype=bool), np.zeros(len(holdout_data), dtype=bool)]
    )
    stat = _statistic(r, cfg)
    auroc = mann_whitney_auroc(stat[labels], stat[~labels])
    logger.info(
        "attack_completed",
        members=len(member_data),
        holdouts=len(holdout_data),
        n_time=cfg.n_time,
        p=cfg.p,
        auroc=auroc,
    )
    return AttackReport(
        r=r,
        labels=labels,
        times=attack_times(params, cfg.n_time),
        statistic=stat,
        roc=roc_curve(stat[labels], stat[~labels]),
        auroc=auroc,
        auroc_ci=auroc_confidence_interval(stat[labels], stat[~labels]),
        p=cfg.p,
    )


def per_time_auroc(report: AttackReport, k: int) -> float:
    """AUROC with column ``k`` (1-based) of R as the statistic."""
    if not 1 <= k <= report.n_time:
        raise IndexError(f"time index {k} outside 1..{report.n_time}")
    column = report.r[:, k - 1]
    return mann_whitney_auroc(column[report.labels], column[~report.labels])
