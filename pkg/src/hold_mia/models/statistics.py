"""Statistical summaries: ROC curves, rank AUROC and confidence intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import norm, rankdata

FloatArray = NDArray[np.float64]

Z_95 = 1.96


@dataclass(frozen=True)
class ConfidenceInterval:
    """Container for a mean and its normal-approximation interval."""

    mean: float
    low: float
    high: float
    half_width: float
    count: int


@dataclass(frozen=True, eq=False)
class RocCurve:
    """ROC points from (0, 0) to (1, 1) for the rule "member iff statistic <= tau"."""

    fpr: FloatArray
    tpr: FloatArray
    thresholds: FloatArray

    @property
    def area(self) -> float:
        """Trapezoidal area under the curve."""
        return float(np.sum(np.diff(self.fpr) * (self.tpr[1:] + self.tpr[:-1]) / 2.0))


def _scores(values: ArrayLike, label: str) -> FloatArray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError(f"{label} scores are empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{label} scores contain non-finite values")
    return arr


def mean_confidence_interval(values: ArrayLike, z: float = Z_95) -> ConfidenceInterval:
    """
    Mean plus/minus ``z * sd / sqrt(k)`` with the sample standard deviation.

    Raises:
        ValueError: With fewer than two values.
    """
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size < 2:
        raise ValueError("a confidence interval needs at least two values")
    mean = float(arr.mean())
    half = float(z * arr.std(ddof=1) / np.sqrt(arr.size))
    return ConfidenceInterval(mean, mean - half, mean + half, half, int(arr.size))


def mann_whitney_auroc(member_scores: ArrayLike, holdout_scores: ArrayLike) -> float:
    """
    P(member statistic < holdout statistic), each tied pair counting 1/2.

    Lower statistics are taken as evidence of membership.
    """
    members = _scores(member_scores, "member")
    holdouts = _scores(holdout_scores, "holdout")
    ranks = rankdata(np.concatenate([members, holdouts]))
    h = holdouts.size
    u_holdout = ranks[members.size :].sum() - h * (h + 1) / 2.0
    return float(u_holdout / (members.size * h))


def roc_curve(member_scores: ArrayLike, holdout_scores: ArrayLike) -> RocCurve:
    """Sweep every distinct statistic value as a threshold."""
    members = np.sort(_scores(member_scores, "member"))
    holdouts = np.sort(_scores(holdout_scores, "holdout"))
    thresholds = np.unique(np.concatenate([members, holdouts]))
    tpr = np.searchsorted(members, thresholds, side="right") / members.size
    fpr = np.searchsorted(holdouts, thresholds, side="right") / holdouts.size
    return RocCurve(
        fpr=np.concatenate([[0.0], fpr]),
        tpr=np.concatenate([[0.0], tpr]),
        thresholds=np.concatenate([[-np.inf], thresholds]),
    )


def auroc_confidence_interval(
    member_scores: ArrayLike, holdout_scores: ArrayLike, level: float = 0.95
) -> ConfidenceInterval:
    """DeLong variance of the rank AUROC with a normal interval clipped to [0, 1]."""
    members = _scores(member_scores, "member")
    holdouts = _scores(holdout_scores, "holdout")
    m, h = members.size, holdouts.size
    auc = mann_whitney_auroc(members, holdouts)
    if m < 2 or h < 2:
        return ConfidenceInterval(auc, 0.0, 1.0, float("nan"), m + h)

    # mid-ranks with members as the positive class and higher meaning "member"
    pooled = rankdata(-np.concatenate([members, holdouts]))
    v_member = (pooled[:m] - rankdata(-members)) / h
    v_holdout = 1.0 - (pooled[m:] - rankdata(-holdouts)) / m
    variance = v_member.var(ddof=1) / m + v_holdout.var(ddof=1) / h
    half = float(norm.ppf(0.5 + level / 2.0) * np.sqrt(variance))
    return ConfidenceInterval(
        auc, max(auc - half, 0.0), min(auc + half, 1.0), half, m + h
    )
