"""Tests for the proximal-initialization membership inference attack."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
import scipy.linalg

from hold_mia.attack import (
    AttackConfig,
    attack_metric,
    attack_metrics,
    attack_times,
    deterministic_forward_estimate,
    per_time_auroc,
    residual_matrix,
    run_pia,
)
from hold_mia.core import HoldParams, State, forward_moments, initial_cov
from hold_mia.data.spiral import SpiralConfig, generate_spiral
from hold_mia.errors import DatasetError, NumericalError
from hold_mia.models.network import init_network
from tests.conftest import ConstantScore, brute_force_auroc


class LinearScore:
    """s(x, t) = -(1 + t)(x_1 + x_n), a smooth stand-in for a trained network."""

    def __init__(self, params: HoldParams) -> None:
        self.d = params.d

    def __call__(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return -(1.0 + np.asarray(t)[:, None]) * (x[:, : self.d] + x[:, -self.d :])


@pytest.fixture
def spiral_sets() -> tuple[np.ndarray, np.ndarray]:
    data = generate_spiral(SpiralConfig(count=60, seed=4))
    return data[:30], data[30:]


class TestAttackMetric:
    """Tests for attack_metric and attack_metrics."""

    def test_first_order_zero_score(self) -> None:
        """n=1 with s = 0 gives xi ||x||_p."""
        params = HoldParams(n=1, d=2, xi=2.0)
        state = State.from_flat([3.0, -4.0], 1)
        zero = ConstantScore(np.zeros(2))
        assert attack_metric(params, zero, state, 0.3) == pytest.approx(10.0)
        assert attack_metric(params, zero, state, 0.3, p=1.0) == pytest.approx(14.0)

    def test_origin_constant_score(self) -> None:
        """At x = 0 the residual is xi L^{-1} ||c||_p."""
        params = HoldParams(n=2, d=2, gammas=(1.0,), xi=3.0, inv_mass=0.5)
        net = ConstantScore(np.array([0.6, 0.8]))
        value = attack_metric(params, net, State(np.zeros((2, 2))), 0.1)
        assert value == pytest.approx(1.5)

    def test_matches_dense_oracle(self) -> None:
        """n=2, d=1, x=(1, 0.5), s=0.2 gives sqrt(6.01)."""
        params = HoldParams(n=2, d=1, gammas=(1.0,), xi=2.0)
        x = np.array([1.0, 0.5])
        f = np.array([[0.0, 1.0], [-1.0, -2.0]])
        dense = f @ x - 2.0 * np.array([0.0, 0.2])
        net = ConstantScore(np.array([0.2]))
        value = attack_metric(params, net, State.from_flat(x, 2), 0.5)
        assert value == pytest.approx(math.sqrt(6.01), rel=1e-14)
        assert value == pytest.approx(float(np.linalg.norm(dense)), rel=1e-14)

    def test_infinity_norm(self) -> None:
        """p = inf takes the largest residual coordinate."""
        params = HoldParams(n=1, d=3, xi=1.0)
        x = np.array([[1.0, -5.0, 2.0]])
        values = attack_metrics(params, ConstantScore(np.zeros(3)), x, 0.0, math.inf)
        assert values[0] == pytest.approx(5.0)

    def test_non_finite_state(self, cld_params: HoldParams) -> None:
        """NaN states raise NumericalError."""
        x = np.full((1, 4), np.nan)
        with pytest.raises(NumericalError):
            attack_metrics(cld_params, ConstantScore(np.zeros(2)), x, 0.1)


class TestForwardEstimate:
    """Tests for deterministic_forward_estimate."""

    def test_zero_score_gives_mean(self, cld_params: HoldParams) -> None:
        """With s(x_0, 0) = 0 the estimate is exp(F t) x_0."""
        q0 = np.array([0.3, -0.2])
        zero = ConstantScore(np.zeros(2))
        estimate = deterministic_forward_estimate(cld_params, zero, q0)
        mean = forward_moments(cld_params, State.from_data(q0, 2), 0.7).mean
        np.testing.assert_allclose(estimate(0.7).flat, mean.flat, atol=1e-15)

    def test_time_zero(self, cld_params: HoldParams) -> None:
        """At t=0 block n holds -s(x_0, 0) beta L^{-1}."""
        score = np.array([0.5, -1.0])
        q0 = np.array([1.0, 2.0])
        estimate = deterministic_forward_estimate(cld_params, ConstantScore(score), q0)
        state = estimate(0.0)
        np.testing.assert_allclose(state.q, q0)
        expected = -score * cld_params.aux_variance
        np.testing.assert_allclose(state.blocks[-1], expected, rtol=1e-12)

    def test_first_order_time_zero(self) -> None:
        """For n=1 the only pivot is sqrt(eps_num)."""
        params = HoldParams(n=1, d=1, xi=1.0, eps_num=0.04)
        net = ConstantScore(np.array([2.0]))
        state = deterministic_forward_estimate(params, net, [1.0])(0.0)
        assert state.flat[0] == pytest.approx(1.0 - 2.0 * 0.04)

    def test_matches_dense_recomputation(self, rng: np.random.Generator) -> None:
        """A second-order instance agrees with dense nd x nd algebra."""
        params = HoldParams(
            n=2, d=2, gammas=(1.7,), xi=2.3, beta=4.0, inv_mass=0.8, eps_num=1e-2
        )
        net = LinearScore(params)
        q0 = rng.standard_normal(2)
        x0 = np.concatenate([q0, np.zeros(2)])
        s0 = net(x0[None, :], np.zeros(1))[0]
        eps = np.concatenate([np.zeros(2), -s0 * math.sqrt(params.aux_variance)])
        t = 0.45
        f = np.kron(np.array([[0.0, 1.7], [-1.7, -2.3]]), np.eye(2))
        e = scipy.linalg.expm(f * t)
        s0_dense = np.kron(initial_cov(params).entries, np.eye(2))
        cov = 0.8 * np.eye(4) + e @ (s0_dense - 0.8 * np.eye(4)) @ e.T
        expected = e @ x0 + np.linalg.cholesky(cov) @ eps
        estimate = deterministic_forward_estimate(params, net, q0)
        np.testing.assert_allclose(estimate(t).flat, expected, rtol=1e-10)

    def test_wrong_dimension(self, cld_params: HoldParams) -> None:
        """q0 must have d entries."""
        with pytest.raises(ValueError):
            deterministic_forward_estimate(
                cld_params, ConstantScore(np.zeros(2)), [1.0, 2.0, 3.0]
            )


class TestRunPia:
    """Tests for run_pia, residual_matrix and per_time_auroc."""

    def test_attack_times(self) -> None:
        """The grid starts at 0 and stops one step short of T."""
        params = HoldParams(n=1, d=1, xi=1.0, horizon=2.0)
        np.testing.assert_allclose(attack_times(params, 4), [0.0, 0.5, 1.0, 1.5])
        with pytest.raises(ValueError):
            attack_times(params, 0)

    def test_residual_matrix_matches_forward_estimate(
        self, cld_params: HoldParams, spiral_sets
    ) -> None:
        """Each column equals the metric at the reconstructed state."""
        members, _ = spiral_sets
        net = LinearScore(cld_params)
        cfg = AttackConfig(n_time=3)
        r = residual_matrix(cld_params, net, members[:4], cfg)
        times = attack_times(cld_params, 3)
        for i in range(4):
            estimate = deterministic_forward_estimate(cld_params, net, members[i])
            expected = [attack_metric(cld_params, net, estimate(t), t) for t in times]
            np.testing.assert_allclose(r[i], expected, rtol=1e-10)

    def test_report_shape_and_invariants(
        self, cld_params: HoldParams, spiral_sets
    ) -> None:
        """R has one row per point, R-bar is its row mean and the ROC is monotone."""
        members, holdouts = spiral_sets
        net = LinearScore(cld_params)
        report = run_pia(cld_params, net, members, holdouts, AttackConfig(n_time=5))
        assert report.r.shape == (60, 5)
        assert report.labels.sum() == 30
        np.testing.assert_allclose(report.statistic, report.r.mean(axis=1))
        assert np.all(np.diff(report.roc.fpr) >= 0)
        assert np.all(np.diff(report.roc.tpr) >= 0)
        assert 0.0 <= report.auroc <= 1.0
        assert report.roc.area == pytest.approx(report.auroc, abs=1e-12)

    def test_identical_sets_give_half(
        self, cld_params: HoldParams, spiral_sets
    ) -> None:
        """The same points on both sides tie everywhere."""
        members, _ = spiral_sets
        net = LinearScore(cld_params)
        report = run_pia(cld_params, net, members, members, AttackConfig())
        assert report.auroc == 0.5

    def test_single_time_statistic(self, cld_params: HoldParams, spiral_sets) -> None:
        """use_mean=False thresholds the chosen column."""
        members, holdouts = spiral_sets
        net = LinearScore(cld_params)
        cfg = AttackConfig(n_time=4, use_mean=False, time_index=2)
        report = run_pia(cld_params, net, members, holdouts, cfg)
        np.testing.assert_array_equal(report.statistic, report.r[:, 1])
        assert report.auroc == per_time_auroc(report, 2)
        with pytest.raises(ValueError):
            bad = AttackConfig(n_time=4, use_mean=False, time_index=5)
            run_pia(cld_params, net, members, holdouts, bad)

    def test_per_time_auroc(self, cld_params: HoldParams, spiral_sets) -> None:
        """Columns match pair counting; constant or replicated columns are exact."""
        members, holdouts = spiral_sets
        net = LinearScore(cld_params)
        report = run_pia(cld_params, net, members, holdouts, AttackConfig(n_time=3))
        constant = dataclasses.replace(report, r=np.ones_like(report.r))
        assert per_time_auroc(constant, 1) == 0.5
        repeated = np.repeat(report.r_mean[:, None], 3, axis=1)
        replicated = dataclasses.replace(report, r=repeated)
        assert per_time_auroc(replicated, 3) == pytest.approx(report.auroc, abs=1e-12)
        for k in range(1, 4):
            column = report.r[:, k - 1]
            oracle = brute_force_auroc(column[report.labels], column[~report.labels])
            assert per_time_auroc(report, k) == pytest.approx(oracle, abs=1e-12)
        with pytest.raises(IndexError):
            per_time_auroc(report, 4)
        with pytest.raises(IndexError):
            per_time_auroc(report, 0)

    def test_stochastic_eps(self, spiral_sets) -> None:
        """Random auxiliary noise changes R for n > 1 and is reproducible by seed."""
        params = HoldParams.critically_damped(3, 2, 2.0, beta=2.0)
        members, holdouts = spiral_sets
        net = LinearScore(params)
        zero = run_pia(params, net, members, holdouts, AttackConfig(n_time=3))
        cfg = AttackConfig(n_time=3, stochastic_eps=True, seed=7)
        first = run_pia(params, net, members, holdouts, cfg)
        second = run_pia(params, net, members, holdouts, cfg)
        np.testing.assert_array_equal(first.r, second.r)
        assert not np.allclose(first.r, zero.r)

    def test_serialization(self, cld_params: HoldParams, spiral_sets) -> None:
        """to_dict carries residuals and ROC; roc_frame has a row per ROC point."""
        members, holdouts = spiral_sets
        net = LinearScore(cld_params)
        report = run_pia(cld_params, net, members, holdouts, AttackConfig(n_time=2))
        body = report.to_dict()
        assert set(body) >= {
            "r",
            "r_mean",
            "labels",
            "roc",
            "auroc",
            "auroc_ci",
            "per_time_auroc",
            "times",
        }
        assert len(body["per_time_auroc"]) == 2
        frame = report.roc_frame()
        assert list(frame.columns) == ["threshold", "fpr", "tpr"]
        assert len(frame) == len(report.roc.fpr)

    def test_dimension_mismatch(self, cld_params: HoldParams) -> None:
        """Datasets must have dimension d."""
        with pytest.raises(DatasetError):
            run_pia(
                cld_params,
                LinearScore(cld_params),
                np.zeros((3, 2)),
                np.zeros((3, 3)),
                AttackConfig(),
            )

    def test_empty_dataset(self, cld_params: HoldParams) -> None:
        """Empty sets are rejected."""
        with pytest.raises(DatasetError):
            run_pia(
                cld_params,
                LinearScore(cld_params),
                np.zeros((0, 2)),
                np.zeros((3, 2)),
                AttackConfig(),
            )

    def test_untrained_network_is_calibrated(self) -> None:
        """With i.i.d. members and holdouts an untrained network stays near chance."""
        params = HoldParams.critically_damped(2, 2, 5.0, beta=2.0)
        inside = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            net = init_network(2, 2, 3, 32, params.horizon, rng)
            data = generate_spiral(SpiralConfig(count=1000, seed=seed))
            report = run_pia(params, net, data[:500], data[500:], AttackConfig())
            inside += 0.4 <= report.auroc <= 0.6
        assert inside >= 19
