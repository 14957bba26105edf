from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest

from onebit_fusion import (
    GaussianSensorModel,
    Hypothesis,
    SensorProfile,
    ValidationError,
    design_fast,
    fast_trajectory,
    model_from_snr,
    model_profile,
    monte_carlo,
    oracle_run,
    simulate_run,
    snr_db,
    trial_stream,
)
from onebit_fusion.sim import build_stage_plan

ALPHA = 0.39


def mp_upper_tail(x: float) -> float:
    """Independent high-precision normal tail for cross-checking."""
    with mp.workdps(40):
        return float(mp.ncdf(-mp.mpf(x)))


class TestGaussianModel:
    def test_reference_profile_minus4db(self):
        m = GaussianSensorModel(A=2.0, sigma2=5.0, y_star=1.0)
        s = model_profile(m)
        assert round(s.p, 2) == 0.67 and round(s.q, 2) == 0.33
        sigma = math.sqrt(5.0)
        assert s.p == pytest.approx(mp_upper_tail((1.0 - 2.0) / sigma), abs=1e-12)
        assert s.q == pytest.approx(mp_upper_tail(1.0 / sigma), abs=1e-12)

    def test_reference_profile_minus8db(self):
        m = model_from_snr(2.0, -8.0, 1.0)
        assert m.sigma2 == pytest.approx(12.619146889603865, rel=1e-12)
        s = model_profile(m)
        assert round(s.p, 2) == 0.61 and round(s.q, 2) == 0.39

    def test_symmetric_threshold(self):
        m = GaussianSensorModel(A=2.0, sigma2=3.7, y_star=1.0)
        s = model_profile(m)
        assert s.q == pytest.approx(1.0 - s.p, abs=1e-12)

    def test_snr_values(self):
        assert snr_db(GaussianSensorModel(2.0, 5.0, 1.0)) == pytest.approx(
            -3.979400086720376, rel=1e-12
        )
        assert snr_db(GaussianSensorModel(3.0, 3.0, 0.0)) == 0.0
        with pytest.raises(ValidationError):
            snr_db(GaussianSensorModel(-2.0, 5.0, 1.0))

    def test_snr_round_trip(self):
        for target in (-10.0, -8.0, -4.0, 0.0, 8.0):
            m = model_from_snr(2.0, target, 1.0)
            assert snr_db(m) == pytest.approx(target, abs=1e-12)
        assert model_from_snr(2.0, -4.0, 1.0).sigma2 == pytest.approx(5.024, abs=1e-3)
        assert model_from_snr(2.0, 0.0, 1.0).sigma2 == pytest.approx(2.0, rel=1e-12)

    def test_profile_monotonicity(self):
        base = GaussianSensorModel(A=2.0, sigma2=5.0, y_star=1.0)
        stronger = GaussianSensorModel(A=2.5, sigma2=5.0, y_star=1.0)
        higher_bar = GaussianSensorModel(A=2.0, sigma2=5.0, y_star=1.5)
        assert model_profile(stronger).p > model_profile(base).p
        assert model_profile(higher_bar).p < model_profile(base).p
        assert model_profile(stronger).q == model_profile(base).q

    def test_validation(self):
        with pytest.raises(ValidationError):
            GaussianSensorModel(A=2.0, sigma2=0.0, y_star=1.0)
        with pytest.raises(ValidationError):
            GaussianSensorModel(A=float("nan"), sigma2=1.0, y_star=0.0)


class TestSimulateRun:
    @pytest.fixture
    def fleet(self):
        return (SensorProfile(0.61, 0.39),) * 4

    def test_fixed_seed_reproduces_bits(self, fleet):
        a = simulate_run(fleet, "fast", Hypothesis.H1, 64, 99, alpha=ALPHA, trial=3)
        b = simulate_run(fleet, "fast", Hypothesis.H1, 64, 99, alpha=ALPHA, trial=3)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ_across_trials_and_hypotheses(self, fleet):
        a = simulate_run(fleet, "fast", Hypothesis.H1, 64, 99, alpha=ALPHA, trial=0)
        b = simulate_run(fleet, "fast", Hypothesis.H1, 64, 99, alpha=ALPHA, trial=1)
        c = simulate_run(fleet, "fast", Hypothesis.H0, 64, 99, alpha=ALPHA, trial=0)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_near_certain_sensors_always_declare(self):
        strong = (SensorProfile(1.0 - 1e-12, 0.3),) * 2
        bits = simulate_run(
            strong, "fast", Hypothesis.H1, 128, 5, alpha=0.3, initial_thr=1
        )
        assert bits.sum() == 128

    def test_oracle_and_fast_share_the_bit_stream(self, fleet):
        # Same (seed, hypothesis, trial) means the same sensor messages,
        # so the two algorithms see identical inputs.
        rng_a = trial_stream(7, Hypothesis.H1, 0)
        rng_b = trial_stream(7, Hypothesis.H1, 0)
        np.testing.assert_array_equal(rng_a.random(16), rng_b.random(16))

    def test_unknown_algorithm_rejected(self, fleet):
        with pytest.raises(ValidationError):
            simulate_run(fleet, "bogus", Hypothesis.H1, 8, 0, alpha=ALPHA)


class TestMonteCarlo:
    @pytest.fixture
    def fleet(self):
        return (SensorProfile(0.61, 0.39),) * 4

    def test_single_trial_equals_that_run(self, fleet):
        report = monte_carlo(fleet, "fast", 32, 1, 11, alpha=ALPHA)
        h1 = simulate_run(fleet, "fast", Hypothesis.H1, 32, 11, alpha=ALPHA, trial=0)
        h0 = simulate_run(fleet, "fast", Hypothesis.H0, 32, 11, alpha=ALPHA, trial=0)
        np.testing.assert_array_equal(report.p_hat, h1.astype(float))
        np.testing.assert_array_equal(report.q_hat, h0.astype(float))

    def test_batching_does_not_change_counts(self, fleet):
        a = monte_carlo(fleet, "oracle", 16, 37, 3, alpha=ALPHA, batch_size=5)
        b = monte_carlo(fleet, "oracle", 16, 37, 3, alpha=ALPHA, batch_size=64)
        np.testing.assert_array_equal(a.p_hat, b.p_hat)
        np.testing.assert_array_equal(a.q_hat, b.q_hat)

    def test_aggregation_equals_per_trial_runs(self, fleet):
        trials = 25
        report = monte_carlo(fleet, "fast", 20, trials, 123, alpha=ALPHA)
        plan = build_stage_plan(fleet, "fast", 20, ALPHA)
        total = np.zeros(20, dtype=np.int64)
        for t in range(trials):
            total += simulate_run(
                fleet, "fast", Hypothesis.H1, 20, 123, alpha=ALPHA, trial=t, plan=plan
            )
        np.testing.assert_allclose(report.p_hat, total / trials, atol=0)

    def test_fast_frequencies_match_analytic_trajectory(self, fleet):
        trials = 20_000
        report = monte_carlo(fleet, "fast", 50, trials, 7, alpha=ALPHA)
        traj = fast_trajectory(design_fast(fleet, ALPHA), 50, 0)
        bound_p = 3.0 * np.sqrt(traj.p0 * (1 - traj.p0) / trials)
        bound_q = 3.0 * np.sqrt(traj.q0 * (1 - traj.q0) / trials)
        assert np.mean(np.abs(report.p_hat - traj.p0) <= bound_p) >= 0.99
        assert np.mean(np.abs(report.q_hat - traj.q0) <= bound_q) >= 0.99

    def test_oracle_false_alarm_pinned_at_ceiling(self, fleet):
        trials = 20_000
        report = monte_carlo(fleet, "oracle", 50, trials, 7, alpha=ALPHA)
        traj = oracle_run(fleet, ALPHA, 50)
        bound_p = 3.0 * np.sqrt(traj.p0 * (1 - traj.p0) / trials)
        bound_q = 3.0 * np.sqrt(ALPHA * (1 - ALPHA) / trials)
        assert np.mean(np.abs(report.p_hat - traj.p0) <= bound_p) >= 0.99
        assert np.mean(np.abs(report.q_hat - ALPHA) <= bound_q) >= 0.99

    def test_memoryless_algorithm_supported(self, fleet):
        report = monte_carlo(fleet, "memoryless", 10, 4000, 21, alpha=ALPHA)
        # Stationary single-threshold rule: every stage shares one point.
        assert np.abs(report.q_hat - ALPHA).max() < 0.025

    def test_halfwidth_definition(self, fleet):
        report = monte_carlo(fleet, "fast", 8, 500, 2, alpha=ALPHA)
        expected = 3.0 * np.sqrt(report.p_hat * (1 - report.p_hat) / 500)
        np.testing.assert_allclose(report.halfwidth_p, expected, rtol=1e-12)

    def test_invalid_trials_rejected(self, fleet):
        with pytest.raises(ValidationError):
            monte_carlo(fleet, "fast", 8, 0, 2, alpha=ALPHA)
