from __future__ import annotations

import math

import numpy as np
import pytest

from onebit_fusion import (
    RandomizedThreshold,
    convergence_rate,
    SensorProfile,
    ValidationError,
    enumerate_outcomes,
    initial_memory,
    odds_ratio,
    operating_point,
    oracle_asymptote,
    oracle_decide,
    oracle_run,
    oracle_step,
    oracle_table,
    solve_threshold,
)

from conftest import random_productive_fleet
from reference import asymptote_formula

ALPHA = 0.39


class TestInitialMemory:
    def test_uninformative_pair(self):
        assert initial_memory() == (0.5, 0.5)
        assert odds_ratio(SensorProfile(*initial_memory())) == 1.0

    def test_stage_one_equals_memoryless(self, rng):
        for _ in range(6):
            n = int(rng.integers(1, 7))
            fleet = random_productive_fleet(rng, n)
            alpha = float(rng.uniform(0.05, 0.95))
            state = oracle_step(fleet, alpha)
            table = enumerate_outcomes(fleet)
            plain = operating_point(table, solve_threshold(table, alpha))
            assert state.point.p0 == pytest.approx(plain.p0, abs=1e-12)
            assert state.point.q0 == pytest.approx(plain.q0, abs=1e-12)


class TestOracleStep:
    def test_augmented_table_size(self, homogeneous_fleet):
        table = oracle_table(homogeneous_fleet, (0.7, ALPHA))
        # Homogeneous sensors collapse to n+1 values; the distinct memory
        # profile doubles them.
        assert len(table) == 2 * (len(homogeneous_fleet) + 1)
        table.validate()

    def test_informative_memory_improves_detection(self, homogeneous_fleet):
        blind = oracle_step(homogeneous_fleet, ALPHA)
        informed = oracle_step(homogeneous_fleet, ALPHA, mem=(0.9, ALPHA))
        assert informed.point.p0 > blind.point.p0

    def test_limit_is_a_fixed_point(self, homogeneous_fleet):
        p_inf = oracle_asymptote(homogeneous_fleet, ALPHA)
        state = oracle_step(homogeneous_fleet, ALPHA, mem=(p_inf, ALPHA))
        assert state.point.p0 == pytest.approx(p_inf, abs=1e-10)

    def test_constraint_active(self, homogeneous_fleet):
        state = oracle_step(homogeneous_fleet, ALPHA, mem=(0.8, ALPHA))
        assert state.point.q0 == pytest.approx(ALPHA, abs=1e-12)

    def test_memory_must_be_interior(self, homogeneous_fleet):
        with pytest.raises(ValidationError):
            oracle_step(homogeneous_fleet, ALPHA, mem=(1.0, 0.5))


class TestOracleRun:
    def test_first_stage_matches_single_step(self, homogeneous_fleet):
        traj = oracle_run(homogeneous_fleet, ALPHA, 1)
        state = oracle_step(homogeneous_fleet, ALPHA)
        assert traj.p0[0] == pytest.approx(state.point.p0, abs=1e-12)

    def test_converges_to_formula_value(self, homogeneous_fleet):
        traj = oracle_run(homogeneous_fleet, ALPHA, 500)
        expected = asymptote_formula(homogeneous_fleet, ALPHA)
        assert expected == pytest.approx(0.95816, abs=1e-4)
        assert traj.p0[-1] == pytest.approx(expected, abs=1e-6)

    def test_strictly_increasing_until_plateau(self, homogeneous_fleet):
        p_inf = oracle_asymptote(homogeneous_fleet, ALPHA)
        traj = oracle_run(homogeneous_fleet, ALPHA, 400)
        far = np.abs(traj.p0 - p_inf) > 1e-12
        diffs = np.diff(traj.p0)
        assert np.all(diffs[far[:-1]] > 0)
        assert np.all(diffs >= 0)

    def test_bounded_odds_ratio(self, homogeneous_fleet):
        prod_r = math.prod(odds_ratio(s) for s in homogeneous_fleet)
        traj = oracle_run(homogeneous_fleet, ALPHA, 400)
        r0 = traj.p0 / (1.0 - traj.p0) * (1.0 - traj.q0) / traj.q0
        assert np.all(r0 < prod_r)

    def test_constraint_active_every_stage(self, homogeneous_fleet):
        traj = oracle_run(homogeneous_fleet, ALPHA, 200)
        np.testing.assert_allclose(traj.q0, ALPHA, atol=1e-12)

    def test_thresholds_converge(self, homogeneous_fleet):
        traj = oracle_run(homogeneous_fleet, ALPHA, 510)
        assert np.abs(np.diff(traj.log_t[499:])).max() < 1e-9
        assert np.abs(np.diff(traj.lam[499:])).max() < 1e-9

    def test_stop_early_records_plateau(self, homogeneous_fleet):
        traj = oracle_run(homogeneous_fleet, ALPHA, 2000, stop_early=True)
        assert traj.converged_at is not None
        assert traj.converged_at < 2000
        assert len(traj) == traj.converged_at
        p_inf = oracle_asymptote(homogeneous_fleet, ALPHA)
        assert traj.p0[-1] == pytest.approx(p_inf, abs=1e-10)

    def test_random_fleets_reach_the_formula(self, rng):
        for _ in range(5):
            n = int(rng.integers(1, 6))
            fleet = random_productive_fleet(rng, n, margin=0.05)
            alpha = float(rng.uniform(0.2, 0.8))
            traj = oracle_run(fleet, alpha, 3000, stop_early=True)
            # Weak fleets contract slowly; bound the tail by the
            # geometric rate instead of a one-size tolerance.
            rate = convergence_rate(fleet, alpha).a
            bound = max(1e-8, 2.0 * rate**3000)
            assert abs(traj.p0[-1] - asymptote_formula(fleet, alpha)) < bound


class TestOracleAsymptote:
    def test_single_sensor_at_its_own_false_alarm(self):
        s = SensorProfile(0.67, 0.33)
        assert oracle_asymptote([s], s.q) == pytest.approx(s.p, abs=1e-12)

    def test_homogeneous_value(self, homogeneous_fleet):
        value = oracle_asymptote(homogeneous_fleet, ALPHA)
        assert value == pytest.approx(asymptote_formula(homogeneous_fleet, ALPHA), abs=1e-14)
        assert value == pytest.approx(0.9581609448, abs=1e-9)

    def test_blind_fleet_returns_alpha(self):
        blind = [SensorProfile(0.5, 0.5)] * 3
        assert oracle_asymptote(blind, 0.27) == pytest.approx(0.27, abs=1e-15)


class TestOracleDecide:
    def test_clear_cases(self, homogeneous_fleet):
        state = oracle_step(homogeneous_fleet, ALPHA)
        rng = np.random.default_rng(1)
        above = RandomizedThreshold(log_t=-50.0, lam=0.0)
        below = RandomizedThreshold(log_t=50.0, lam=1.0)
        bits = [1, 0, 1, 0]
        assert oracle_decide(homogeneous_fleet, state.mem, above, bits, 0, rng) == 1
        assert oracle_decide(homogeneous_fleet, state.mem, below, bits, 0, rng) == 0

    def test_tie_randomization_frequency(self, homogeneous_fleet):
        # All-ones statistic computed exactly as the decide path does, so
        # the comparison lands inside the tie window with certainty.
        stat = 0.0
        for s in homogeneous_fleet:
            stat += math.log(s.p / s.q)
        thr = RandomizedThreshold(log_t=stat, lam=0.25)
        rng = np.random.default_rng(42)
        draws = 1_000_000
        hits = sum(
            oracle_decide(homogeneous_fleet, (0.5, 0.5), thr, (1, 1, 1, 1), 0, rng)
            for _ in range(draws)
        )
        assert hits / draws == pytest.approx(0.25, abs=0.002)

    def test_memory_bit_shifts_statistic(self, homogeneous_fleet):
        mem = (0.9, ALPHA)
        w1 = math.log(mem[0] / mem[1])
        stat = sum(math.log(s.p / s.q) for s in homogeneous_fleet)
        thr = RandomizedThreshold(log_t=stat + w1 / 2.0, lam=0.0)
        rng = np.random.default_rng(3)
        assert oracle_decide(homogeneous_fleet, mem, thr, (1, 1, 1, 1), 1, rng) == 1
        assert oracle_decide(homogeneous_fleet, mem, thr, (1, 1, 1, 1), 0, rng) == 0

    def test_length_mismatch_rejected(self, homogeneous_fleet):
        rng = np.random.default_rng(0)
        thr = RandomizedThreshold(log_t=0.0, lam=0.5)
        with pytest.raises(ValidationError):
            oracle_decide(homogeneous_fleet, (0.5, 0.5), thr, (1, 1), 0, rng)
