#!/usr/bin/env python3
"""
Tests for rollouts, cost evaluation, the W2 oracle, moments and export
"""

import csv
import json
import math

import numpy as np
import pytest

from wdrc import SCHEMA
from wdrc.errors import SimulationError
from wdrc.model import DisturbanceModel, SystemModel, normalize_samples
from wdrc.simulate import (
    DisturbanceSource,
    box_stats,
    control_energy,
    coupling_gap,
    evaluate_cost,
    expected_cost,
    identity_coupling_penalty,
    moment_propagation,
    rollout,
    run_trials,
    w2_assignment,
    w2_discrete,
    write_box_stats_csv,
    write_json,
    write_trajectory_csv,
)
from wdrc.solvers import build_pencil, solve_finite, solve_steady, stage_policies, steady_policy, value

from tests.conftest import feasible_lambda, random_samples, random_system

# (1 + W P)^{-1} A at the scalar ARE root, about 0.420204
CLOSED_LOOP_SCALAR = 1.0 / (1.0 + 0.8 * (0.8 + math.sqrt(3.84)) / 1.6)


def _scalar_steady(scalar, data):
    P = solve_steady(scalar, data, 5.0).P_ss
    return steady_policy(P, scalar, 5.0, data)


class TestRollout:
    """Tests for single closed-loop rollouts"""

    def test_halving(self):
        """Test A = 0.5 I with no input or disturbance halves the state each step"""
        model = SystemModel(A=0.5 * np.eye(2), B=np.zeros((2, 1)), Xi=np.eye(2),
                            Q=np.eye(2), R=[[1.0]], Qf=np.eye(2))
        source = DisturbanceSource.external(np.zeros((4, 2)))
        traj = rollout(model, np.zeros((1, 2)), source, [1.0, -2.0], 4, seed=0)

        for t in range(5):
            assert np.allclose(traj.states[t], 0.5 ** t * np.array([1.0, -2.0]))
        assert traj.steps == 4

    def test_zero_samples_deterministic(self, scalar):
        """Test zero samples under the worst case give x_t = 0.420204^t x_0"""
        data = DisturbanceModel.zeros(1, N=3)
        K, policy = _scalar_steady(scalar, data)
        traj = rollout(scalar, K, DisturbanceSource.worst_case(policy, data), [1.0], 10, seed=4)

        for t in range(11):
            assert traj.states[t, 0] == pytest.approx(CLOSED_LOOP_SCALAR ** t, rel=1e-9)

    def test_empirical_draws_raw_samples(self, scalar):
        """Test empirical draws come from the raw (unshifted) samples"""
        data = normalize_samples([[1.0], [3.0]])
        traj = rollout(scalar, np.zeros((1, 1)), DisturbanceSource.empirical(data), [0.0], 50, seed=1)

        assert set(np.unique(traj.disturbances[:, 0])) <= {1.0, 3.0}

    def test_worst_case_keeps_sample_mean(self, scalar):
        """Test worst-case draws are support points plus the sample mean"""
        data = normalize_samples([[9.0], [11.0]])
        K, policy = _scalar_steady(scalar, data)
        traj = rollout(scalar, K, DisturbanceSource.worst_case(policy, data), [1.0], 30, seed=6)

        for t in range(30):
            support = policy.support(traj.states[t])[:, 0] + 10.0
            assert np.min(np.abs(support - traj.disturbances[t, 0])) <= 1e-12 * (1.0 + np.abs(support).max())

    def test_sources_share_disturbance_mean(self, scalar):
        """Test empirical and worst-case offsets b_i + mean_shift both average to the sample mean"""
        data = normalize_samples([[9.0], [11.0]])
        K, policy = _scalar_steady(scalar, data)
        worst = run_trials(scalar, K, DisturbanceSource.worst_case(policy, data), [1.0], 50, trials=200, seed=3)
        empirical = run_trials(scalar, K, DisturbanceSource.empirical(data), [1.0], 50, trials=200, seed=3)

        offsets = worst.disturbances[:, :, 0] - policy.S[0, 0] * worst.states[:, :-1, 0]
        assert offsets.mean() == pytest.approx(10.0, abs=0.1)
        assert empirical.disturbances.mean() == pytest.approx(10.0, abs=0.1)

    def test_per_stage_gains(self, scalar):
        """Test a gain sequence is applied stage by stage"""
        solution = solve_finite(scalar, None, 5.0, 6)
        data = DisturbanceModel.zeros(1)
        source = DisturbanceSource.worst_case(stage_policies(solution, scalar, data), data)
        traj = rollout(scalar, solution.K, source, [1.0], 6, seed=0)

        for t in range(6):
            assert traj.inputs[t, 0] == pytest.approx(solution.K[t][0, 0] * traj.states[t, 0])

    def test_same_seed_same_trajectory(self, rng):
        """Test reruns with the same seed and trial are identical"""
        model = random_system(rng)
        data = random_samples(rng, model.k)
        K = np.zeros((model.m, model.n))
        source = DisturbanceSource.empirical(data)
        first = rollout(model, K, source, np.ones(model.n), 20, seed=11, trial=3)
        second = rollout(model, K, source, np.ones(model.n), 20, seed=11, trial=3)
        other = rollout(model, K, source, np.ones(model.n), 20, seed=11, trial=4)

        assert np.array_equal(first.states, second.states)
        assert not np.array_equal(first.states, other.states)

    def test_dimension_mismatch(self, scalar):
        """Test a wrong-length initial state is rejected"""
        source = DisturbanceSource.external(np.zeros((3, 1)))

        with pytest.raises(SimulationError, match="dimension mismatch"):
            rollout(scalar, np.zeros((1, 1)), source, [1.0, 2.0], 3, seed=0)

    def test_wrong_gain_shape(self, scalar):
        """Test a gain of the wrong shape is rejected"""
        source = DisturbanceSource.external(np.zeros((3, 1)))

        with pytest.raises(SimulationError, match="dimension mismatch"):
            rollout(scalar, np.zeros((2, 1)), source, [1.0], 3, seed=0)

    def test_short_external_stream(self, scalar):
        """Test running past the end of an external stream raises"""
        source = DisturbanceSource.external(np.zeros((2, 1)))

        with pytest.raises(SimulationError):
            rollout(scalar, np.zeros((1, 1)), source, [1.0], 3, seed=0)

    def test_short_gain_sequence(self, scalar):
        """Test fewer gains than steps is rejected"""
        source = DisturbanceSource.external(np.zeros((3, 1)))

        with pytest.raises(SimulationError):
            rollout(scalar, [np.zeros((1, 1))], source, [1.0], 3, seed=0)


class TestRunTrials:
    """Tests for batches of trials"""

    def test_trial_order(self, scalar):
        """Test batch entry i equals rollout trial i"""
        data = normalize_samples([[-1.0], [0.5], [0.5]])
        source = DisturbanceSource.empirical(data)
        batch = run_trials(scalar, np.array([[-0.5]]), source, [1.0], 8, trials=5, seed=9)

        assert batch.trials == 5
        for i in range(5):
            single = rollout(scalar, np.array([[-0.5]]), source, [1.0], 8, seed=9, trial=i)
            assert np.array_equal(batch.states[i], single.states)

    def test_parallel_matches_sequential(self, rng):
        """Test jobs = 2 reproduces jobs = 1 exactly"""
        model = random_system(rng)
        data = random_samples(rng, model.k)
        lam = feasible_lambda(model)
        K, policy = steady_policy(solve_steady(model, data, lam).P_ss, model, lam, data)
        source = DisturbanceSource.worst_case(policy, data)

        sequential = run_trials(model, K, source, np.ones(model.n), 15, trials=12, seed=5, jobs=1)
        parallel = run_trials(model, K, source, np.ones(model.n), 15, trials=12, seed=5, jobs=2)

        assert np.array_equal(sequential.states, parallel.states)
        assert np.array_equal(sequential.disturbances, parallel.disturbances)

    def test_no_trials(self, scalar):
        """Test zero trials is an error"""
        with pytest.raises(SimulationError):
            run_trials(scalar, np.zeros((1, 1)), DisturbanceSource.empirical(DisturbanceModel.zeros(1)),
                       [1.0], 3, trials=0, seed=0)


class TestEvaluateCost:
    """Tests for realized trajectory costs"""

    def test_all_zero(self, scalar):
        """Test x0 = 0 with zero samples costs nothing"""
        data = DisturbanceModel.zeros(1, N=2)
        K, policy = _scalar_steady(scalar, data)
        source = DisturbanceSource.worst_case(policy, data)
        traj = rollout(scalar, K, source, [0.0], 5, seed=0)
        report = evaluate_cost(traj, scalar, 5.0, source)

        assert report.state_input_cost == 0.0
        assert report.penalty_term == 0.0
        assert report.total == 0.0

    def test_empirical_has_no_penalty(self, scalar):
        """Test the penalty term vanishes for empirical disturbances"""
        data = normalize_samples([[-1.0], [1.0]])
        source = DisturbanceSource.empirical(data)
        traj = rollout(scalar, np.array([[-0.5]]), source, [1.0], 5, seed=0)
        report = evaluate_cost(traj, scalar, 5.0, source)

        assert report.penalty_term == 0.0
        assert report.total == report.state_input_cost

    def test_single_step_penalty(self, scalar):
        """Test one step from x0 = 1 with one zero sample costs S^2 in transport"""
        data = DisturbanceModel.zeros(1)
        K, policy = _scalar_steady(scalar, data)
        source = DisturbanceSource.worst_case(policy, data)
        traj = rollout(scalar, K, source, [1.0], 1, seed=0)
        report = evaluate_cost(traj, scalar, 5.0, source)

        S = policy.S[0, 0]
        assert report.penalty_term == pytest.approx(S ** 2, rel=1e-12)
        assert report.total == pytest.approx(report.state_input_cost - 5.0 * S ** 2, rel=1e-12)

    def test_terminal_weight(self):
        """Test the terminal term is included only when requested"""
        model = SystemModel(A=[[1.0]], B=[[0.0]], Xi=[[1.0]], Q=[[1.0]], R=[[1.0]], Qf=[[3.0]])
        source = DisturbanceSource.external(np.zeros((2, 1)))
        traj = rollout(model, np.zeros((1, 1)), source, [1.0], 2, seed=0)

        assert evaluate_cost(traj, model, 1.0, source).state_input_cost == pytest.approx(5.0)
        assert evaluate_cost(traj, model, 1.0, source, terminal=False).state_input_cost == pytest.approx(2.0)

    def test_control_energy(self, scalar):
        """Test energy is the mean squared input"""
        source = DisturbanceSource.external(np.zeros((2, 1)))
        traj = rollout(scalar, np.array([[-1.0]]), source, [2.0], 2, seed=0)

        # u_0 = -2, x_1 = 0, u_1 = 0
        assert control_energy(traj) == pytest.approx(2.0)


class TestWasserstein:
    """Tests for the discrete W2 oracle"""

    def test_identical(self):
        """Test identical supports are at distance 0"""
        assert w2_discrete([0.0, 1.0], [0.0, 1.0]) == 0.0

    def test_permuted(self):
        """Test reordering the support does not matter"""
        assert w2_discrete([0.0, 1.0], [1.0, 0.0]) == 0.0

    def test_unit_shift(self):
        """Test {0, 0} to {1, 1} and {0, 2} to {1, 3} are at distance 1"""
        assert w2_discrete([0.0, 0.0], [1.0, 1.0]) == pytest.approx(1.0)
        assert w2_discrete([0.0, 2.0], [1.0, 3.0]) == pytest.approx(1.0)

    def test_vectors(self):
        """Test 2-D points use the Euclidean cost"""
        assert w2_discrete([[0.0, 0.0]], [[3.0, 4.0]]) == pytest.approx(5.0)

    def test_too_many_points(self):
        """Test the exhaustive oracle refuses N = 9"""
        with pytest.raises(SimulationError):
            w2_discrete(np.zeros(9), np.ones(9))

    def test_size_mismatch(self):
        """Test supports of different sizes are rejected"""
        with pytest.raises(SimulationError):
            w2_discrete([0.0, 1.0], [0.0])

    def test_assignment_agrees(self, rng):
        """Test the Hungarian cross-check matches the exhaustive search"""
        for _ in range(30):
            N = int(rng.integers(1, 7))
            mu, nu = rng.normal(size=(N, 2)), rng.normal(size=(N, 2))
            assert w2_assignment(mu, nu) == pytest.approx(w2_discrete(mu, nu), rel=1e-12, abs=1e-12)

    def test_identity_coupling_optimal(self, rng):
        """Test pairing S x + b_i with w_i attains W2^2 on random draws"""
        draws = 0
        for _ in range(10):
            model = random_system(rng)
            data = random_samples(rng, model.k, N=int(rng.integers(2, 7)))
            lam = feasible_lambda(model)
            _, policy = steady_policy(solve_steady(model, data, lam).P_ss, model, lam, data)
            for _ in range(12):
                x = rng.normal(size=model.n)
                penalty = identity_coupling_penalty(policy, data.samples, x)
                assert coupling_gap(policy, data.samples, x) <= 1e-10 * (1.0 + penalty)
                draws += 1

        assert draws >= 100


class TestMoments:
    """Tests for exact moment propagation"""

    def test_zero_samples(self, scalar):
        """Test zero samples give x x^T as the second moment"""
        data = DisturbanceModel.zeros(1)
        K, policy = _scalar_steady(scalar, data)
        means, second = moment_propagation(scalar, K, policy, [1.0], 5)

        for t in range(6):
            assert means[t, 0] == pytest.approx(CLOSED_LOOP_SCALAR ** t, rel=1e-9)
            assert second[t, 0, 0] == pytest.approx(means[t, 0] ** 2, rel=1e-12)

    def test_mean_follows_pencil(self, rng):
        """Test F [m_t; P m_t] = G [m_{t+1}; P m_{t+1}] for the worst-case mean"""
        model = random_system(rng)
        data = random_samples(rng, model.k)
        lam = feasible_lambda(model)
        P = solve_steady(model, data, lam).P_ss
        K, policy = steady_policy(P, model, lam, data)
        means, _ = moment_propagation(model, K, policy, np.ones(model.n), 10)
        pencil = build_pencil(model, lam)

        for t in range(10):
            left = pencil.F @ np.concatenate([means[t], P @ means[t]])
            right = pencil.G @ np.concatenate([means[t + 1], P @ means[t + 1]])
            assert np.linalg.norm(left - right) <= 1e-8 * (1.0 + np.linalg.norm(left))

    def test_mean_shift_feedforward(self, scalar):
        """Test the sample mean enters the mean recursion as Xi mean_shift"""
        data = normalize_samples([[9.0], [11.0]])
        K, policy = _scalar_steady(scalar, data)
        centered, _ = moment_propagation(scalar, K, policy, [1.0], 8)
        shifted, _ = moment_propagation(scalar, K, policy, [1.0], 8, mean_shift=data.mean_shift)
        M = CLOSED_LOOP_SCALAR

        for t in range(8):
            assert centered[t + 1, 0] == pytest.approx(M * centered[t, 0], rel=1e-9, abs=1e-12)
            assert shifted[t + 1, 0] == pytest.approx(M * shifted[t, 0] + 10.0, rel=1e-9)

    def test_shifted_moments_match_monte_carlo(self, scalar):
        """Test non-zero-mean worst-case rollouts follow the shifted moments"""
        data = normalize_samples([[9.0], [11.0]])
        K, policy = _scalar_steady(scalar, data)
        batch = run_trials(scalar, K, DisturbanceSource.worst_case(policy, data), [1.0], 12,
                           trials=400, seed=17)
        means, second = moment_propagation(scalar, K, policy, [1.0], 12, mean_shift=data.mean_shift)

        for t in (1, 5, 12):
            sample = batch.states[:, t, 0]
            stderr = np.sqrt(second[t, 0, 0] - means[t, 0] ** 2) / np.sqrt(batch.trials)
            assert abs(sample.mean() - means[t, 0]) <= 4.0 * stderr + 1e-12

    def test_expected_cost_equals_value(self, rng):
        """Test the exact expected cost under the saddle equals x0^T P_0 x0 + z_0"""
        for _ in range(5):
            model = random_system(rng)
            data = random_samples(rng, model.k, N=5)
            lam = feasible_lambda(model)
            T = 12
            solution = solve_finite(model, data, lam, T)
            policies = stage_policies(solution, model, data)
            x0 = rng.normal(size=model.n)

            exact = expected_cost(model, solution.K, policies, data, x0, lam, T)
            target = value(solution, x0, 0)
            assert exact == pytest.approx(target, rel=1e-6)

    def test_monte_carlo_agrees(self, scalar):
        """Test the sample mean of realized costs is within 4 standard errors"""
        data = normalize_samples([[-0.31], [0.12], [0.45], [-0.08], [-0.18]])
        solution = solve_finite(scalar, data, 5.0, 6)
        policies = stage_policies(solution, scalar, data)
        source = DisturbanceSource.worst_case(policies, data)
        batch = run_trials(scalar, solution.K, source, [1.0], 6, trials=400, seed=2024)

        totals = np.array([evaluate_cost(batch.trajectory(i), scalar, 5.0, source).total
                           for i in range(batch.trials)])
        exact = expected_cost(scalar, solution.K, policies, data, [1.0], 5.0, 6)
        stderr = totals.std(ddof=1) / np.sqrt(batch.trials)

        assert abs(totals.mean() - exact) <= 4.0 * stderr + 1e-12


class TestExport:
    """Tests for box statistics and file output"""

    def test_box_stats(self):
        """Test quartiles and mean per time index"""
        stats = box_stats([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])

        assert np.allclose(stats.min, [1.0, 2.0])
        assert np.allclose(stats.q1, [2.0, 3.0])
        assert np.allclose(stats.median, [3.0, 4.0])
        assert np.allclose(stats.q3, [4.0, 5.0])
        assert np.allclose(stats.max, [5.0, 6.0])
        assert np.allclose(stats.mean, [3.0, 4.0])
        assert np.allclose(stats.iqr, [2.0, 2.0])

    def test_json_schema(self, tmp_path):
        """Test JSON documents carry the schema tag and numpy values"""
        path = write_json({'P': np.eye(2), 'rho': np.float64(0.5)}, tmp_path / "out.json")
        document = json.loads(path.read_text())

        assert document['schema'] == SCHEMA
        assert document['P'] == [[1.0, 0.0], [0.0, 1.0]]
        assert document['rho'] == 0.5

    def test_trajectory_csv(self, tmp_path, scalar):
        """Test one row per time step with an input-free final row"""
        source = DisturbanceSource.external(np.full((3, 1), 0.25))
        traj = rollout(scalar, np.array([[-0.5]]), source, [1.0], 3, seed=0)
        path = write_trajectory_csv(traj, tmp_path / "traj.csv")

        with open(path) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ['t', 'x_1', 'u_1', 'w_1']
        assert len(rows) == 5
        assert float(rows[1][3]) == 0.25
        assert rows[-1][2] == 'nan'

    def test_box_stats_csv(self, tmp_path):
        """Test each series contributes one row per time index"""
        stats = {'minimax': box_stats(np.ones((4, 3))), 'lqg': box_stats(np.zeros((4, 3)))}
        path = write_box_stats_csv(stats, tmp_path / "box.csv")

        with open(path) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ['series', 't', 'min', 'q1', 'median', 'q3', 'max', 'mean']
        assert len(rows) == 7
        assert [r[0] for r in rows[1:]] == ['minimax'] * 3 + ['lqg'] * 3

    def test_byte_identical(self, tmp_path, rng):
        """Test identical inputs produce identical files"""
        values = rng.normal(size=(5, 4))
        first = write_box_stats_csv({'a': box_stats(values)}, tmp_path / "one.csv").read_bytes()
        second = write_box_stats_csv({'a': box_stats(values)}, tmp_path / "two.csv").read_bytes()

        assert first == second
