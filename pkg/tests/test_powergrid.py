#!/usr/bin/env python3
"""
Tests for the swing-equation grid model and the frequency-regulation experiment
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from wdrc.cli import main
from wdrc.errors import CertificationFailure, ModelError
from wdrc.linalg import min_eig
from wdrc.powergrid import (
    ExperimentConfig,
    GridSpec,
    build_experiment,
    discretize_zoh,
    grid_from_dict,
    grid_weights,
    linearize,
    load_grid,
)
from wdrc.solvers import certify_stability, check_assumptions, lambda_star, solve_lqg_steady, solve_steady

GRID_FILE = Path(__file__).parent.parent / "data" / "grid10_synthetic.json"


@pytest.fixture(scope="module")
def grid_threshold():
    """Discretized grid model and its lambda* (coarse bracket)"""
    model, _ = build_experiment(load_grid(GRID_FILE))
    return model, lambda_star(model, tol=1e-3).lambda_star


def _two_generators(delta_star=(0.0, 0.0)):
    return GridSpec(H=[1.0, 1.0], d=[0.5, 0.5], E=[1.0, 1.0], Y_abs=[[0.0, 2.0], [2.0, 0.0]],
                    omega_s=2.0, delta_star=list(delta_star))


class TestLinearize:
    """Tests for the swing-equation linearization"""

    def test_two_generators(self):
        """Test L = [[2, -2], [-2, 2]] at zero angle difference"""
        linear = linearize(_two_generators())

        assert np.allclose(linear.L, [[2.0, -2.0], [-2.0, 2.0]])
        assert np.allclose(linear.M, np.eye(2))

    def test_angle_difference(self):
        """Test the coupling is scaled by cos(delta_i - delta_j)"""
        linear = linearize(_two_generators((0.0, math.pi / 3.0)))

        assert np.allclose(linear.L, [[1.0, -1.0], [-1.0, 1.0]])

    def test_single_generator(self):
        """Test one machine has L = 0 and A_c = [[0, 1], [0, -d/m]]"""
        spec = GridSpec(H=[2.0], d=[1.0], E=[1.0], Y_abs=[[0.0]], omega_s=4.0, delta_star=[0.0])
        linear = linearize(spec)

        assert linear.L[0, 0] == 0.0
        assert np.allclose(linear.A_c, [[0.0, 1.0], [0.0, -1.0]])
        assert np.allclose(linear.B_c, [[0.0], [1.0]])

    def test_shipped_grid_structure(self):
        """Test zero row sums and symmetry of L, and the block layout of A_c"""
        linear = linearize(load_grid(GRID_FILE))
        g = 10

        assert np.abs(linear.L.sum(axis=1)).max() <= 1e-12
        assert np.allclose(linear.L, linear.L.T)
        assert np.array_equal(linear.A_c[:g, g:], np.eye(g))
        assert np.array_equal(linear.A_c[:g, :g], np.zeros((g, g)))
        assert linear.B_c.shape == (2 * g, g)


class TestDiscretization:
    """Tests for the zero-order hold"""

    def test_integrator(self):
        """Test A_c = 0, B_c = 1 gives A = 1, B = dt"""
        A, B = discretize_zoh([[0.0]], [[1.0]], 0.1)

        assert A[0, 0] == pytest.approx(1.0)
        assert B[0, 0] == pytest.approx(0.1)

    def test_double_integrator(self):
        """Test the nilpotent case A = [[1, dt], [0, 1]], B = [dt^2/2, dt]"""
        A, B = discretize_zoh([[0.0, 1.0], [0.0, 0.0]], [0.0, 1.0], 0.1)

        assert np.allclose(A, [[1.0, 0.1], [0.0, 1.0]])
        assert np.allclose(B[:, 0], [0.005, 0.1])

    def test_decay(self):
        """Test A_c = -1 gives A = e^{-0.1} and B = 1 - e^{-0.1}"""
        A, B = discretize_zoh([[-1.0]], [[1.0]], 0.1)

        assert A[0, 0] == pytest.approx(math.exp(-0.1), rel=1e-12)
        assert B[0, 0] == pytest.approx(1.0 - math.exp(-0.1), rel=1e-10)

    def test_inverse(self, rng):
        """Test e^{A dt} e^{-A dt} = I"""
        A_c = rng.normal(size=(4, 4))
        A_plus, _ = discretize_zoh(A_c, np.zeros((4, 1)), 0.1)
        A_minus, _ = discretize_zoh(-A_c, np.zeros((4, 1)), 0.1)

        assert np.allclose(A_plus @ A_minus, np.eye(4), atol=1e-12)

    def test_half_steps(self, rng):
        """Test two half steps compose to one full step"""
        A_c, B_c = rng.normal(size=(3, 3)), rng.normal(size=(3, 2))
        A, B = discretize_zoh(A_c, B_c, 0.2)
        A_h, B_h = discretize_zoh(A_c, B_c, 0.1)

        assert np.allclose(A, A_h @ A_h, atol=1e-12)
        assert np.allclose(B, A_h @ B_h + B_h, atol=1e-12)

    @pytest.mark.parametrize("dt", [0.0, -0.1, float('nan')])
    def test_bad_sampling_time(self, dt):
        """Test nonpositive or undefined sampling times are rejected"""
        with pytest.raises(ModelError):
            discretize_zoh([[0.0]], [[1.0]], dt)

    def test_dimension_mismatch(self):
        """Test B_c with the wrong number of rows is rejected"""
        with pytest.raises(ModelError, match="dimension mismatch"):
            discretize_zoh(np.eye(2), np.ones((3, 1)), 0.1)


class TestGridFile:
    """Tests for reading and validating grid descriptions"""

    def _data(self):
        return json.loads(GRID_FILE.read_text())

    def test_shipped_file(self):
        """Test the shipped grid loads with ten generators"""
        spec = load_grid(GRID_FILE)

        assert spec.generators == 10
        assert spec.name == "grid10_synthetic"
        assert np.all(spec.omega_star == 0.0)

    def test_missing_file(self, tmp_path):
        """Test a missing grid file raises FileNotFoundError"""
        with pytest.raises(FileNotFoundError):
            load_grid(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        """Test malformed JSON becomes a ModelError"""
        path = tmp_path / "grid.json"
        path.write_text("[1, 2")

        with pytest.raises(ModelError):
            load_grid(path)

    def test_missing_key(self):
        """Test a grid without omega_s is rejected"""
        data = self._data()
        del data['omega_s']

        with pytest.raises(ModelError, match="omega_s"):
            grid_from_dict(data)

    def test_negative_inertia(self):
        """Test a nonpositive inertia constant is rejected"""
        data = self._data()
        data['generators'][3]['H'] = -1.0

        with pytest.raises(ModelError, match="inertia"):
            grid_from_dict(data)

    def test_asymmetric_admittance(self):
        """Test an asymmetric |Y| is rejected"""
        data = self._data()
        data['Y_abs'][0][1] += 0.5

        with pytest.raises(ModelError, match="symmetric"):
            grid_from_dict(data)

    def test_wrong_angle_count(self):
        """Test delta_star must have one entry per generator"""
        data = self._data()
        data['delta_star'] = data['delta_star'][:-1]

        with pytest.raises(ModelError, match="delta_star"):
            grid_from_dict(data)

    def test_round_trip(self):
        """Test to_dict feeds back into grid_from_dict"""
        spec = load_grid(GRID_FILE)
        again = grid_from_dict(spec.to_dict())

        assert np.array_equal(again.H, spec.H)
        assert np.array_equal(again.Y_abs, spec.Y_abs)


class TestExperiment:
    """Tests for the discretized frequency-regulation model"""

    def test_weights(self):
        """Test Q has a zero eigenvalue along the consensus angle and R = I"""
        Q, R = grid_weights(4)
        consensus = np.concatenate([np.ones(4), np.zeros(4)])

        assert np.allclose(Q @ consensus, 0.0)
        assert min_eig(Q) == pytest.approx(0.0, abs=1e-12)
        assert np.array_equal(R, np.eye(4))

    def test_build(self):
        """Test shapes, Xi = B, dt metadata and the perturbed initial state"""
        model, metadata = build_experiment(load_grid(GRID_FILE), dt=0.1)

        assert (model.n, model.m, model.k) == (20, 10, 10)
        assert np.array_equal(model.Xi, model.B)
        assert np.array_equal(model.Qf, model.Q)
        assert model.dt == 0.1
        assert metadata['steps'] == 50
        assert metadata['x0'][19] == 0.5
        assert sum(abs(v) for v in metadata['x0']) == 0.5

    def test_config(self):
        """Test the perturbed generator and horizon come from the config"""
        config = ExperimentConfig(perturbation=0.2, perturbed_generator=0, horizon_seconds=2.0)
        _, metadata = build_experiment(load_grid(GRID_FILE), dt=0.05, config=config)

        assert metadata['x0'][10] == 0.2
        assert metadata['steps'] == 40

    def test_consensus_mode_is_marginal(self):
        """Test the discretized A keeps the uniform angle shift as an eigenvalue-1 mode"""
        model, _ = build_experiment(load_grid(GRID_FILE))
        consensus = np.concatenate([np.ones(10), np.zeros(10)])

        assert np.allclose(model.A @ consensus, consensus, atol=1e-10)

    def test_unobservable(self):
        """Test the consensus mode is reported unobservable"""
        model, _ = build_experiment(load_grid(GRID_FILE))
        report = check_assumptions(model, 5.0)

        assert report.standing
        assert not report.observable

    def test_steady_state_falls_back_and_is_not_certified(self, grid_threshold):
        """Test auto mode iterates and the certificate is refused"""
        model, threshold = grid_threshold
        lam = 2.0 * threshold
        solution = solve_steady(model, None, lam)

        assert solution.method == 'iterative'
        assert solution.fallback_reason
        with pytest.raises(CertificationFailure):
            certify_stability(solution, model, lam)

    def test_lqg_converges(self):
        """Test the LQG value iteration converges with P singular along consensus"""
        model, _ = build_experiment(load_grid(GRID_FILE))
        solution = solve_lqg_steady(model)
        consensus = np.concatenate([np.ones(10), np.zeros(10)])

        assert np.linalg.norm(solution.P_ss @ consensus) <= 1e-8 * np.linalg.norm(solution.P_ss)

    def test_penalty_lowers_value(self, grid_threshold):
        """Test a larger penalty gives a smaller steady-state value matrix"""
        model, threshold = grid_threshold
        low = solve_steady(model, None, 1.5 * threshold).P_ss
        high = solve_steady(model, None, 15.0 * threshold).P_ss

        assert min_eig(low - high) >= -1e-8

    def test_threshold_reported(self, grid_threshold):
        """Test lambda* of the grid lies above 1 (W = (1 - 1/lambda) B B^T)"""
        model, threshold = grid_threshold

        assert 1.0 < threshold < 1e3
        assert solve_steady(model, None, threshold).P_ss.shape == (20, 20)


class TestFrequencyRegulation:
    """Minimax and LQG controllers on the grid under the worst-case source"""

    def _compare(self, tmp_path, lam, *extra):
        grid_dir = tmp_path / "grid"
        assert main(['grid-build', '--grid', str(GRID_FILE), '--dt', '0.1', '--sample-seed', '7',
                     '--out', str(grid_dir)]) == 0
        code = main(['compare-lqg', '--model', str(grid_dir / "model.json"),
                     '--samples', str(grid_dir / "samples.csv"),
                     '--experiment', str(grid_dir / "experiment.json"),
                     '--lambda', f"{lam:.17g}", '--trials', '100', '--steps', '50', '--seed', '7',
                     '--out', str(tmp_path / "out"), *extra])
        assert code == 0
        return json.loads((tmp_path / "out" / "compare_lqg.json").read_text())

    def test_minimax_narrows_frequency_spread(self, tmp_path, grid_threshold):
        """Test the minimax controller has a smaller mean IQR of the perturbed frequency near lambda*"""
        _, threshold = grid_threshold
        document = self._compare(tmp_path, 1.01 * threshold)

        assert document['monitor'] == 19
        assert document['summary']['minimax_mean_iqr'] < document['summary']['lqg_mean_iqr']

    def test_energy_sweep_approaches_lqg(self, tmp_path, grid_threshold):
        """Test minimax energy falls with lambda and ends within 2% of LQG at 1e3 lambda*"""
        _, threshold = grid_threshold
        sweep = f"{1.01 * threshold:.17g}:{1e3 * threshold:.17g}:6"
        rows = self._compare(tmp_path, 1.01 * threshold, '--lambda-sweep', sweep)['sweep']
        energy = [row['minimax_energy'] for row in rows]

        assert len(rows) == 6
        for before, after in zip(energy, energy[1:]):
            assert after <= before * (1.0 + 1e-3)
        assert rows[-1]['minimax_energy'] == pytest.approx(rows[-1]['lqg_energy'], rel=0.02)
