#!/usr/bin/env python3
"""
Costs of simulated trajectories and the discrete Wasserstein-2 oracle.

The opponent's transport penalty pairs each worst-case support point
S x + b_i with its own sample w_i (identity coupling). For N <= 8 that value
can be checked against the exhaustive assignment minimum.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import SimulationError
from ..model import SystemModel
from ..solvers.policy import WorstCasePolicy
from .rollout import Trajectory
from .sources import WORST_CASE, DisturbanceSource

logger = logging.getLogger(__name__)

MAX_ORACLE_POINTS = 8
COUPLING_TOL = 1e-10


@dataclass(frozen=True)
class CostReport:
    state_input_cost: float
    penalty_term: float
    total: float           # state_input_cost - lambda * penalty_term
    control_energy: float

    def to_dict(self) -> dict:
        return {
            'state_input_cost': self.state_input_cost,
            'penalty_term': self.penalty_term,
            'total': self.total,
            'control_energy': self.control_energy,
        }


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    return arr.reshape(-1, 1) if arr.ndim == 1 else arr


def _check_pair(mu: np.ndarray, nu: np.ndarray) -> None:
    if mu.shape != nu.shape:
        raise SimulationError(f"support size mismatch: {mu.shape} vs {nu.shape}")


def _pair_costs(mu: np.ndarray, nu: np.ndarray) -> np.ndarray:
    return np.sum((mu[:, None, :] - nu[None, :, :]) ** 2, axis=2)


def w2_discrete(mu, nu) -> float:
    """
    W2 between two uniform measures on N points each, by exhaustive assignment.

    Points are rows (1-D input is read as N scalars). Limited to N <= 8.
    """
    mu, nu = _as_points(mu), _as_points(nu)
    _check_pair(mu, nu)
    N = mu.shape[0]
    if N > MAX_ORACLE_POINTS:
        raise SimulationError(f"exhaustive W2 oracle supports N <= {MAX_ORACLE_POINTS}, got {N}")

    costs = _pair_costs(mu, nu)
    rows = np.arange(N)
    best = min(costs[rows, list(perm)].sum() for perm in itertools.permutations(range(N)))
    return math.sqrt(max(best / N, 0.0))


def w2_assignment(mu, nu) -> float:
    """Same distance through the Hungarian algorithm; cross-check for w2_discrete"""
    mu, nu = _as_points(mu), _as_points(nu)
    _check_pair(mu, nu)
    costs = _pair_costs(mu, nu)
    row_ind, col_ind = linear_sum_assignment(costs)
    return math.sqrt(max(costs[row_ind, col_ind].mean(), 0.0))


def identity_coupling_penalty(policy: WorstCasePolicy, samples: np.ndarray, x) -> float:
    """(1/N) sum_i ||S x + b_i - w_i||^2"""
    return float(np.mean(np.sum((policy.support(x) - samples) ** 2, axis=1)))


def coupling_gap(policy: WorstCasePolicy, samples: np.ndarray, x) -> float:
    """Identity-coupling value minus W2^2; zero when the identity pairing is optimal"""
    return identity_coupling_penalty(policy, samples, x) - w2_discrete(policy.support(x), samples) ** 2


def control_energy(traj: Trajectory) -> float:
    """sum_t ||u_t||^2 / T"""
    if traj.steps == 0:
        return 0.0
    return float(np.sum(traj.inputs ** 2) / traj.steps)


def evaluate_cost(
    traj: Trajectory,
    model: SystemModel,
    lam: float,
    source: DisturbanceSource,
    terminal: bool = True,
    check_coupling: bool = False,
) -> CostReport:
    """
    Realized cost of a trajectory.

    The penalty term is nonzero only under a worst-case source; with
    check_coupling the identity pairing is compared to the W2 oracle at every
    stage (N <= 8) and violations are logged.
    """
    X, U = traj.states, traj.inputs
    T = traj.steps
    if X.shape[1] != model.n or U.shape[1] != model.m:
        raise SimulationError("dimension mismatch between trajectory and model")

    cost = float(np.einsum('ti,ij,tj->', X[:T], model.Q, X[:T]) + np.einsum('ti,ij,tj->', U, model.R, U))
    if terminal:
        cost += float(X[T] @ model.Qf @ X[T])

    penalty = 0.0
    if source.kind == WORST_CASE:
        samples = source.data.samples
        for t in range(T):
            policy = source.policy_at(t)
            penalty += identity_coupling_penalty(policy, samples, X[t])
            if check_coupling and policy.N <= MAX_ORACLE_POINTS:
                gap = coupling_gap(policy, samples, X[t])
                if gap > COUPLING_TOL * (1.0 + penalty):
                    logger.warning("Identity coupling is not W2-optimal at t=%d (gap %.3e)", t, gap)

    return CostReport(
        state_input_cost=cost,
        penalty_term=penalty,
        total=cost - lam * penalty if penalty else cost,
        control_energy=control_energy(traj),
    )
