#!/usr/bin/env python3
"""
Finite-horizon minimax LQ control.

Backward Riccati recursion for V_t(x) = x^T P_t x + z_t:

    P_t = Q + A^T [I + P_{t+1} B R^{-1} B^T - (1/lambda) P_{t+1} Xi Xi^T]^{-1} P_{t+1} A
    z_t = z_{t+1} + tr[(I - (1/lambda) Xi^T P_{t+1} Xi)^{-1} Xi^T P_{t+1} Xi Sigma]

with P_T = Qf, z_T = 0, and the optimal gains K_t and worst-case policies
derived from P_{t+1}.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..errors import FeasibilityError
from ..linalg import guarded_solve, max_eig, symmetrize
from ..model import DisturbanceModel, SystemModel
from ..model.penalty import as_penalty
from .policy import WorstCasePolicy, build_worst_case_policy, check_margin, opponent_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FiniteHorizonSolution:
    """
    Solution of the horizon-T problem, indexed by stage.

    P[t], z[t] for t = 0..T (P[T] = Qf, z[T] = 0); K[t] and margins[t] for
    t = 0..T-1, where margins[t] = lambda - max_eig(Xi^T P_{t+1} Xi).
    """
    horizon: int
    lam: float
    P: List[np.ndarray]
    z: List[float]
    K: List[np.ndarray]
    margins: List[float]
    method: str = 'minimax'
    Sigma: Optional[np.ndarray] = field(default=None, compare=False)

    def to_dict(self) -> Dict:
        return {
            'horizon': self.horizon,
            'lambda': self.lam if math.isfinite(self.lam) else None,
            'method': self.method,
            'P': [P.tolist() for P in self.P],
            'z': list(self.z),
            'K': [K.tolist() for K in self.K],
            'margins': [m if math.isfinite(m) else None for m in self.margins],
        }


def feasibility_margin(P: np.ndarray, model: SystemModel, lam: float) -> float:
    """lambda - max_eig(Xi^T P Xi); positive iff the step is well-posed"""
    return float(lam - max_eig(model.Xi.T @ symmetrize(P) @ model.Xi))


def _bracket(P_next: np.ndarray, model: SystemModel, lam: Optional[float]) -> np.ndarray:
    """I + P B R^{-1} B^T - (1/lambda) P Xi Xi^T  (lambda=None drops the last term)"""
    W = model.BRB if lam is None else model.W(lam)
    return np.eye(model.n) + P_next @ W


def z_increment(P_next: np.ndarray, model: SystemModel, lam: Optional[float],
                Sigma: Optional[np.ndarray], tolerances: Tolerances) -> float:
    if Sigma is None:
        return 0.0
    XPX = symmetrize(model.Xi.T @ P_next @ model.Xi)
    if lam is None:
        return float(np.trace(XPX @ Sigma))
    M = np.eye(model.k) - XPX / lam
    return float(np.trace(guarded_solve(M, XPX, tolerances.cond_max, 'I - Xi^T P Xi / lambda') @ Sigma))


def riccati_step(
    P_next: np.ndarray,
    z_next: float,
    model: SystemModel,
    lam: float,
    Sigma: Optional[np.ndarray] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> Tuple[np.ndarray, float]:
    """One backward step of the minimax Riccati recursion"""
    lam = as_penalty(lam)
    check_margin(P_next, model, lam)
    X = guarded_solve(_bracket(P_next, model, lam), P_next @ model.A, tolerances.cond_max,
                      'Riccati bracket')
    P = symmetrize(model.Q + model.A.T @ X)
    z = z_next + z_increment(P_next, model, lam, Sigma, tolerances)
    return P, z


def lqg_riccati_step(
    P_next: np.ndarray,
    z_next: float,
    model: SystemModel,
    Sigma: Optional[np.ndarray] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> Tuple[np.ndarray, float]:
    """One backward step of the standard LQG recursion (lambda -> infinity)"""
    X = guarded_solve(_bracket(P_next, model, None), P_next @ model.A, tolerances.cond_max,
                      'LQG Riccati bracket')
    P = symmetrize(model.Q + model.A.T @ X)
    z = z_next + z_increment(P_next, model, None, Sigma, tolerances)
    return P, z


def gain(
    P_next: np.ndarray,
    model: SystemModel,
    lam: Optional[float],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> np.ndarray:
    """
    K = -R^{-1} B^T [I + P B R^{-1} B^T - (1/lambda) P Xi Xi^T]^{-1} P A

    lam=None gives the LQG gain.
    """
    if lam is not None:
        lam = as_penalty(lam)
        check_margin(P_next, model, lam)
    X = guarded_solve(_bracket(P_next, model, lam), P_next @ model.A, tolerances.cond_max,
                      'Riccati bracket')
    return -np.linalg.solve(model.R, model.B.T @ X)


def inner_maximizer(
    P_next: np.ndarray,
    model: SystemModel,
    lam: float,
    x: np.ndarray,
    u: np.ndarray,
    w_hat: np.ndarray,
) -> np.ndarray:
    """(lambda I - Xi^T P Xi)^{-1} (Xi^T P (A x + B u) + lambda w_hat)"""
    check_margin(P_next, model, lam)
    rhs = model.Xi.T @ P_next @ (model.A @ x + model.B @ u) + lam * np.asarray(w_hat, dtype=float)
    return np.linalg.solve(opponent_matrix(P_next, model, lam), rhs)


def stage_objective(
    P_next: np.ndarray,
    z_next: float,
    model: SystemModel,
    lam: float,
    data: DisturbanceModel,
    x: np.ndarray,
    u: np.ndarray,
    w: Optional[np.ndarray] = None,
) -> float:
    """
    Per-stage Bellman objective with V_{t+1}(y) = y^T P_{t+1} y + z_{t+1}:

        x^T Q x + u^T R u + (1/N) sum_i [V_{t+1}(A x + B u + Xi w_i) - lambda ||w_i - w_hat_i||^2]

    When w (N x k) is omitted the per-sample maximizers are used.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if w is None:
        w = np.array([inner_maximizer(P_next, model, lam, x, u, wh) for wh in data.samples])
    y = (model.A @ x + model.B @ u)[None, :] + np.asarray(w) @ model.Xi.T
    future = np.einsum('ij,jk,ik->i', y, P_next, y) + z_next
    penalty = lam * np.sum((np.asarray(w) - data.samples) ** 2, axis=1)
    return float(x @ model.Q @ x + u @ model.R @ u + np.mean(future - penalty))


def solve_finite(
    model: SystemModel,
    data: Optional[DisturbanceModel],
    lam: float,
    T: int,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> FiniteHorizonSolution:
    """
    Run the recursion backward from P_T = Qf, z_T = 0.

    data=None means Sigma = 0, i.e. the deterministic H-infinity game (z_t = 0).
    Raises FeasibilityError carrying the stage t whose P_{t+1} violates the margin.
    """
    lam = as_penalty(lam)
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    Sigma = data.Sigma if data is not None else None

    P: List[np.ndarray] = [None] * (T + 1)
    z: List[float] = [0.0] * (T + 1)
    K: List[np.ndarray] = [None] * T
    margins: List[float] = [0.0] * T
    P[T] = symmetrize(model.Qf)

    for t in range(T - 1, -1, -1):
        margin = feasibility_margin(P[t + 1], model, lam)
        if margin <= 0.0:
            raise FeasibilityError(
                f"lambda={lam:.6g} infeasible at stage {t}: max_eig(Xi^T P_{t + 1} Xi) "
                f"exceeds lambda by {-margin:.3e}",
                stage=t, margin=margin,
            )
        margins[t] = margin
        K[t] = gain(P[t + 1], model, lam, tolerances)
        P[t], z[t] = riccati_step(P[t + 1], z[t + 1], model, lam, Sigma, tolerances)

    logger.debug("Finite-horizon solve: T=%d lambda=%g min margin %.3e", T, lam, min(margins))
    return FiniteHorizonSolution(horizon=T, lam=lam, P=P, z=z, K=K, margins=margins, Sigma=Sigma)


def solve_finite_lqg(
    model: SystemModel,
    data: Optional[DisturbanceModel],
    T: int,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> FiniteHorizonSolution:
    """Standard LQG recursion over the same horizon (baseline controller)"""
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    Sigma = data.Sigma if data is not None else None
    P: List[np.ndarray] = [None] * (T + 1)
    z: List[float] = [0.0] * (T + 1)
    K: List[np.ndarray] = [None] * T
    P[T] = symmetrize(model.Qf)
    for t in range(T - 1, -1, -1):
        K[t] = gain(P[t + 1], model, None, tolerances)
        P[t], z[t] = lqg_riccati_step(P[t + 1], z[t + 1], model, Sigma, tolerances)
    return FiniteHorizonSolution(horizon=T, lam=math.inf, P=P, z=z, K=K,
                                 margins=[math.inf] * T, method='lqg', Sigma=Sigma)


def worst_case_policy(
    P_next: np.ndarray,
    K: np.ndarray,
    model: SystemModel,
    lam: float,
    data: DisturbanceModel,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> WorstCasePolicy:
    """Worst-case distribution at one stage, built from P_{t+1} and K_t"""
    return build_worst_case_policy(P_next, K, model, as_penalty(lam), data, tolerances)


def stage_policies(
    solution: FiniteHorizonSolution,
    model: SystemModel,
    data: DisturbanceModel,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> List[WorstCasePolicy]:
    """Worst-case policies for t = 0..T-1"""
    return [
        worst_case_policy(solution.P[t + 1], solution.K[t], model, solution.lam, data, tolerances)
        for t in range(solution.horizon)
    ]


def value(solution: FiniteHorizonSolution, x: np.ndarray, t: int) -> float:
    """V_t(x) = x^T P_t x + z_t"""
    if not 0 <= t <= solution.horizon:
        raise IndexError(f"stage {t} outside 0..{solution.horizon}")
    x = np.asarray(x, dtype=float)
    return float(x @ solution.P[t] @ x + solution.z[t])


def solution_to_dict(solution: FiniteHorizonSolution) -> Dict:
    return solution.to_dict()
