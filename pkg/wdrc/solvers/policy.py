#!/usr/bin/env python3
"""
Worst-case distribution policy: uniform discrete measure on affine support maps.

    w^{(i)}(x) = S x + b_i,    i = 1..N,   weights 1/N
"""

from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..errors import FeasibilityError
from ..linalg import guarded_solve, max_eig, symmetrize
from ..model import DisturbanceModel, SystemModel


@dataclass(frozen=True)
class WorstCasePolicy:
    """Opponent policy x -> (1/N) sum_i delta_{S x + b_i}"""
    S: np.ndarray        # k x n
    b: np.ndarray        # N x k
    lam: float

    @property
    def N(self) -> int:
        return self.b.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.N, 1.0 / self.N)

    def support(self, x: np.ndarray) -> np.ndarray:
        """Support points (N x k) of the worst-case distribution at state x"""
        return (self.S @ np.asarray(x, dtype=float))[None, :] + self.b

    def to_dict(self) -> Dict:
        return {'S': self.S.tolist(), 'b': self.b.tolist(), 'lambda': self.lam}


def opponent_matrix(P: np.ndarray, model: SystemModel, lam: float) -> np.ndarray:
    """lambda I - Xi^T P Xi"""
    return lam * np.eye(model.k) - symmetrize(model.Xi.T @ P @ model.Xi)


def check_margin(P: np.ndarray, model: SystemModel, lam: float, stage: Optional[int] = None) -> float:
    margin = lam - max_eig(model.Xi.T @ P @ model.Xi)
    if margin <= 0.0:
        where = f" at stage {stage}" if stage is not None else ''
        raise FeasibilityError(
            f"lambda={lam:.6g} does not exceed max_eig(Xi^T P Xi){where} (margin {margin:.3e})",
            stage=stage, margin=margin,
        )
    return margin


def build_worst_case_policy(
    P_next: np.ndarray,
    K: np.ndarray,
    model: SystemModel,
    lam: float,
    data: DisturbanceModel,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> WorstCasePolicy:
    """
    S = (lambda I - Xi^T P Xi)^{-1} Xi^T P (A + B K)
    b_i = lambda (lambda I - Xi^T P Xi)^{-1} w_i
    """
    check_margin(P_next, model, lam)
    M = opponent_matrix(P_next, model, lam)
    S = guarded_solve(M, model.Xi.T @ P_next @ (model.A + model.B @ K), tolerances.cond_max,
                      'lambda I - Xi^T P Xi')
    b = lam * guarded_solve(M, data.samples.T, tolerances.cond_max, 'lambda I - Xi^T P Xi').T
    S.setflags(write=False)
    b.setflags(write=False)
    return WorstCasePolicy(S=S, b=b, lam=float(lam))
