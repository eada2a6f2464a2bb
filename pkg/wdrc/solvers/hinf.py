#!/usr/bin/env python3
"""
Relations to H-infinity dynamic games.

The smallest admissible penalty lambda* is the H-infinity threshold; the
worst-case deterministic disturbance D x is the mean of the worst-case
distribution, whose support points are shifted from it by the scaled samples.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..errors import (
    AssumptionViolation,
    BadBracketError,
    FeasibilityError,
    NoConvergenceError,
    SingularityError,
)
from ..linalg import max_eig
from ..model import DisturbanceModel, SystemModel
from ..model.penalty import as_penalty
from .finite_horizon import FiniteHorizonSolution, solve_finite
from .policy import WorstCasePolicy, check_margin, opponent_matrix
from .steady_state import SteadyStateSolution, check_assumptions, solve_iterative

logger = logging.getLogger(__name__)

MAX_BRACKET = 2.0 ** 60


@dataclass(frozen=True)
class Mode:
    """Horizon mode for feasibility questions: finite(T) or infinite"""
    horizon: Optional[int] = None

    @classmethod
    def finite(cls, T: int) -> 'Mode':
        if T < 1:
            raise ValueError(f"horizon must be >= 1, got {T}")
        return cls(horizon=int(T))

    @classmethod
    def infinite(cls) -> 'Mode':
        return cls(horizon=None)

    @property
    def is_infinite(self) -> bool:
        return self.horizon is None

    def __str__(self) -> str:
        return 'infinite' if self.is_infinite else f"finite(T={self.horizon})"


@dataclass(frozen=True)
class LambdaStarResult:
    lambda_star: float
    bracket: Tuple[float, float]
    iterations: int
    mode: Mode
    feasible_at: Union[SteadyStateSolution, FiniteHorizonSolution, None]

    def to_dict(self) -> dict:
        return {
            'lambda_star': self.lambda_star,
            'bracket': list(self.bracket),
            'iterations': self.iterations,
            'mode': str(self.mode),
        }


@dataclass(frozen=True)
class DisturbanceGain:
    """Worst-case deterministic disturbance gamma(x) = D x"""
    D: np.ndarray
    lam: float


def _solve(model: SystemModel, lam: float, mode: Mode, tolerances: Tolerances, max_iter: Optional[int]):
    if mode.is_infinite:
        report = check_assumptions(model, lam, tolerances)
        if not report.standing:
            raise AssumptionViolation(report.summary(), report)
        return solve_iterative(model, None, lam, max_iter=max_iter, tolerances=tolerances, report=report)
    return solve_finite(model, None, lam, mode.horizon, tolerances)


def _probe(model: SystemModel, lam: float, mode: Mode, tolerances: Tolerances,
           max_iter: Optional[int] = None):
    """Return the certificate solution at lam, or None when lam is infeasible"""
    try:
        return _solve(model, lam, mode, tolerances, max_iter)
    except (FeasibilityError, AssumptionViolation, NoConvergenceError, SingularityError) as e:
        logger.debug("lambda=%.12g infeasible (%s): %s", lam, mode, e)
        return None


def is_feasible(
    model: SystemModel,
    lam: float,
    mode: Mode = Mode.infinite(),
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> bool:
    """
    finite(T): the recursion runs T steps with every margin positive.
    infinite: W PSD, (A, sqrt W) stabilizable, and value iteration converges
    with a positive margin at the fixed point.
    """
    return _probe(model, as_penalty(lam), mode, tolerances) is not None


def lambda_star(
    model: SystemModel,
    mode: Mode = Mode.infinite(),
    lo: Optional[float] = None,
    hi: Optional[float] = None,
    tol: Optional[float] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> LambdaStarResult:
    """
    Bisection on is_feasible down to a relative bracket width tol.

    Returns the certified-feasible upper endpoint. Default lo is
    max(1e-9, max_eig(Xi^T Qf Xi)); default hi doubles from 1 until feasible.
    """
    tol = tolerances.bisection_tol if tol is None else tol
    if lo is None:
        lo = max(1e-9, max_eig(model.Xi.T @ model.Qf @ model.Xi))
    lo = as_penalty(lo)

    if hi is None:
        hi = 1.0
        certificate = _probe(model, hi, mode, tolerances)
        while certificate is None:
            hi *= 2.0
            if hi > MAX_BRACKET:
                raise BadBracketError(f"no feasible lambda found up to {MAX_BRACKET:.3e}")
            certificate = _probe(model, hi, mode, tolerances)
    else:
        hi = as_penalty(hi)
        certificate = _probe(model, hi, mode, tolerances)
        if certificate is None:
            raise BadBracketError(f"upper bracket lambda={hi:.6g} is not feasible ({mode})")

    iterations = 0
    lo_certificate = _probe(model, lo, mode, tolerances) if lo < hi else None
    if lo_certificate is not None:
        logger.info("Lower bound lambda=%.6g is already feasible", lo)
        return LambdaStarResult(lo, (lo, lo), 0, mode, lo_certificate)

    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        iterations += 1
        found = _probe(model, mid, mode, tolerances)
        if found is not None:
            hi, certificate = mid, found
        else:
            lo = mid
        logger.debug("bisection %d: [%.12g, %.12g]", iterations, lo, hi)

    logger.info("lambda* = %.10g (%s, %d bisection steps)", hi, mode, iterations)
    return LambdaStarResult(hi, (lo, hi), iterations, mode, certificate)


def hinf_disturbance(P: np.ndarray, K: np.ndarray, model: SystemModel, lam: float) -> DisturbanceGain:
    """D = (lambda I - Xi^T P Xi)^{-1} Xi^T P (A + B K)"""
    lam = as_penalty(lam)
    check_margin(P, model, lam)
    D = np.linalg.solve(opponent_matrix(P, model, lam), model.Xi.T @ P @ (model.A + model.B @ K))
    return DisturbanceGain(D=D, lam=lam)


def correspondence_residual(
    policy: WorstCasePolicy,
    disturbance: DisturbanceGain,
    model: SystemModel,
    P: np.ndarray,
    lam: float,
    data: DisturbanceModel,
    probes: int = 32,
    seed: int = 0,
) -> float:
    """
    max over samples i and random unit x of
    ||(S x + b_i) - (D x + (I - Xi^T P Xi / lambda)^{-1} w_i)||
    """
    lam = as_penalty(lam)
    M = np.eye(model.k) - model.Xi.T @ P @ model.Xi / lam
    shifts = np.linalg.solve(M, data.samples.T).T

    rng = np.random.default_rng(seed)
    X = rng.normal(size=(probes, model.n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)

    worst = 0.0
    for x in X:
        support = policy.support(x)
        shifted = (disturbance.D @ x)[None, :] + shifts
        worst = max(worst, float(np.max(np.linalg.norm(support - shifted, axis=1))))
    return worst
