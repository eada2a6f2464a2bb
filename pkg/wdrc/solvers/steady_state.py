#!/usr/bin/env python3
"""
Infinite-horizon minimax LQ control.

Solves the algebraic Riccati equation

    P = Q + A^T [I + P B R^{-1} B^T - (1/lambda) P Xi Xi^T]^{-1} P A

either by value iteration of the finite-horizon recursion or from the stable
invariant subspace of the inverse Hamiltonian H' = G^{-1} F, and certifies that
the worst-case mean dynamics (I + W P)^{-1} A are stable.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..errors import (
    AssumptionViolation,
    CertificationFailure,
    NoConvergenceError,
    SpectralFallback,
    UnitCircleEigenvalueError,
)
from ..linalg import (
    guarded_solve,
    min_eig,
    numerical_rank,
    psd_sqrt,
    relative_residual,
    spectral_radius,
    symmetrize,
)
from ..model import DisturbanceModel, SystemModel
from ..model.penalty import as_penalty
from .finite_horizon import z_increment, gain, lqg_riccati_step, riccati_step
from .pencil import inverse_hamiltonian
from .policy import WorstCasePolicy, build_worst_case_policy, check_margin

logger = logging.getLogger(__name__)

UNIT_CIRCLE_TOL = 1e-9
UNIT_MODE_TOL = 1e-8
EIGVEC_COND_MAX = 1e10
SUBSPACE_COND_MAX = 1e12
A_COND_MAX = 1e12


@dataclass
class AssumptionReport:
    """W = B R^{-1} B^T - Xi Xi^T / lambda, its definiteness and the PBH tests"""
    W: np.ndarray
    W_psd_margin: float
    W_psd: bool
    stabilizable: bool
    observable: bool
    stabilizability_details: List[Dict] = field(default_factory=list)
    observability_details: List[Dict] = field(default_factory=list)

    @property
    def standing(self) -> bool:
        """W PSD and (A, sqrt W) stabilizable: needed for the iteration to converge"""
        return self.W_psd and self.stabilizable

    @property
    def passed(self) -> bool:
        return self.standing and self.observable

    def summary(self) -> str:
        parts = []
        if not self.W_psd:
            parts.append(f"W not PSD (min eigenvalue {self.W_psd_margin:.3e})")
        if not self.stabilizable:
            parts.append("(A, sqrt W) not stabilizable")
        if not self.observable:
            parts.append("(A, sqrt Q) not observable")
        return '; '.join(parts) if parts else 'all assumptions hold'

    def to_dict(self) -> Dict:
        return {
            'W_psd_margin': self.W_psd_margin,
            'W_psd': self.W_psd,
            'stabilizable': self.stabilizable,
            'observable': self.observable,
            'stabilizability_details': self.stabilizability_details,
            'observability_details': self.observability_details,
        }


@dataclass(frozen=True)
class SteadyStateSolution:
    """Limit of the recursion and the quantities derived from it"""
    P_ss: np.ndarray
    z_rate: float
    K_ss: np.ndarray
    closed_loop: np.ndarray
    spectral_radius: float
    method: str
    lam: float
    are_residual: float
    iterations: int = 0
    assumption_report: Optional[AssumptionReport] = None
    stable_eigenvalues: Optional[np.ndarray] = None
    pencil_eigenvalues: Optional[np.ndarray] = None
    fallback_reason: str = ''

    def to_dict(self) -> Dict:
        return {
            'P_ss': self.P_ss.tolist(),
            'K_ss': self.K_ss.tolist(),
            'z_rate': self.z_rate,
            'closed_loop': self.closed_loop.tolist(),
            'spectral_radius': self.spectral_radius,
            'method': self.method,
            'lambda': self.lam if math.isfinite(self.lam) else None,
            'are_residual': self.are_residual,
            'iterations': self.iterations,
            'fallback_reason': self.fallback_reason,
            'assumption_report': self.assumption_report.to_dict() if self.assumption_report else None,
        }


@dataclass(frozen=True)
class StabilityCertificate:
    spectral_radius: float
    identity_residual: float
    observable: bool
    passed: bool

    def to_dict(self) -> Dict:
        return {
            'spectral_radius': self.spectral_radius,
            'identity_residual': self.identity_residual,
            'observable': self.observable,
            'passed': self.passed,
        }


def _pbh(A: np.ndarray, C: np.ndarray, eigenvalues, transpose: bool) -> Tuple[bool, List[Dict]]:
    n = A.shape[0]
    details = []
    ok = True
    for gamma in eigenvalues:
        shifted = A - gamma * np.eye(n)
        test = np.vstack([shifted, C]) if transpose else np.hstack([shifted, C])
        rank = numerical_rank(test)
        passed = rank == n
        ok = ok and passed
        details.append({'eigenvalue': [float(np.real(gamma)), float(np.imag(gamma))],
                        'rank': rank, 'passed': passed})
    return ok, details


def check_assumptions(
    model: SystemModel,
    lam: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> AssumptionReport:
    """
    W PSD, PBH stabilizability of (A, sqrt W) on |gamma| >= 1 and PBH
    observability of (A, sqrt Q) on every eigenvalue of A.
    """
    lam = as_penalty(lam)
    W = model.W(lam)
    w_margin = min_eig(W)
    w_psd = w_margin >= -tolerances.psd_tol(float(np.trace(W)))
    eigenvalues = np.linalg.eigvals(model.A)

    if w_psd:
        sqrt_W = psd_sqrt(W, tolerances.psd_tol(float(np.trace(W))))
        unstable = [g for g in eigenvalues if abs(g) >= 1.0 - 1e-12]
        stabilizable, stab_details = _pbh(model.A, sqrt_W, unstable, transpose=False)
    else:
        stabilizable, stab_details = False, []

    sqrt_Q = psd_sqrt(model.Q, tolerances.psd_tol(float(np.trace(model.Q))))
    observable, obs_details = _pbh(model.A, sqrt_Q, eigenvalues, transpose=True)

    report = AssumptionReport(
        W=W, W_psd_margin=w_margin, W_psd=w_psd,
        stabilizable=stabilizable, observable=observable,
        stabilizability_details=stab_details, observability_details=obs_details,
    )
    logger.debug("Assumptions at lambda=%g: %s", lam, report.summary())
    return report


def are_residual(P: np.ndarray, model: SystemModel, lam: float) -> float:
    """||P - Q - A^T [I + P W]^{-1} P A||_F / (1 + ||P||_F)"""
    rhs = model.Q + model.A.T @ np.linalg.solve(np.eye(model.n) + P @ model.W(lam), P @ model.A)
    return float(np.linalg.norm(P - rhs) / (1.0 + np.linalg.norm(P)))


def _finish(
    P: np.ndarray,
    model: SystemModel,
    lam: float,
    data: Optional[DisturbanceModel],
    method: str,
    tolerances: Tolerances,
    **extra,
) -> SteadyStateSolution:
    P = symmetrize(P)
    check_margin(P, model, lam)
    K = gain(P, model, lam, tolerances)
    closed = guarded_solve(np.eye(model.n) + model.W(lam) @ P, model.A, tolerances.cond_max, 'I + W P')
    Sigma = data.Sigma if data is not None else None
    return SteadyStateSolution(
        P_ss=P,
        z_rate=z_increment(P, model, lam, Sigma, tolerances),
        K_ss=K,
        closed_loop=closed,
        spectral_radius=spectral_radius(closed),
        method=method,
        lam=lam,
        are_residual=are_residual(P, model, lam),
        **extra,
    )


def _require_standing(report: AssumptionReport) -> None:
    if not report.standing:
        raise AssumptionViolation(f"infinite-horizon assumptions fail: {report.summary()}", report)
    if not report.observable:
        logger.warning("(A, sqrt Q) is not observable; the solution carries no uniqueness certificate")


def solve_iterative(
    model: SystemModel,
    data: Optional[DisturbanceModel],
    lam: float,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    P_init: Optional[np.ndarray] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    report: Optional[AssumptionReport] = None,
) -> SteadyStateSolution:
    """
    Value iteration of the Riccati recursion from P_init (default Qf) until
    ||P_t - P_{t+1}||_F <= tol (1 + ||P_t||_F).

    Raises FeasibilityError (stage = iteration index) if an iterate violates the
    margin, NoConvergenceError after max_iter iterations.
    """
    lam = as_penalty(lam)
    tol = tolerances.iter_tol if tol is None else tol
    max_iter = tolerances.max_iter if max_iter is None else max_iter
    report = report or check_assumptions(model, lam, tolerances)
    _require_standing(report)

    P = symmetrize(model.Qf if P_init is None else np.asarray(P_init, dtype=float))
    if min_eig(P) < -tolerances.psd_tol(float(np.trace(P))):
        raise ValueError("P_init must be symmetric PSD")

    diff = math.inf
    for it in range(1, max_iter + 1):
        check_margin(P, model, lam, stage=it - 1)
        P_next, _ = riccati_step(P, 0.0, model, lam, None, tolerances)
        diff = float(np.linalg.norm(P_next - P))
        if diff <= tol * (1.0 + np.linalg.norm(P)):
            logger.debug("Value iteration converged in %d iterations (lambda=%g)", it, lam)
            return _finish(P_next, model, lam, data, 'iterative', tolerances,
                           iterations=it, assumption_report=report)
        P = P_next

    raise NoConvergenceError(
        f"value iteration did not converge in {max_iter} iterations (last step {diff:.3e})",
        iterations=max_iter, residual=diff,
    )


def _stable_basis(vals: np.ndarray, vecs: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Real basis of the stable invariant subspace, ordered by |gamma| then angle"""
    stable = [i for i in range(len(vals)) if abs(vals[i]) < 1.0]
    if len(stable) != n:
        raise SpectralFallback(f"expected {n} stable eigenvalues, found {len(stable)}")
    stable.sort(key=lambda i: (round(abs(vals[i]), 12), np.angle(vals[i])))

    columns = []
    for i in stable:
        v = vecs[:, i]
        imag_part = abs(vals[i].imag)
        if imag_part <= 1e-12 * max(1.0, abs(vals[i])):
            columns.append(np.real(v))
        elif vals[i].imag > 0:
            columns.append(np.real(v))
            columns.append(np.imag(v))
        # the conjugate partner (imag < 0) is covered by its twin
    if len(columns) != n:
        raise SpectralFallback("could not pair complex-conjugate stable eigenvectors")
    return np.column_stack(columns), vals[stable]


def _spectral_P(model: SystemModel, lam: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = model.n
    cond_A = float(np.linalg.cond(model.A))
    if not np.isfinite(cond_A) or cond_A > A_COND_MAX:
        raise SpectralFallback(f"A is numerically singular (condition {cond_A:.3e})")

    H = inverse_hamiltonian(model, lam)
    vals, vecs = scipy.linalg.eig(H)

    closest = float(np.min(np.abs(1.0 - np.abs(vals))))
    if closest < UNIT_CIRCLE_TOL:
        raise UnitCircleEigenvalueError(
            f"pencil has an eigenvalue on the unit circle (| 1 - |gamma| | = {closest:.3e})")

    cond_V = float(np.linalg.cond(vecs))
    if not np.isfinite(cond_V) or cond_V > EIGVEC_COND_MAX:
        raise SpectralFallback(f"inverse Hamiltonian looks defective (eigenvector condition {cond_V:.3e})")

    basis, stable_vals = _stable_basis(vals, vecs, n)
    U1, U2 = basis[:n], basis[n:]
    cond_U1 = float(np.linalg.cond(U1))
    if not np.isfinite(cond_U1) or cond_U1 > SUBSPACE_COND_MAX:
        raise SpectralFallback(f"stable subspace is ill-conditioned (cond U1 = {cond_U1:.3e})")

    P = symmetrize(np.linalg.solve(U1.T, U2.T).T)
    order = np.lexsort((np.angle(vals), np.abs(vals)))
    return P, stable_vals, vals[order]


def solve_spectral(
    model: SystemModel,
    lam: float,
    data: Optional[DisturbanceModel] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    report: Optional[AssumptionReport] = None,
) -> SteadyStateSolution:
    """
    P_ss = U2 U1^{-1} from the stable invariant subspace of H' = G^{-1} F.

    Singular A, a defective H' or an ill-conditioned subspace fall back to
    value iteration (method='iterative'); unit-circle eigenvalues raise
    UnitCircleEigenvalueError.
    """
    lam = as_penalty(lam)
    report = report or check_assumptions(model, lam, tolerances)
    _require_standing(report)

    # An unobservable mode of A on the unit circle is also a pencil eigenvalue there
    for detail in report.observability_details:
        gamma = complex(*detail['eigenvalue'])
        if not detail['passed'] and abs(abs(gamma) - 1.0) <= UNIT_MODE_TOL:
            raise UnitCircleEigenvalueError(
                f"unobservable mode of A at |gamma| = {abs(gamma):.12g} puts a pencil eigenvalue "
                "on the unit circle", report)

    try:
        P, stable_vals, all_vals = _spectral_P(model, lam)
    except UnitCircleEigenvalueError as e:
        e.report = report
        raise
    except SpectralFallback as e:
        logger.warning("Spectral method unavailable (%s); falling back to value iteration", e)
        solution = solve_iterative(model, data, lam, tolerances=tolerances, report=report)
        return _with_reason(solution, str(e))

    return _finish(P, model, lam, data, 'spectral', tolerances,
                   assumption_report=report, stable_eigenvalues=stable_vals,
                   pencil_eigenvalues=all_vals)


def _with_reason(solution: SteadyStateSolution, reason: str) -> SteadyStateSolution:
    return replace(solution, fallback_reason=reason)


def solve_steady(
    model: SystemModel,
    data: Optional[DisturbanceModel],
    lam: float,
    method: str = 'auto',
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> SteadyStateSolution:
    """Dispatch on method: 'iterative', 'spectral', or 'auto' (spectral, iteration on unit-circle failure)"""
    if method == 'iterative':
        return solve_iterative(model, data, lam, tolerances=tolerances)
    if method == 'spectral':
        return solve_spectral(model, lam, data, tolerances)
    if method != 'auto':
        raise ValueError(f"unknown method '{method}'")
    try:
        return solve_spectral(model, lam, data, tolerances)
    except UnitCircleEigenvalueError as e:
        logger.warning("%s; using value iteration without a uniqueness certificate", e)
        solution = solve_iterative(model, data, lam, tolerances=tolerances, report=e.report)
        return _with_reason(solution, str(e))


def steady_policy(
    P_ss: np.ndarray,
    model: SystemModel,
    lam: float,
    data: DisturbanceModel,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> Tuple[np.ndarray, WorstCasePolicy]:
    """Stationary gain K_ss and the stationary worst-case distribution policy"""
    lam = as_penalty(lam)
    K = gain(P_ss, model, lam, tolerances)
    return K, build_worst_case_policy(P_ss, K, model, lam, data, tolerances)


def certify_stability(
    solution: SteadyStateSolution,
    model: SystemModel,
    lam: float,
    identity_tol: float = 1e-9,
) -> StabilityCertificate:
    """
    Check rho((I + W P)^{-1} A) < 1 and (A + B K) + Xi S = (I + W P)^{-1} A.

    Refuses (CertificationFailure) when (A, sqrt Q) is not observable, since the
    limit is then not known to be the unique stabilizing solution.
    """
    lam = as_penalty(lam)
    S = build_worst_case_policy(solution.P_ss, solution.K_ss, model, lam, DisturbanceModel.zeros(model.k)).S
    mean_dynamics = model.A + model.B @ solution.K_ss + model.Xi @ S
    identity = relative_residual(mean_dynamics, solution.closed_loop)
    rho = spectral_radius(solution.closed_loop)
    observable = solution.assumption_report.observable if solution.assumption_report else True

    certificate = StabilityCertificate(
        spectral_radius=rho,
        identity_residual=identity,
        observable=observable,
        passed=rho < 1.0 and identity <= identity_tol and observable,
    )
    if not certificate.passed:
        reasons = []
        if rho >= 1.0:
            reasons.append(f"spectral radius {rho:.6g} >= 1")
        if identity > identity_tol:
            reasons.append(f"mean-dynamics identity residual {identity:.3e}")
        if not observable:
            reasons.append("(A, sqrt Q) not observable")
        raise CertificationFailure("stability certificate failed: " + '; '.join(reasons), certificate)
    return certificate


def lyapunov_residual(solution: SteadyStateSolution, model: SystemModel, lam: float) -> float:
    """
    Residual of P = Abar^T P Abar + Qbar with Abar = (I + W P)^{-1} A and
    Qbar = Q + Abar^T P W P Abar.
    """
    P, Abar, W = solution.P_ss, solution.closed_loop, model.W(lam)
    rhs = Abar.T @ P @ Abar + model.Q + Abar.T @ P @ W @ P @ Abar
    return relative_residual(P, rhs)


def solve_lqg_steady(
    model: SystemModel,
    data: Optional[DisturbanceModel] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> SteadyStateSolution:
    """Stationary LQG solution by value iteration of the standard recursion"""
    tol = tolerances.iter_tol if tol is None else tol
    max_iter = tolerances.max_iter if max_iter is None else max_iter
    P = symmetrize(model.Qf)
    diff = math.inf
    for it in range(1, max_iter + 1):
        P_next, _ = lqg_riccati_step(P, 0.0, model, None, tolerances)
        diff = float(np.linalg.norm(P_next - P))
        P = P_next
        if diff <= tol * (1.0 + np.linalg.norm(P)):
            K = gain(P, model, None, tolerances)
            closed = model.A + model.B @ K
            Sigma = data.Sigma if data is not None else None
            residual = float(np.linalg.norm(P - lqg_riccati_step(P, 0.0, model)[0]) / (1.0 + np.linalg.norm(P)))
            return SteadyStateSolution(
                P_ss=P,
                z_rate=z_increment(P, model, None, Sigma, tolerances),
                K_ss=K,
                closed_loop=closed,
                spectral_radius=spectral_radius(closed),
                method='lqg',
                lam=math.inf,
                are_residual=residual,
                iterations=it,
            )
    raise NoConvergenceError(f"LQG value iteration did not converge in {max_iter} iterations",
                             iterations=max_iter, residual=diff)
