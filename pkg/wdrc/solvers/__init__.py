"""Riccati solvers: finite horizon, steady state and the H-infinity threshold."""

from .policy import WorstCasePolicy, build_worst_case_policy, check_margin
from .finite_horizon import (
    FiniteHorizonSolution,
    feasibility_margin,
    riccati_step,
    lqg_riccati_step,
    gain,
    solve_finite,
    solve_finite_lqg,
    worst_case_policy,
    stage_policies,
    value,
    solution_to_dict,
)
from .pencil import PencilPair, build_pencil, inverse_hamiltonian
from .steady_state import (
    AssumptionReport,
    SteadyStateSolution,
    StabilityCertificate,
    check_assumptions,
    solve_iterative,
    solve_spectral,
    solve_steady,
    solve_lqg_steady,
    steady_policy,
    certify_stability,
    lyapunov_residual,
)
from .hinf import (
    Mode,
    LambdaStarResult,
    DisturbanceGain,
    is_feasible,
    lambda_star,
    hinf_disturbance,
    correspondence_residual,
)

__all__ = [
    'WorstCasePolicy',
    'build_worst_case_policy',
    'check_margin',
    'FiniteHorizonSolution',
    'feasibility_margin',
    'riccati_step',
    'lqg_riccati_step',
    'gain',
    'solve_finite',
    'solve_finite_lqg',
    'worst_case_policy',
    'stage_policies',
    'value',
    'solution_to_dict',
    'PencilPair',
    'build_pencil',
    'inverse_hamiltonian',
    'AssumptionReport',
    'SteadyStateSolution',
    'StabilityCertificate',
    'check_assumptions',
    'solve_iterative',
    'solve_spectral',
    'solve_steady',
    'solve_lqg_steady',
    'steady_policy',
    'certify_stability',
    'lyapunov_residual',
    'Mode',
    'LambdaStarResult',
    'DisturbanceGain',
    'is_feasible',
    'lambda_star',
    'hinf_disturbance',
    'correspondence_residual',
]
