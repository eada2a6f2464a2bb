"""Closed-loop simulation, cost evaluation, moment propagation and export."""

from .sources import DisturbanceSource
from .rollout import Trajectory, TrialBatch, rollout, run_trials, trial_rng
from .cost import (
    CostReport,
    evaluate_cost,
    control_energy,
    w2_discrete,
    w2_assignment,
    identity_coupling_penalty,
    coupling_gap,
)
from .moments import moment_propagation, expected_cost
from .export import (
    BoxStats,
    box_stats,
    write_json,
    write_rows,
    write_trajectory_csv,
    write_box_stats_csv,
)

__all__ = [
    'DisturbanceSource',
    'Trajectory',
    'TrialBatch',
    'rollout',
    'run_trials',
    'trial_rng',
    'CostReport',
    'evaluate_cost',
    'control_energy',
    'w2_discrete',
    'w2_assignment',
    'identity_coupling_penalty',
    'coupling_gap',
    'moment_propagation',
    'expected_cost',
    'BoxStats',
    'box_stats',
    'write_json',
    'write_rows',
    'write_trajectory_csv',
    'write_box_stats_csv',
]
