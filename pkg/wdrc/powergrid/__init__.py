"""Linearized swing-equation grid models for frequency-regulation experiments."""

from .grid import GridSpec, LinearGridModel, grid_from_dict, load_grid, linearize
from .discretization import discretize_zoh
from .experiment import ExperimentConfig, build_experiment, grid_weights

__all__ = [
    'GridSpec',
    'LinearGridModel',
    'grid_from_dict',
    'load_grid',
    'linearize',
    'discretize_zoh',
    'ExperimentConfig',
    'build_experiment',
    'grid_weights',
]
