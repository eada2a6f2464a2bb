"""System models, disturbance samples and their validation."""

from .system import SystemModel, validate_model, model_from_dict, load_model, save_model
from .samples import DisturbanceModel, normalize_samples, load_samples, save_samples, generate_samples
from .validation import ValidationReport, CheckResult
from .penalty import PenaltyParam, as_penalty

__all__ = [
    'SystemModel',
    'validate_model',
    'model_from_dict',
    'load_model',
    'save_model',
    'DisturbanceModel',
    'normalize_samples',
    'load_samples',
    'save_samples',
    'generate_samples',
    'ValidationReport',
    'CheckResult',
    'PenaltyParam',
    'as_penalty',
]
