#!/usr/bin/env python3
"""
Exception hierarchy for wdrc.

Everything the package raises on bad input or ill-posed problems derives from
WdrcError, so the CLI can tell user-facing failures (exit 2) from bugs (exit 1).
"""

from typing import Optional


class WdrcError(Exception):
    """Base class for all wdrc errors"""


class ModelError(WdrcError, ValueError):
    """Malformed, inconsistent or indefinite system model"""


class SampleError(WdrcError, ValueError):
    """Empty, ragged or non-finite disturbance samples"""


class ConfigError(WdrcError, ValueError):
    """Invalid configuration or tolerance override"""


class SimulationError(WdrcError, ValueError):
    """Inconsistent simulation inputs"""


class FeasibilityError(WdrcError):
    """The penalty parameter does not dominate max_eig(Xi^T P Xi)"""

    def __init__(self, message: str, stage: Optional[int] = None, margin: Optional[float] = None):
        super().__init__(message)
        self.stage = stage
        self.margin = margin


class SingularityError(WdrcError):
    """A linear system in the recursion is numerically singular"""

    def __init__(self, message: str, condition: float = float('inf')):
        super().__init__(message)
        self.condition = condition


class NoConvergenceError(WdrcError):
    """Value iteration did not reach the requested tolerance"""

    def __init__(self, message: str, iterations: int = 0, residual: float = float('nan')):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class AssumptionViolation(WdrcError):
    """Standing assumptions of the infinite-horizon problem do not hold"""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class UnitCircleEigenvalueError(AssumptionViolation):
    """The symplectic pencil has an eigenvalue on the unit circle"""


class SpectralFallback(WdrcError):
    """Internal signal: the spectral path cannot be trusted, use iteration"""


class CertificationFailure(WdrcError):
    """A steady-state solution failed its stability certificate"""

    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class BadBracketError(WdrcError):
    """The upper end of a bisection bracket is not feasible"""
