"""Penalty parameter lambda > 0 on the opponent's Wasserstein deviation."""

import math
from dataclasses import dataclass

from ..errors import ModelError


@dataclass(frozen=True)
class PenaltyParam:
    value: float

    def __post_init__(self):
        value = float(self.value)
        if not math.isfinite(value) or value <= 0.0:
            raise ModelError(f"penalty parameter must be a positive finite number, got {self.value}")
        object.__setattr__(self, 'value', value)

    def __float__(self) -> float:
        return self.value


def as_penalty(lam) -> float:
    """Validate lambda and return it as a float"""
    return PenaltyParam(float(lam)).value
