#!/usr/bin/env python3
"""
Where disturbances come from during a rollout.

    empirical   uniform draw from the raw samples (normalized + mean_shift)
    worst_case  uniform draw from the support {S x_t + b_i} of a worst-case policy,
                plus mean_shift (the policy is built on centered samples)
    external    a fixed T x k stream, replayed in order
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import SimulationError
from ..model import DisturbanceModel
from ..solvers.policy import WorstCasePolicy

EMPIRICAL = 'empirical'
WORST_CASE = 'worst_case'
EXTERNAL = 'external'

PolicySpec = Union[WorstCasePolicy, Sequence[WorstCasePolicy]]


@dataclass(frozen=True)
class DisturbanceSource:
    kind: str
    data: Optional[DisturbanceModel] = None
    policy: Optional[PolicySpec] = None
    stream: Optional[np.ndarray] = None

    @classmethod
    def empirical(cls, data: DisturbanceModel) -> 'DisturbanceSource':
        return cls(kind=EMPIRICAL, data=data)

    @classmethod
    def worst_case(cls, policy: PolicySpec, data: DisturbanceModel) -> 'DisturbanceSource':
        """A stationary policy, or one policy per stage"""
        return cls(kind=WORST_CASE, data=data, policy=policy)

    @classmethod
    def external(cls, stream) -> 'DisturbanceSource':
        stream = np.atleast_2d(np.asarray(stream, dtype=float))
        if not np.all(np.isfinite(stream)):
            raise SimulationError("external disturbance stream contains non-finite values")
        return cls(kind=EXTERNAL, stream=stream)

    @property
    def k(self) -> int:
        if self.kind == EXTERNAL:
            return self.stream.shape[1]
        return self.data.k

    def policy_at(self, t: int) -> WorstCasePolicy:
        if isinstance(self.policy, WorstCasePolicy):
            return self.policy
        if t >= len(self.policy):
            raise SimulationError(f"no worst-case policy for stage {t} (have {len(self.policy)})")
        return self.policy[t]

    def draw(self, x: np.ndarray, t: int, rng: np.random.Generator) -> np.ndarray:
        """Disturbance w_t at state x_t"""
        if self.kind == EMPIRICAL:
            return self.data.raw_samples[rng.integers(self.data.N)]
        if self.kind == WORST_CASE:
            policy = self.policy_at(t)
            return policy.support(x)[rng.integers(policy.N)] + self.data.mean_shift
        if self.kind == EXTERNAL:
            if t >= self.stream.shape[0]:
                raise SimulationError(f"external stream has only {self.stream.shape[0]} steps")
            return self.stream[t]
        raise SimulationError(f"unknown disturbance source '{self.kind}'")
