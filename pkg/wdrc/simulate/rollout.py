#!/usr/bin/env python3
"""
Closed-loop rollouts of x_{t+1} = A x_t + B u_t + Xi w_t with u_t = K_t x_t.

Every trial owns a counter-based generator keyed on (seed, trial), so a batch
gives the same trajectories whether it runs sequentially or across processes.
"""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from ..errors import SimulationError
from ..model import SystemModel
from .sources import DisturbanceSource

logger = logging.getLogger(__name__)

GainSpec = Union[np.ndarray, Sequence[np.ndarray]]


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray        # (T+1) x n
    inputs: np.ndarray        # T x m
    disturbances: np.ndarray  # T x k
    seed: int
    trial: int = 0

    @property
    def steps(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True)
class TrialBatch:
    """Trajectories of a batch, stacked along the first axis in trial order"""
    states: np.ndarray        # trials x (T+1) x n
    inputs: np.ndarray        # trials x T x m
    disturbances: np.ndarray  # trials x T x k
    seed: int

    @property
    def trials(self) -> int:
        return self.states.shape[0]

    def trajectory(self, i: int) -> Trajectory:
        return Trajectory(self.states[i], self.inputs[i], self.disturbances[i], self.seed, i)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Philox stream for one trial"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial)])))


def _gain_at(K: GainSpec, t: int) -> np.ndarray:
    if isinstance(K, np.ndarray) and K.ndim == 2:
        return K
    if t >= len(K):
        raise SimulationError(f"no gain for stage {t} (have {len(K)})")
    return np.asarray(K[t], dtype=float)


def _check_dimensions(model: SystemModel, K: GainSpec, source: DisturbanceSource, x0: np.ndarray, T: int) -> None:
    if x0.shape != (model.n,):
        raise SimulationError(f"dimension mismatch: x0 has shape {x0.shape}, expected ({model.n},)")
    stationary = isinstance(K, np.ndarray) and K.ndim == 2
    gains = [K] if stationary else list(K)
    if not stationary and len(gains) < T:
        raise SimulationError(f"gain sequence has {len(gains)} stages, need {T}")
    for G in gains:
        if np.shape(G) != (model.m, model.n):
            raise SimulationError(f"dimension mismatch: gain has shape {np.shape(G)}, expected ({model.m}, {model.n})")
    if source.k != model.k:
        raise SimulationError(f"dimension mismatch: disturbances have dimension {source.k}, model expects {model.k}")


def rollout(
    model: SystemModel,
    K: GainSpec,
    source: DisturbanceSource,
    x0,
    T: int,
    seed: int,
    trial: int = 0,
) -> Trajectory:
    """Simulate T steps from x0; K is a stationary gain or one gain per stage"""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if T < 0:
        raise SimulationError(f"number of steps must be >= 0, got {T}")
    _check_dimensions(model, K, source, x0, T)

    rng = trial_rng(seed, trial)
    states = np.empty((T + 1, model.n))
    inputs = np.empty((T, model.m))
    disturbances = np.empty((T, model.k))
    states[0] = x0

    for t in range(T):
        x = states[t]
        inputs[t] = _gain_at(K, t) @ x
        disturbances[t] = source.draw(x, t, rng)
        states[t + 1] = model.A @ x + model.B @ inputs[t] + model.Xi @ disturbances[t]

    return Trajectory(states=states, inputs=inputs, disturbances=disturbances, seed=seed, trial=trial)


def _run_chunk(args):
    """Worker entry point (module level so the process pool can pickle it)"""
    model, K, source, x0, T, seed, trial_ids = args
    return [rollout(model, K, source, x0, T, seed, trial) for trial in trial_ids]


def run_trials(
    model: SystemModel,
    K: GainSpec,
    source: DisturbanceSource,
    x0,
    T: int,
    trials: int,
    seed: int,
    jobs: int = 1,
) -> TrialBatch:
    """Run independent trials 0..trials-1, in parallel when jobs > 1"""
    if trials < 1:
        raise SimulationError(f"need at least one trial, got {trials}")
    results: List[Optional[Trajectory]] = [None] * trials

    if jobs <= 1 or trials == 1:
        for i in range(trials):
            results[i] = rollout(model, K, source, x0, T, seed, i)
    else:
        n_chunks = min(jobs * 4, trials)
        chunks = [c.tolist() for c in np.array_split(np.arange(trials), n_chunks)]
        logger.debug("Distributing %d trials over %d workers (%d chunks)", trials, jobs, n_chunks)
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = [executor.submit(_run_chunk, (model, K, source, x0, T, seed, chunk)) for chunk in chunks]
            for future in as_completed(futures):
                for traj in future.result():
                    results[traj.trial] = traj

    return TrialBatch(
        states=np.stack([r.states for r in results]),
        inputs=np.stack([r.inputs for r in results]),
        disturbances=np.stack([r.disturbances for r in results]),
        seed=seed,
    )
