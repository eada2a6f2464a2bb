#!/usr/bin/env python3
"""
Exact first and second moments of the state under a worst-case opponent.

With M_t = A + B K_t + Xi S_t, c_i = b_i + mean_shift and the support index
drawn independently of x_t:

    mean_{t+1} = M_t mean_t + Xi cbar_t
    X_{t+1}    = M_t X_t M_t^T + M_t mean_t cbar_t^T Xi^T + Xi cbar_t mean_t^T M_t^T
                 + (1/N) sum_i Xi c_i c_i^T Xi^T

mean_shift defaults to zero, the centered game the solvers solve.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..model import DisturbanceModel, SystemModel
from ..solvers.policy import WorstCasePolicy

PolicySpec = Union[WorstCasePolicy, Sequence[WorstCasePolicy]]
GainSpec = Union[np.ndarray, Sequence[np.ndarray]]


def _at(seq, t):
    if isinstance(seq, WorstCasePolicy) or (isinstance(seq, np.ndarray) and seq.ndim == 2):
        return seq
    return seq[t]


def moment_propagation(
    model: SystemModel,
    K: GainSpec,
    policy: PolicySpec,
    x0,
    T: int,
    mean_shift: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Returns means (T+1) x n and second moments (T+1) x n x n"""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    offset = np.zeros(model.k) if mean_shift is None else np.asarray(mean_shift, dtype=float).reshape(-1)
    means = np.empty((T + 1, model.n))
    second = np.empty((T + 1, model.n, model.n))
    means[0] = x0
    second[0] = np.outer(x0, x0)

    for t in range(T):
        K_t, pol = _at(K, t), _at(policy, t)
        M = model.A + model.B @ K_t + model.Xi @ pol.S
        Xb = (pol.b + offset) @ model.Xi.T     # N x n, rows Xi c_i
        shift = Xb.mean(axis=0)
        cross = np.outer(M @ means[t], shift)
        means[t + 1] = M @ means[t] + shift
        second[t + 1] = M @ second[t] @ M.T + cross + cross.T + Xb.T @ Xb / pol.N
    return means, second


def expected_cost(
    model: SystemModel,
    K: GainSpec,
    policy: PolicySpec,
    data: DisturbanceModel,
    x0,
    lam: float,
    T: int,
) -> float:
    """
    E[ sum_t x^T Q x + u^T R u - lambda (1/N) sum_i ||S x + b_i - w_i||^2 ] + E[x_T^T Qf x_T]

    computed exactly from the propagated moments of the centered game (no mean_shift),
    which is the game whose value the Riccati recursion returns.
    """
    means, second = moment_propagation(model, K, policy, x0, T)
    total = 0.0
    for t in range(T):
        K_t, pol = _at(K, t), _at(policy, t)
        X, mean = second[t], means[t]
        total += float(np.trace((model.Q + K_t.T @ model.R @ K_t) @ X))
        c = pol.b - data.samples
        penalty = (np.trace(pol.S.T @ pol.S @ X)
                   + 2.0 * mean @ pol.S.T @ c.mean(axis=0)
                   + np.mean(np.sum(c ** 2, axis=1)))
        total -= lam * float(penalty)
    total += float(np.trace(model.Qf @ second[T]))
    return total
