"""Zero-order-hold discretization of continuous state-space models."""

from typing import Tuple

import numpy as np
from scipy.linalg import expm

from ..errors import ModelError


def discretize_zoh(A_c, B_c, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """Discretizes the continuous A and B matrices with a zero-order hold.

    Keyword arguments:
    A_c -- continuous system matrix
    B_c -- continuous input matrix
    dt -- sampling time in seconds

    Returns:
    discrete system matrix, discrete input matrix
    """
    A_c = np.atleast_2d(np.asarray(A_c, dtype=float))
    B_c = np.asarray(B_c, dtype=float)
    B_c = B_c.reshape(-1, 1) if B_c.ndim == 1 else np.atleast_2d(B_c)
    if not np.isfinite(dt) or dt <= 0:
        raise ModelError(f"sampling time must be positive, got {dt}")
    if not (np.all(np.isfinite(A_c)) and np.all(np.isfinite(B_c))):
        raise ModelError("continuous-time matrices contain non-finite entries")

    states, inputs = A_c.shape[0], B_c.shape[1]
    if A_c.shape != (states, states) or B_c.shape[0] != states:
        raise ModelError(f"dimension mismatch: A_c {A_c.shape}, B_c {B_c.shape}")

    # M = [A  B]
    #     [0  0]
    M = expm(np.block([[A_c, B_c], [np.zeros((inputs, states)), np.zeros((inputs, inputs))]]) * dt)

    # e^{M dt} = [A_d  B_d]
    #            [ 0    I ]
    return M[:states, :states], M[:states, states:]
