#!/usr/bin/env python3
"""
Symplectic pencil of the mean-state dynamics.

    F [x_t; p_t] = G [x_{t+1}; p_{t+1}],   p_t = P x_t
    F = [[A, 0], [-Q, I]],   G = [[I, W], [0, A^T]]

Both satisfy F J F^T = G J G^T = [[0, A], [-A^T, 0]] with J = [[0, I], [-I, 0]],
so generalized eigenvalues come in (gamma, 1/gamma) pairs.
"""

from dataclasses import dataclass

import numpy as np

from ..model import SystemModel


@dataclass(frozen=True)
class PencilPair:
    F: np.ndarray
    G: np.ndarray

    @property
    def n(self) -> int:
        return self.F.shape[0] // 2

    def symplectic_residual(self) -> float:
        """max of ||F J F^T - T||, ||G J G^T - T|| scaled by 1 + ||T||"""
        n = self.n
        I, Z = np.eye(n), np.zeros((n, n))
        J = np.block([[Z, I], [-I, Z]])
        A = self.F[:n, :n]
        target = np.block([[Z, A], [-A.T, Z]])
        scale = 1.0 + np.linalg.norm(target)
        return float(max(
            np.linalg.norm(self.F @ J @ self.F.T - target),
            np.linalg.norm(self.G @ J @ self.G.T - target),
        ) / scale)


def build_pencil(model: SystemModel, lam: float) -> PencilPair:
    n = model.n
    I, Z = np.eye(n), np.zeros((n, n))
    F = np.block([[model.A, Z], [-model.Q, I]])
    G = np.block([[I, model.W(lam)], [Z, model.A.T]])
    return PencilPair(F=F, G=G)


def inverse_hamiltonian(model: SystemModel, lam: float) -> np.ndarray:
    """
    H' = G^{-1} F = [[A + W A^{-T} Q, -W A^{-T}], [-A^{-T} Q, A^{-T}]]

    Requires a nonsingular A.
    """
    W = model.W(lam)
    A_inv_T = np.linalg.inv(model.A).T
    return np.block([
        [model.A + W @ A_inv_T @ model.Q, -W @ A_inv_T],
        [-A_inv_T @ model.Q, A_inv_T],
    ])
