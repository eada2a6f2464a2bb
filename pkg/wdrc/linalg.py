#!/usr/bin/env python3
"""
Small dense linear-algebra helpers shared by the model checks and the solvers.
"""

import numpy as np
import scipy.linalg

from .errors import SingularityError, ModelError


def symmetrize(M: np.ndarray) -> np.ndarray:
    """(M + M^T) / 2"""
    return 0.5 * (M + M.T)


def asymmetry(M: np.ndarray) -> float:
    """Relative asymmetry ||M - M^T||_F / max(1, ||M||_F)"""
    return float(np.linalg.norm(M - M.T) / max(1.0, np.linalg.norm(M)))


def sym_eigvals(M: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of the symmetric part of M"""
    if M.size == 0:
        return np.zeros(0)
    return scipy.linalg.eigvalsh(symmetrize(M))


def min_eig(M: np.ndarray) -> float:
    vals = sym_eigvals(M)
    return float(vals[0]) if vals.size else 0.0


def max_eig(M: np.ndarray) -> float:
    vals = sym_eigvals(M)
    return float(vals[-1]) if vals.size else 0.0


def spectral_radius(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def guarded_solve(M: np.ndarray, rhs: np.ndarray, cond_max: float = 1e14, what: str = 'matrix') -> np.ndarray:
    """Solve M X = rhs, refusing when cond(M) exceeds cond_max"""
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > cond_max:
        raise SingularityError(f"{what} is numerically singular (condition {cond:.3e})", condition=cond)
    return scipy.linalg.solve(M, rhs)


def psd_sqrt(M: np.ndarray, tol: float) -> np.ndarray:
    """
    Principal square root of a PSD matrix.

    Eigenvalues in [-tol, 0) are clipped to zero; anything more negative is an error.
    """
    vals, vecs = scipy.linalg.eigh(symmetrize(M))
    if vals.size and vals[0] < -tol:
        raise ModelError(f"matrix is not PSD (min eigenvalue {vals[0]:.3e})")
    vals = np.clip(vals, 0.0, None)
    return symmetrize((vecs * np.sqrt(vals)) @ vecs.T)


def numerical_rank(M: np.ndarray, rel: float = 1e-12) -> int:
    """SVD rank with tolerance n * sigma_max * rel"""
    if M.size == 0:
        return 0
    s = scipy.linalg.svdvals(M)
    if s[0] == 0.0:
        return 0
    tol = max(M.shape) * s[0] * rel
    return int(np.sum(s > tol))


def relative_residual(X: np.ndarray, Y: np.ndarray) -> float:
    """||X - Y||_F / (1 + ||Y||_F)"""
    return float(np.linalg.norm(X - Y) / (1.0 + np.linalg.norm(Y)))
