#!/usr/bin/env python3
"""
Swing-equation grid description and its linearization.

For generator i with inertia constant H_i, damping d_i and internal voltage E_i,

    (2 H_i / omega_s) delta_i'' + d_i delta_i' = P_i - sum_j E_i E_j |Y_ij| sin(delta_i - delta_j)

Around the operating point delta* this gives M dd'' + D dd' + L dd = dP with
L_ij = -|Y_ij| E_i E_j cos(delta*_i - delta*_j) off the diagonal and zero row sums.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

from ..errors import ModelError

logger = logging.getLogger(__name__)

SYM_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    H: np.ndarray            # inertia constants (s)
    d: np.ndarray            # damping (p.u.)
    E: np.ndarray            # internal voltages (p.u.)
    Y_abs: np.ndarray        # |Y_ij| (p.u.), diagonal ignored
    omega_s: float           # synchronous speed (rad/s)
    delta_star: np.ndarray   # operating-point angles (rad)
    omega_star: Optional[np.ndarray] = None
    name: str = ''
    source: str = ''

    def __post_init__(self):
        for key in ('H', 'd', 'E', 'delta_star'):
            object.__setattr__(self, key, np.asarray(getattr(self, key), dtype=float).reshape(-1))
        object.__setattr__(self, 'Y_abs', np.atleast_2d(np.asarray(self.Y_abs, dtype=float)))
        g = self.H.shape[0]
        if self.omega_star is None:
            object.__setattr__(self, 'omega_star', np.zeros(g))
        else:
            object.__setattr__(self, 'omega_star', np.asarray(self.omega_star, dtype=float).reshape(-1))

        for key in ('d', 'E', 'delta_star', 'omega_star'):
            if getattr(self, key).shape != (g,):
                raise ModelError(f"grid field '{key}' has {getattr(self, key).shape[0]} entries, expected {g}")
        if self.Y_abs.shape != (g, g):
            raise ModelError(f"Y_abs has shape {self.Y_abs.shape}, expected ({g}, {g})")
        for key in ('H', 'd', 'E', 'Y_abs', 'delta_star', 'omega_star'):
            if not np.all(np.isfinite(getattr(self, key))):
                raise ModelError(f"grid field '{key}' contains non-finite values")

        if np.any(self.H <= 0):
            raise ModelError("nonpositive inertia constant H")
        if np.any(self.d < 0):
            raise ModelError("negative damping d")
        if np.any(self.E <= 0):
            raise ModelError("nonpositive internal voltage E")
        if np.any(self.Y_abs < 0):
            raise ModelError("admittance magnitudes must be nonnegative")
        scale = max(1.0, float(np.abs(self.Y_abs).max()))
        if np.abs(self.Y_abs - self.Y_abs.T).max() > SYM_TOL * scale:
            raise ModelError("Y_abs is not symmetric")
        if not np.isfinite(self.omega_s) or self.omega_s <= 0:
            raise ModelError("omega_s must be positive")

    @property
    def generators(self) -> int:
        return self.H.shape[0]

    def to_dict(self) -> Dict:
        return {
            'name': self.name,
            'source': self.source,
            'generators': [
                {'H': float(h), 'd': float(d), 'E': float(e)} for h, d, e in zip(self.H, self.d, self.E)
            ],
            'Y_abs': self.Y_abs.tolist(),
            'omega_s': float(self.omega_s),
            'delta_star': self.delta_star.tolist(),
            'omega_star': self.omega_star.tolist(),
        }


@dataclass(frozen=True)
class LinearGridModel:
    M: np.ndarray
    D: np.ndarray
    L: np.ndarray
    A_c: np.ndarray = field(repr=False)
    B_c: np.ndarray = field(repr=False)


def grid_from_dict(data: Dict) -> GridSpec:
    try:
        generators = data['generators']
        return GridSpec(
            H=[gen['H'] for gen in generators],
            d=[gen.get('d', 0.0) for gen in generators],
            E=[gen['E'] for gen in generators],
            Y_abs=data['Y_abs'],
            omega_s=float(data['omega_s']),
            delta_star=data['delta_star'],
            omega_star=data.get('omega_star'),
            name=data.get('name', ''),
            source=data.get('source', ''),
        )
    except KeyError as e:
        raise ModelError(f"grid description is missing {e}")
    except (TypeError, ValueError) as e:
        raise ModelError(f"malformed grid description: {e}")


def load_grid(path: Union[str, Path]) -> GridSpec:
    """Read a grid JSON file (generators, Y_abs, omega_s, delta_star)"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Grid file not found: {path}")
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ModelError(f"Could not parse {path}: {e}")
    spec = grid_from_dict(data)
    logger.debug("Loaded grid '%s' with %d generators", spec.name or path.stem, spec.generators)
    return spec


def linearize(spec: GridSpec) -> LinearGridModel:
    """
    A_c = [[0, I], [-M^{-1} L, -M^{-1} D]],  B_c = [[0], [M^{-1}]]

    with state (delta - delta*, omega - omega*) and M = diag(2 H / omega_s).
    """
    g = spec.generators
    m = 2.0 * spec.H / spec.omega_s
    M = np.diag(m)
    D = np.diag(spec.d)

    angle_gap = spec.delta_star[:, None] - spec.delta_star[None, :]
    L = -spec.Y_abs * np.outer(spec.E, spec.E) * np.cos(angle_gap)
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=1))

    M_inv = np.diag(1.0 / m)
    I, Z = np.eye(g), np.zeros((g, g))
    A_c = np.block([[Z, I], [-M_inv @ L, -M_inv @ D]])
    B_c = np.vstack([Z, M_inv])
    return LinearGridModel(M=M, D=D, L=L, A_c=A_c, B_c=B_c)
