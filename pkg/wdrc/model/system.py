#!/usr/bin/env python3
"""
System model: dynamics x_{t+1} = A x_t + B u_t + Xi w_t with quadratic weights Q, R, Qf.
Handles JSON ingestion, dimension checks, symmetrization and definiteness validation.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

from ..config import Tolerances, DEFAULT_TOLERANCES
from ..errors import ModelError
from ..linalg import symmetrize, asymmetry, min_eig
from .validation import ValidationReport

logger = logging.getLogger(__name__)

MATRIX_KEYS = ('A', 'B', 'Xi', 'Q', 'R', 'Qf')
WEIGHT_KEYS = ('Q', 'R', 'Qf')


def _frozen(M) -> np.ndarray:
    arr = np.array(M, dtype=float)
    if arr.ndim != 2:
        raise ModelError(f"expected a matrix, got an array with {arr.ndim} dimension(s)")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemModel:
    """Time-invariant linear system with quadratic cost weights"""
    A: np.ndarray
    B: np.ndarray
    Xi: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    Qf: np.ndarray
    dt: Optional[float] = None
    metadata: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for key in MATRIX_KEYS:
            arr = _frozen(getattr(self, key))
            if not np.all(np.isfinite(arr)):
                raise ModelError(f"{key} contains non-finite entries")
            object.__setattr__(self, key, arr)

        n = self.A.shape[0]
        expected = {
            'A': (n, n),
            'B': (n, self.B.shape[1]),
            'Xi': (n, self.Xi.shape[1]),
            'Q': (n, n),
            'R': (self.B.shape[1], self.B.shape[1]),
            'Qf': (n, n),
        }
        for key, shape in expected.items():
            if getattr(self, key).shape != shape:
                raise ModelError(
                    f"dimension mismatch: {key} has shape {getattr(self, key).shape}, expected {shape}"
                )

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def k(self) -> int:
        return self.Xi.shape[1]

    @property
    def BRB(self) -> np.ndarray:
        """B R^{-1} B^T"""
        return symmetrize(self.B @ np.linalg.solve(self.R, self.B.T))

    def W(self, lam: float) -> np.ndarray:
        """B R^{-1} B^T - (1/lambda) Xi Xi^T"""
        return symmetrize(self.BRB - (self.Xi @ self.Xi.T) / lam)

    def to_dict(self) -> Dict:
        data = {key: getattr(self, key).tolist() for key in MATRIX_KEYS}
        if self.dt is not None:
            data['dt'] = self.dt
        return data


def validate_model(model: SystemModel, tolerances: Tolerances = DEFAULT_TOLERANCES) -> ValidationReport:
    """
    Check symmetry and definiteness of the cost weights.

    Margins are smallest eigenvalues (of the symmetric parts) and relative
    asymmetries. Failures are recorded, never raised.
    """
    report = ValidationReport()

    for key in WEIGHT_KEYS:
        res = asymmetry(getattr(model, key))
        report.add(f"{key} symmetric", res <= tolerances.sym_tol, res,
                   '' if res <= tolerances.sym_tol else f"{key} not symmetric")

    for key in ('Q', 'Qf'):
        M = getattr(model, key)
        margin = min_eig(M)
        ok = margin >= -tolerances.psd_tol(float(np.trace(M)))
        report.add(f"{key} PSD", ok, margin, '' if ok else f"{key} not PSD")

    margin = min_eig(model.R)
    ok = margin > tolerances.pd_tol
    report.add("R PD", ok, margin, '' if ok else "R not positive definite")

    return report


def model_from_dict(data: Dict, tolerances: Tolerances = DEFAULT_TOLERANCES) -> SystemModel:
    """Build and validate a SystemModel from a JSON-like mapping"""
    missing = [key for key in MATRIX_KEYS if key not in data]
    if missing:
        raise ModelError(f"model is missing keys: {', '.join(missing)}")

    arrays = {}
    for key in MATRIX_KEYS:
        try:
            arrays[key] = np.array(data[key], dtype=float)
        except (TypeError, ValueError):
            raise ModelError(f"{key} is not a rectangular array of numbers")
        if arrays[key].ndim != 2:
            raise ModelError(f"{key} must be an array of arrays")

    for key in WEIGHT_KEYS:
        M = arrays[key]
        if M.shape[0] == M.shape[1]:
            res = asymmetry(M)
            if res > tolerances.sym_tol:
                raise ModelError(f"{key} not symmetric (relative asymmetry {res:.3e})")
            arrays[key] = symmetrize(M)

    dt = data.get('dt')
    model = SystemModel(dt=float(dt) if dt is not None else None, **arrays)

    report = validate_model(model, tolerances)
    if not report.passed:
        raise ModelError('; '.join(check.message for check in report.failures()))
    return model


def load_model(path: Union[str, Path], tolerances: Tolerances = DEFAULT_TOLERANCES) -> SystemModel:
    """Load a model JSON file with keys A, B, Xi, Q, R, Qf (and optional dt)"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Model file not found: {path}")
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ModelError(f"Could not parse {path}: {e}")
    if not isinstance(data, dict):
        raise ModelError(f"{path} must contain a JSON object")

    model = model_from_dict(data, tolerances)
    logger.debug("Loaded model %s (n=%d, m=%d, k=%d)", path, model.n, model.m, model.k)
    return model


def save_model(model: SystemModel, path: Union[str, Path]) -> None:
    """Write a model as JSON; floats keep full precision"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(model.to_dict(), f, indent=2)
