#!/usr/bin/env python3
"""
Disturbance samples and their zero-mean normalization.

Solvers always work with zero-mean samples. The subtracted sample mean is kept
as `mean_shift` so simulations can add it back to empirical draws.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from ..errors import SampleError
from ..linalg import symmetrize

logger = logging.getLogger(__name__)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DisturbanceModel:
    """Empirical disturbance data: raw samples, mean shift, normalized samples, Sigma"""
    raw_samples: np.ndarray   # N x k
    mean_shift: np.ndarray    # k
    samples: np.ndarray       # N x k, zero mean
    Sigma: np.ndarray         # k x k

    @property
    def N(self) -> int:
        return self.samples.shape[0]

    @property
    def k(self) -> int:
        return self.samples.shape[1]

    @classmethod
    def zeros(cls, k: int, N: int = 1) -> 'DisturbanceModel':
        """N identical zero samples (deterministic disturbance channel)"""
        return normalize_samples(np.zeros((N, k)))

    def to_dict(self) -> dict:
        return {
            'N': self.N,
            'k': self.k,
            'mean_shift': self.mean_shift.tolist(),
            'Sigma': self.Sigma.tolist(),
        }


def normalize_samples(raw: Union[np.ndarray, Sequence[Sequence[float]]]) -> DisturbanceModel:
    """
    Subtract the sample mean and compute Sigma = (1/N) sum_i w_i w_i^T.

    Args:
        raw: N disturbance vectors of common length k (an N x k array)
    """
    try:
        rows = [np.atleast_1d(np.asarray(r, dtype=float)) for r in raw]
    except (TypeError, ValueError):
        raise SampleError("samples must be numeric vectors")
    if not rows:
        raise SampleError("empty sample set")
    lengths = {r.shape for r in rows}
    if len(lengths) != 1 or rows[0].ndim != 1:
        raise SampleError(f"inconsistent sample lengths: {sorted(len(r) for r in rows)}")

    W = np.vstack(rows)
    if not np.all(np.isfinite(W)):
        raise SampleError("samples contain non-finite values")

    mean = W.mean(axis=0)
    centered = W - mean
    # Re-center once more so the sum is zero to rounding
    centered = centered - centered.mean(axis=0)
    Sigma = symmetrize(centered.T @ centered / W.shape[0])

    return DisturbanceModel(
        raw_samples=_readonly(W),
        mean_shift=_readonly(mean),
        samples=_readonly(centered),
        Sigma=_readonly(Sigma),
    )


def _parse_row(row: Iterable[str]) -> Optional[list]:
    cells = [c.strip() for c in row]
    while cells and cells[-1] == '':
        cells.pop()
    if not cells:
        return None
    if '' in cells:
        raise SampleError(f"empty cell in column {cells.index('') + 1}")
    return [float(c) for c in cells]


def load_samples(path: Union[str, Path]) -> DisturbanceModel:
    """Read one disturbance vector per CSV row (header optional)"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Sample file not found: {path}")

    rows = []
    with open(path, 'r', newline='') as f:
        for line_no, row in enumerate(csv.reader(f), 1):
            try:
                values = _parse_row(row)
            except SampleError as e:
                raise SampleError(f"{path}:{line_no}: {e}")
            except ValueError:
                if line_no == 1 and not rows:
                    continue  # header
                raise SampleError(f"{path}:{line_no}: non-numeric value in {row}")
            if values is not None:
                rows.append(values)

    data = normalize_samples(rows)
    logger.debug("Loaded %d samples of dimension %d from %s", data.N, data.k, path)
    return data


def save_samples(samples: np.ndarray, path: Union[str, Path]) -> None:
    """Write raw samples as CSV with a w_1..w_k header"""
    samples = np.atleast_2d(samples)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow([f"w_{j + 1}" for j in range(samples.shape[1])])
        for row in samples:
            writer.writerow([f"{v:.17g}" for v in row])


def generate_samples(k: int, N: int, std: float, seed: int) -> np.ndarray:
    """Draw N raw samples from N(0, std^2 I_k) with a seeded generator"""
    if N < 1 or k < 1:
        raise SampleError("need N >= 1 and k >= 1")
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, std, size=(N, k))
