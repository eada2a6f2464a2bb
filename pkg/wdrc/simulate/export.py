#!/usr/bin/env python3
"""
Batch statistics and file export.

All floats are written with 17 significant digits; JSON documents carry the
"wdrc/1" schema tag. Nothing time- or host-dependent is written, so identical
inputs give byte-identical files.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

import numpy as np

from .. import SCHEMA
from .rollout import Trajectory

PathLike = Union[str, Path]

BOX_FIELDS = ('min', 'q1', 'median', 'q3', 'max', 'mean')


@dataclass(frozen=True)
class BoxStats:
    """Per-time box-plot statistics over trials"""
    min: np.ndarray
    q1: np.ndarray
    median: np.ndarray
    q3: np.ndarray
    max: np.ndarray
    mean: np.ndarray

    @property
    def iqr(self) -> np.ndarray:
        return self.q3 - self.q1

    def rows(self) -> List[List[float]]:
        return [[t] + [float(getattr(self, f)[t]) for f in BOX_FIELDS] for t in range(len(self.mean))]

    def to_dict(self) -> Dict:
        return {f: getattr(self, f).tolist() for f in BOX_FIELDS}


def box_stats(values) -> BoxStats:
    """values: trials x times"""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0], axis=0)
    return BoxStats(
        min=values.min(axis=0),
        q1=q1,
        median=median,
        q3=q3,
        max=values.max(axis=0),
        mean=values.mean(axis=0),
    )


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _to_builtin(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def write_json(payload: Dict, path: PathLike) -> Path:
    """Write a schema-tagged JSON document"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {'schema': SCHEMA, **payload}
    with open(path, 'w') as f:
        json.dump(document, f, indent=2, default=_to_builtin)
        f.write('\n')
    return path


def write_rows(header: Sequence[str], rows: Iterable[Sequence], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_trajectory_csv(traj: Trajectory, path: PathLike) -> Path:
    """Columns t, x_1..x_n, u_1..u_m, w_1..w_k; the last row holds x_T only"""
    n, m, k = traj.states.shape[1], traj.inputs.shape[1], traj.disturbances.shape[1]
    header = (['t'] + [f"x_{i + 1}" for i in range(n)] + [f"u_{i + 1}" for i in range(m)]
              + [f"w_{i + 1}" for i in range(k)])
    rows = []
    for t in range(traj.steps + 1):
        if t < traj.steps:
            rows.append([t, *traj.states[t], *traj.inputs[t], *traj.disturbances[t]])
        else:
            rows.append([t, *traj.states[t]] + [float('nan')] * (m + k))
    return write_rows(header, rows, path)


def write_box_stats_csv(stats: Dict[str, BoxStats], path: PathLike) -> Path:
    """One row per (series, t) with the box-plot fields"""
    rows = []
    for name, box in stats.items():
        for row in box.rows():
            rows.append([name] + row)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['series', 't', *BOX_FIELDS])
        for row in rows:
            writer.writerow([row[0]] + [_fmt(v) for v in row[1:]])
    return path
