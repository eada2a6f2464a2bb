"""Shared fixtures and random-system helpers for the wdrc tests."""

import numpy as np
import pytest

from wdrc.model import SystemModel, normalize_samples
from wdrc.solvers import is_feasible


def scalar_model(Qf: float = 0.0) -> SystemModel:
    """A = B = Xi = Q = R = 1"""
    one = [[1.0]]
    return SystemModel(A=one, B=one, Xi=one, Q=one, R=one, Qf=[[Qf]])


def random_system(rng: np.random.Generator, n: int = 3, m: int = 2, k: int = 2,
                  radius: float = 1.05) -> SystemModel:
    """
    Random model with nonsingular A of the given spectral radius, positive
    definite Q (so (A, sqrt Q) is observable) and Xi = B G, which keeps W PSD
    for large enough penalties.
    """
    A = rng.normal(size=(n, n))
    A *= radius / np.max(np.abs(np.linalg.eigvals(A)))
    B = rng.normal(size=(n, m))
    Xi = B @ (0.5 * rng.normal(size=(m, k)))
    C = rng.normal(size=(n, n))
    Q = C.T @ C / n + 0.1 * np.eye(n)
    Q = 0.5 * (Q + Q.T)
    D = rng.normal(size=(m, m))
    R = D.T @ D / m + 0.5 * np.eye(m)
    R = 0.5 * (R + R.T)
    return SystemModel(A=A, B=B, Xi=Xi, Q=Q, R=R, Qf=Q)


def random_samples(rng: np.random.Generator, k: int, N: int = 4, std: float = 0.3):
    return normalize_samples(rng.normal(0.0, std, size=(N, k)))


def feasible_lambda(model: SystemModel, factor: float = 2.0) -> float:
    """factor times the first power of two that is feasible in infinite mode"""
    lam = 1.0
    while not is_feasible(model, lam):
        lam *= 2.0
    return factor * lam


@pytest.fixture
def scalar():
    return scalar_model()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Keep ~/.wdrc and $WDRC_OUT out of the tests"""
    monkeypatch.setenv('WDRC_HOME', str(tmp_path / 'wdrc_home'))
    monkeypatch.delenv('WDRC_OUT', raising=False)
