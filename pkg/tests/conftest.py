"""Shared fixtures and oracle helpers for the test suite."""

import numpy as np
import pytest

from cbqoa import Max3SatInstance, MaxBisectionInstance


def dense_unitary(hermitian: np.ndarray, t: float) -> np.ndarray:
    """e^{iHt} for a real symmetric matrix, via eigendecomposition."""
    evals, evecs = np.linalg.eigh(hermitian)
    return (evecs * np.exp(1j * evals * t)) @ evecs.conj().T


def random_state(rng: np.random.Generator, size: int) -> np.ndarray:
    state = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return state / np.linalg.norm(state)


def random_feasible_state(rng: np.random.Generator, size: int, support: np.ndarray) -> np.ndarray:
    state = np.zeros(size, dtype=np.complex128)
    state[support] = rng.standard_normal(support.size) + 1j * rng.standard_normal(support.size)
    return state / np.linalg.norm(state)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def single_clause():
    return Max3SatInstance(num_vars=3, clauses=((1, 2, 3, 1.0),))


@pytest.fixture
def single_edge():
    return MaxBisectionInstance(num_vertices=2, edges=((1, 2, 1.0),))


def small_bisection(rng: np.random.Generator, n: int = 6, edge_prob: float = 0.6):
    edges = tuple(
        (a, b, float(rng.uniform(-1, 1)))
        for a in range(1, n + 1)
        for b in range(a + 1, n + 1)
        if rng.random() < edge_prob
    )
    if not edges:
        edges = ((1, 2, 1.0),)
    return MaxBisectionInstance(num_vertices=n, edges=edges)


def small_3sat(rng: np.random.Generator, n: int = 6, num_clauses: int = 12):
    clauses = []
    for _ in range(num_clauses):
        variables = rng.choice(n, size=3, replace=False) + 1
        negate = rng.integers(0, 2, size=3)
        labels = [int(v + n) if neg else int(v) for v, neg in zip(variables, negate)]
        clauses.append((*labels, float(rng.uniform(0.1, 1.0))))
    return Max3SatInstance(num_vars=n, clauses=tuple(clauses))
