"""Shared test helpers."""

from __future__ import annotations

import numpy as np
import pytest


def random_connected_adjacency(rng: np.random.Generator, n: int,
                               weighted: bool = False) -> np.ndarray:
    """Random symmetric adjacency guaranteed connected (spanning chain plus
    random extra edges)."""
    W = np.zeros((n, n))
    order = rng.permutation(n)
    for a, b in zip(order, order[1:]):
        W[a, b] = W[b, a] = rng.uniform(0.5, 2.0) if weighted else 1.0
    extra = rng.random((n, n)) < 0.35
    for i in range(n):
        for j in range(i + 1, n):
            if extra[i, j] and W[i, j] == 0:
                W[i, j] = W[j, i] = rng.uniform(0.5, 2.0) if weighted else 1.0
    return W


def floyd_warshall_reference(W: np.ndarray) -> np.ndarray:
    """Independent all-pairs shortest-path oracle."""
    n = W.shape[0]
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    for i in range(n):
        for j in range(n):
            if i != j and W[i, j] > 0:
                dist[i, j] = W[i, j]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if dist[i, k] + dist[k, j] < dist[i, j]:
                    dist[i, j] = dist[i, k] + dist[k, j]
    return dist


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
