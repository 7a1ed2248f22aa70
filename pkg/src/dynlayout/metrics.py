"""Layout-quality costs.

All costs are normalized to be scale-free in the network size: stress by
the number of positive-weight pairs, energy by the total degree, centroid
cost by the number of labeled nodes, temporal cost by the number of
persisting nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .gll import energy
from .mds import stress


def static_cost_mds(X: np.ndarray, delta: np.ndarray, V: np.ndarray) -> float:
    """Stress divided by the number of unordered pairs with positive MDS
    weight."""
    V = np.asarray(V, dtype=float)
    pairs = np.count_nonzero(np.triu(V, 1) > 0)
    if pairs == 0:
        return 0.0
    return stress(X, delta, V) / pairs


def static_cost_gll(X: np.ndarray, L: np.ndarray, D: np.ndarray) -> float:
    """Layout energy divided by the total degree."""
    total = float(np.trace(D))
    if total == 0:
        return 0.0
    return energy(X, L) / total


def centroid_cost(X: np.ndarray, labels: Sequence[Optional[int]]) -> Optional[float]:
    """Mean squared distance of labeled nodes to their group centroid.

    Centroids are arithmetic means of the member positions (not the
    representative points). Returns None when no node is labeled.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    labeled = [i for i, lab in enumerate(labels) if lab is not None]
    if not labeled:
        return None
    total = 0.0
    for group in sorted({labels[i] for i in labeled}):
        members = [i for i in labeled if labels[i] == group]
        centroid = X[members].mean(axis=0)
        total += float(np.sum((X[members] - centroid) ** 2))
    return total / len(labeled)


def temporal_cost(X: np.ndarray, X_prev: np.ndarray, E: np.ndarray) -> float:
    """Mean squared displacement of the nodes present at both steps;
    0 when no node persists."""
    e = np.diagonal(np.asarray(E, dtype=float))
    count = e.sum()
    if count == 0:
        return 0.0
    moved = np.atleast_2d(np.asarray(X, dtype=float)) - np.atleast_2d(np.asarray(X_prev, dtype=float))
    return float(np.sum(e * np.einsum("ij,ij->i", moved, moved)) / count)


def cumulative_movement(trajectory: Sequence[Optional[np.ndarray]]) -> float:
    """Total squared per-step displacement of one node over the steps where
    it persists (both endpoints present)."""
    total = 0.0
    for prev, cur in zip(trajectory, list(trajectory)[1:]):
        if prev is None or cur is None:
            continue
        diff = np.atleast_1d(np.asarray(cur, dtype=float)) - np.atleast_1d(np.asarray(prev, dtype=float))
        total += float(diff @ diff)
    return total


@dataclass(frozen=True)
class StepCosts:
    """Per-step cost record; temporal cost is None at the first step and
    centroid cost is None when no grouping information exists.

    For majorization-based methods ``stress_trace`` keeps the per-iteration
    objective values (not serialized to CSV)."""

    t: int
    static_cost: float
    centroid_cost: Optional[float]
    temporal_cost: Optional[float]
    iterations: Optional[int] = None
    stress_trace: Optional[tuple[float, ...]] = None


@dataclass
class CostReport:
    """Cost trace of one layout run plus the parameters that produced it."""

    method: str
    params: dict = field(default_factory=dict)
    steps: list[StepCosts] = field(default_factory=list)

    def _mean(self, values) -> float:
        vals = [v for v in values if v is not None]
        return float(np.mean(vals)) if vals else float("nan")

    @property
    def mean_static(self) -> float:
        return self._mean(s.static_cost for s in self.steps)

    @property
    def mean_centroid(self) -> float:
        return self._mean(s.centroid_cost for s in self.steps)

    @property
    def mean_temporal(self) -> float:
        return self._mean(s.temporal_cost for s in self.steps)

    @property
    def mean_iterations(self) -> float:
        return self._mean(s.iterations for s in self.steps)
