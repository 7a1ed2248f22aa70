"""Layout containers and eigen-layout post-processing."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class Layout:
    """Node coordinates X (n x s) plus group-representative coordinates
    Y (k x s, possibly empty)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.asarray(self.Y, dtype=float).reshape(-1, X.shape[1]) if np.size(self.Y) else \
            np.zeros((0, X.shape[1]))
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise DataError("layout coordinates must be finite")
        X.flags.writeable = False
        Y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dims(self) -> int:
        return self.X.shape[1]

    @property
    def stacked(self) -> np.ndarray:
        """[X; Y] as one (n+k) x s matrix."""
        return np.vstack([self.X, self.Y])


def align_to_reference(X: np.ndarray, ref: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Permute and sign-flip the columns of X to maximize trace alignment
    with a reference layout.

    Eigen-based layouts are only defined up to axis permutation and
    reflection; without this step their temporal cost is dominated by
    arbitrary sign flips. Rows where ``mask`` is False (e.g. nodes absent
    from the reference) are ignored when scoring.
    """
    X = np.asarray(X, dtype=float)
    ref = np.asarray(ref, dtype=float)
    s = X.shape[1]
    if ref.shape != X.shape:
        raise DataError(f"reference shape {ref.shape} does not match layout shape {X.shape}")
    rows = np.arange(X.shape[0]) if mask is None else np.flatnonzero(mask)
    A = X[rows].T @ ref[rows]
    best_score, best_perm = -np.inf, None
    for perm in itertools.permutations(range(s)):
        score = sum(abs(A[perm[b], b]) for b in range(s))
        if score > best_score:
            best_score, best_perm = score, perm
    signs = np.array([1.0 if A[best_perm[b], b] >= 0 else -1.0 for b in range(s)])
    return X[:, list(best_perm)] * signs
