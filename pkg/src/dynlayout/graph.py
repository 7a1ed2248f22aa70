"""Data model for time-indexed graph sequences.

A dynamic network is an ordered list of snapshots over a shared node
registry. Node identity across time is by external identifier; matrix row
order within a snapshot is ascending registry index. All types are
immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DataError


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.flags.writeable = False
    return a


class NodeRegistry:
    """Bijection between external node identifiers and dense indices.

    Indices are assigned in ascending lexicographic order of the
    identifiers, which makes registries (and everything derived from them)
    deterministic for a given id set.
    """

    def __init__(self, ids: Iterable[str]):
        self._ids: tuple[str, ...] = tuple(sorted(set(str(i) for i in ids)))
        self._index = {node_id: i for i, node_id in enumerate(self._ids)}
        if not self._ids:
            raise DataError("registry needs at least one node id")

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._index

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    def index_of(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise DataError(f"unknown node id {node_id!r}") from None

    def id_of(self, index: int) -> str:
        return self._ids[index]


def build_membership_matrix(labels: Sequence[Optional[int]], k: int) -> np.ndarray:
    """Build the n x k binary group membership matrix C.

    ``labels[i]`` is the group of node i in {1..k}, or None when unknown;
    unknown memberships yield all-zero rows.
    """
    if k < 0:
        raise DataError(f"group count must be >= 0, got {k}")
    n = len(labels)
    C = np.zeros((n, k))
    for i, lab in enumerate(labels):
        if lab is None:
            continue
        if not (1 <= lab <= k):
            raise DataError(f"label {lab} for node {i} outside {{1..{k}}}")
        C[i, lab - 1] = 1.0
    return C


def build_presence_matrix(active_t: Sequence[int], active_prev: Iterable[int]) -> np.ndarray:
    """Diagonal 0/1 matrix marking which of the current nodes were present
    at the previous time step, in the ordering of ``active_t``."""
    if len(active_t) == 0:
        raise DataError("active node set must be nonempty")
    prev = set(active_prev)
    e = np.array([1.0 if idx in prev else 0.0 for idx in active_t])
    return np.diag(e)


def validate_snapshot(W: np.ndarray) -> list[str]:
    """Return the list of violated adjacency-matrix invariants (empty if valid)."""
    W = np.asarray(W)
    violations: list[str] = []
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        return [f"matrix is not square: shape {W.shape}"]
    asym = np.argwhere(W != W.T)
    if asym.size:
        i, j = asym[0]
        violations.append(f"asymmetry at ({i + 1},{j + 1}): {W[i, j]} != {W[j, i]}")
    diag = np.flatnonzero(np.diagonal(W))
    if diag.size:
        violations.append(f"nonzero diagonal at index {diag[0] + 1}")
    neg = np.argwhere(W < 0)
    if neg.size:
        i, j = neg[0]
        violations.append(f"negative weight at ({i + 1},{j + 1}): {W[i, j]}")
    if not np.all(np.isfinite(W)):
        violations.append("non-finite entries")
    return violations


@dataclass(frozen=True)
class GroupAssignment:
    """Per-node group labeling with its 0/1 membership matrix."""

    labels: tuple[Optional[int], ...]
    k: int
    C: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        C = build_membership_matrix(self.labels, self.k)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "C", _freeze(C))

    def __eq__(self, other):
        return (
            isinstance(other, GroupAssignment)
            and self.k == other.k
            and self.labels == other.labels
        )

    __hash__ = None


@dataclass(frozen=True)
class Snapshot:
    """One time step: symmetric adjacency over the active nodes.

    ``active`` holds the registry indices present at ``t`` in ascending
    order; row/column i of ``W`` belongs to ``active[i]``.
    """

    t: int
    W: np.ndarray
    active: tuple[int, ...]
    groups: Optional[GroupAssignment] = None

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        active = tuple(self.active)
        if list(active) != sorted(set(active)):
            raise DataError(f"snapshot t={self.t}: active indices must be ascending and unique")
        violations = validate_snapshot(W)
        if violations:
            raise DataError(f"snapshot t={self.t}: " + "; ".join(violations))
        if W.shape[0] != len(active):
            raise DataError(
                f"snapshot t={self.t}: matrix size {W.shape[0]} != {len(active)} active nodes"
            )
        if self.groups is not None and len(self.groups.labels) != len(active):
            raise DataError(f"snapshot t={self.t}: group labels do not cover the active nodes")
        object.__setattr__(self, "W", _freeze(W))
        object.__setattr__(self, "active", active)

    @property
    def n(self) -> int:
        return len(self.active)


class DynamicNetwork:
    """Ordered snapshots plus the registry shared by all of them."""

    def __init__(self, registry: NodeRegistry, snapshots: Sequence[Snapshot]):
        snapshots = tuple(snapshots)
        if not snapshots:
            raise DataError("a dynamic network needs at least one snapshot")
        for expected, snap in enumerate(snapshots):
            if snap.t != expected:
                raise DataError(
                    f"snapshot times must be 0,1,2,...; found t={snap.t} at position {expected}"
                )
            for idx in snap.active:
                if not 0 <= idx < len(registry):
                    raise DataError(f"snapshot t={snap.t}: node index {idx} not in registry")
        self.registry = registry
        self.snapshots = snapshots

    def __len__(self) -> int:
        return len(self.snapshots)

    def presence(self, t: int) -> np.ndarray:
        """Presence matrix E for step t (who was active at t-1), in the
        node ordering of snapshot t."""
        active_prev: tuple[int, ...] = ()
        if t > 0:
            active_prev = self.snapshots[t - 1].active
        return build_presence_matrix(self.snapshots[t].active, active_prev)

    def truncated(self, T: int) -> "DynamicNetwork":
        """The same network restricted to its first T snapshots."""
        return DynamicNetwork(self.registry, self.snapshots[:T])
