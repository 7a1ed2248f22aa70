"""Laplacian-based layouts.

Static spectral layout (plain and degree-normalized), the grouping-
regularized eigen layout, the blended-Laplacian baseline, and the
dynamic variant that adds a temporal penalty and therefore needs an
equality-constrained solve instead of an eigendecomposition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse
from scipy.sparse.csgraph import connected_components

from .errors import DataError, NumericalError
from .layout import Layout, align_to_reference
from .numerics import gen_eig_smallest, minimize_eq_constrained, sym_eig_smallest


@dataclass(frozen=True)
class LaplacianPair:
    """Graph Laplacian L = D - W with its diagonal degree matrix."""

    L: np.ndarray
    D: np.ndarray


def laplacian(W: np.ndarray) -> LaplacianPair:
    W = np.asarray(W, dtype=float)
    D = np.diag(W.sum(axis=1))
    return LaplacianPair(L=D - W, D=D)


def energy(X: np.ndarray, L: np.ndarray) -> float:
    """Quadratic layout energy tr(X^T L X); equal to half the weighted sum
    of squared edge lengths."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return float(np.trace(X.T @ L @ X))


def _require_connected(W: np.ndarray, what: str) -> None:
    n_comp, _ = connected_components(scipy.sparse.csr_matrix(W), directed=False)
    if n_comp > 1:
        raise DataError(f"{what} needs a connected graph; found {n_comp} components")


def _scaled_eig_layout(L: np.ndarray, D: np.ndarray, s: int, normalized: bool) -> np.ndarray:
    n = L.shape[0]
    if s + 1 > n:
        raise DataError(f"need at least {s + 1} nodes for a {s}-D spectral layout, got {n}")
    if normalized:
        res = gen_eig_smallest(L, D, s + 1)
        scale = np.sqrt(np.trace(D))
    else:
        res = sym_eig_smallest(L, s + 1)
        scale = np.sqrt(n)
    return scale * res.vectors[:, 1:s + 1]


def spectral_layout(W: np.ndarray, s: int, normalized: bool = True) -> Layout:
    """Static layout from the s smallest nontrivial (generalized)
    Laplacian eigenvectors, scaled so the layout has unit (degree-)
    weighted variance per dimension."""
    W = np.asarray(W, dtype=float)
    _require_connected(W, "spectral layout")
    lap = laplacian(W)
    X = _scaled_eig_layout(lap.L, lap.D, s, normalized)
    return Layout(X=X, Y=np.zeros((0, s)))


@dataclass(frozen=True)
class AugmentedGllSystem:
    """Adjacency augmented with group-representative nodes tied to their
    members by edges of weight alpha."""

    W_aug: np.ndarray
    L_aug: np.ndarray
    D_aug: np.ndarray


def augment_gll(W: np.ndarray, C: np.ndarray, alpha: float) -> AugmentedGllSystem:
    W = np.asarray(W, dtype=float)
    C = np.asarray(C, dtype=float)
    n, k = C.shape
    if W.shape != (n, n):
        raise DataError(f"W shape {W.shape} does not match membership rows {n}")
    W_aug = np.zeros((n + k, n + k))
    W_aug[:n, :n] = W
    W_aug[:n, n:] = alpha * C
    W_aug[n:, :n] = alpha * C.T
    lap = laplacian(W_aug)
    return AugmentedGllSystem(W_aug=W_aug, L_aug=lap.L, D_aug=lap.D)


def centering_matrix(D: np.ndarray) -> np.ndarray:
    """M = D - D 1 1^T D / tr(D); the quadratic form x^T M x / tr(D) is the
    degree-weighted variance of x."""
    D = np.asarray(D, dtype=float)
    d = np.diagonal(D)
    total = d.sum()
    if total <= 0:
        raise DataError("centering needs positive total degree")
    return np.diag(d) - np.outer(d, d) / total


def ccdr_layout(W: np.ndarray, C: np.ndarray, alpha: float, s: int,
                normalized: bool = True) -> Layout:
    """Grouping-regularized eigen layout: spectral layout of the augmented
    graph, split back into node and representative coordinates."""
    C = np.asarray(C, dtype=float)
    n, k = C.shape
    system = augment_gll(W, C, alpha)
    _require_connected(system.W_aug, "grouping-regularized spectral layout")
    X_aug = _scaled_eig_layout(system.L_aug, system.D_aug, s, normalized)
    return Layout(X=X_aug[:n], Y=X_aug[n:])


def bfp_layout(lap_prev: LaplacianPair, lap_curr: LaplacianPair, lam: float,
               X_prev: np.ndarray | None, s: int, normalized: bool = True) -> Layout:
    """Spectral layout of the blended Laplacian lam*L[t-1] + (1-lam)*L[t],
    sign/axis aligned to the previous layout when one is given."""
    if not 0.0 <= lam <= 1.0:
        raise DataError(f"blend weight must be in [0, 1], got {lam}")
    L = lam * lap_prev.L + (1.0 - lam) * lap_curr.L
    D = lam * lap_prev.D + (1.0 - lam) * lap_curr.D
    W_blend = D - L
    _require_connected(W_blend, "blended-Laplacian layout")
    X = _scaled_eig_layout(L, D, s, normalized)
    if X_prev is not None:
        mask = np.any(np.asarray(X_prev) != 0, axis=1)
        X = align_to_reference(X, np.asarray(X_prev, dtype=float), mask)
    return Layout(X=X, Y=np.zeros((0, s)))


def bfp_lambda_select(candidates, score) -> float:
    """Pick the blend weight minimizing the supplied composite cost;
    ties go to the smaller value."""
    lams = sorted(candidates)
    if not lams:
        raise DataError("empty blend-weight grid")
    best_lam, best_score = None, np.inf
    for lam in lams:
        value = float(score(lam))
        if value < best_score:
            best_lam, best_score = lam, value
    return best_lam


def dgll_objective(X_aug: np.ndarray, L_aug: np.ndarray, E_aug: np.ndarray,
                   beta: float, X_prev_aug: np.ndarray) -> float:
    """tr(X^T L X) + beta [tr(X^T E X) - 2 tr(X^T E X[t-1])]; the constant
    temporal term in X[t-1] alone is dropped."""
    X = np.atleast_2d(np.asarray(X_aug, dtype=float))
    Xp = np.atleast_2d(np.asarray(X_prev_aug, dtype=float))
    value = float(np.trace(X.T @ L_aug @ X))
    if beta != 0:
        value += beta * float(np.trace(X.T @ E_aug @ X) - 2.0 * np.trace(X.T @ E_aug @ Xp))
    return value


class _DgllProblem:
    """Precomputed pieces of one constrained solve; all derivative formulas
    live here so the public derivative op and the solver share one source."""

    def __init__(self, L_aug, E_aug, beta, X_prev_aug, M, target, s):
        if s not in (1, 2):
            raise DataError(
                f"constrained dynamic layout supports 1-D and 2-D only, got s={s}")
        self.m = L_aug.shape[0]
        self.s = s
        self.L = L_aug
        self.beta = beta
        self.M = M
        self.target = target
        self.A = 2.0 * L_aug + 2.0 * beta * E_aug
        self.beta_E = beta * E_aug
        Xp = np.atleast_2d(np.asarray(X_prev_aug, dtype=float))
        self.beta_E_Xp = self.beta_E @ Xp
        self.anchor = 2.0 * self.beta_E_Xp

    def unflatten(self, x: np.ndarray) -> np.ndarray:
        return x.reshape(self.s, self.m).T

    def f(self, x: np.ndarray) -> float:
        X = self.unflatten(x)
        return float(np.sum(X * (self.L @ X)) + np.sum(X * (self.beta_E @ X))
                     - 2.0 * np.sum(X * self.beta_E_Xp))

    def grad(self, x: np.ndarray) -> np.ndarray:
        X = self.unflatten(x)
        return (self.A @ X - self.anchor).T.reshape(-1)

    def g(self, x: np.ndarray) -> np.ndarray:
        X = self.unflatten(x)
        if self.s == 1:
            x1 = X[:, 0]
            return np.array([x1 @ (self.M @ x1) - self.target])
        x1, x2 = X[:, 0], X[:, 1]
        Mx1, Mx2 = self.M @ x1, self.M @ x2
        return np.array([x1 @ Mx1 - self.target, x2 @ Mx2 - self.target, x2 @ Mx1])

    def jac(self, x: np.ndarray) -> np.ndarray:
        X = self.unflatten(x)
        m = self.m
        if self.s == 1:
            return (2.0 * (self.M @ X[:, 0]))[None, :]
        Mx1, Mx2 = self.M @ X[:, 0], self.M @ X[:, 1]
        J = np.zeros((3, 2 * m))
        J[0, :m] = 2.0 * Mx1
        J[1, m:] = 2.0 * Mx2
        J[2, :m] = Mx2
        J[2, m:] = Mx1
        return J

    def hess(self, mu: np.ndarray) -> np.ndarray:
        m = self.m
        if self.s == 1:
            return self.A + 2.0 * mu[0] * self.M
        H = np.zeros((2 * m, 2 * m))
        H[:m, :m] = self.A + 2.0 * mu[0] * self.M
        H[m:, m:] = self.A + 2.0 * mu[1] * self.M
        H[:m, m:] = mu[2] * self.M
        H[m:, :m] = mu[2] * self.M
        return H


def dgll_derivatives(X_aug, L_aug, E_aug, beta, X_prev_aug, M, mu, target):
    """Closed-form gradient, constraints, constraint Jacobian, and
    Lagrangian Hessian of the dynamic layout problem in 1-D or 2-D.

    ``target`` is the required (degree-weighted) scatter per dimension:
    tr(D_aug) for the normalized problem, n+k for the plain one. In 2-D the
    constraint vector has three rows (two variance rows minus ``target``,
    one covariance row); in 1-D just the variance row.
    """
    X = np.atleast_2d(np.asarray(X_aug, dtype=float))
    problem = _DgllProblem(L_aug, E_aug, beta, X_prev_aug, M, target, X.shape[1])
    x = X.T.reshape(-1)
    return problem.grad(x), problem.g(x), problem.jac(x), problem.hess(np.asarray(mu, dtype=float))


@dataclass(frozen=True)
class DgllSolution:
    """Feasible solution of the dynamic Laplacian layout problem."""

    X_aug: np.ndarray
    n_nodes: int
    objective: float
    kkt_residual: float
    constraint_residual: float
    restarts_used: int

    @property
    def layout(self) -> Layout:
        return Layout(X=self.X_aug[:self.n_nodes], Y=self.X_aug[self.n_nodes:])


def _feasible_random_start(rng, m: int, s: int, M: np.ndarray, target: float) -> np.ndarray:
    # Whiten a gaussian draw so X^T M X = target * I exactly.
    for _ in range(20):
        X = rng.standard_normal((m, s))
        G = X.T @ M @ X
        vals, vecs = np.linalg.eigh(G)
        if np.min(vals) > 1e-10 * np.max(vals):
            B = vecs @ np.diag(vals**-0.5) @ vecs.T * np.sqrt(target)
            return X @ B
    raise NumericalError("could not draw a feasible random start")


def dgll_layout(W, C, alpha, beta, E, X_prev_aug, s, normalized: bool = True,
                restarts: int = 0, rng=None, tol: float = 1e-8) -> DgllSolution:
    """Dynamic Laplacian layout for one time step.

    Minimizes the blended quadratic objective subject to the centered
    scatter constraints, starting from the previous augmented layout plus
    any random restarts; the lowest-objective feasible point wins. When
    there is no temporal anchor (beta = 0 or nothing persisted, e.g. the
    first step) the objective has no linear term and the scaled eigenvector
    solution is returned directly.
    """
    W = np.asarray(W, dtype=float)
    C = np.asarray(C, dtype=float)
    n, k = C.shape
    if s not in (1, 2):
        raise DataError(f"constrained dynamic layout supports 1-D and 2-D only, got s={s}")
    if n + k <= s:
        raise DataError(f"need more than {s} points for a {s}-D constrained layout")
    system = augment_gll(W, C, alpha)
    D_for_M = system.D_aug if normalized else np.eye(n + k)
    M = centering_matrix(D_for_M)
    target = float(np.trace(D_for_M))
    E_aug = np.zeros((n + k, n + k))
    E_aug[:n, :n] = np.asarray(E, dtype=float)
    X_prev_aug = np.atleast_2d(np.asarray(X_prev_aug, dtype=float))

    no_anchor = beta == 0 or not np.any(np.diagonal(E_aug) > 0)
    if no_anchor:
        _require_connected(system.W_aug, "eigen solve of the dynamic layout problem")
        X = _scaled_eig_layout(system.L_aug, system.D_aug, s, normalized)
        grad, g, J, _ = dgll_derivatives(X, system.L_aug, E_aug, beta, X_prev_aug, M,
                                         np.zeros(3 if s == 2 else 1), target)
        mu, *_ = np.linalg.lstsq(J.T, -grad, rcond=None)
        kkt = float(np.max(np.abs(grad + J.T @ mu)))
        return DgllSolution(
            X_aug=X, n_nodes=n, objective=dgll_objective(X, system.L_aug, E_aug, beta, X_prev_aug),
            kkt_residual=kkt, constraint_residual=float(np.max(np.abs(g))), restarts_used=0,
        )

    m_pts = n + k
    problem = _DgllProblem(system.L_aug, E_aug, beta, X_prev_aug, M, target, s)

    starts = [X_prev_aug.T.reshape(-1)]
    if restarts > 0:
        rng = np.random.default_rng(rng)
        for _ in range(restarts):
            starts.append(_feasible_random_start(rng, m_pts, s, M, target).T.reshape(-1))

    best = None
    best_failed = None
    for x0 in starts:
        result = minimize_eq_constrained(problem.f, problem.grad, problem.g, problem.jac,
                                         lambda x, mu: problem.hess(mu), x0, tol=tol)
        if result.converged:
            value = problem.f(result.x)
            if best is None or value < best[0]:
                best = (value, result)
        elif best_failed is None or result.feasibility_residual < best_failed.feasibility_residual:
            best_failed = result
    if best is None:
        raise NumericalError(
            "constrained layout solver failed to converge on all starts "
            f"(best feasibility residual {best_failed.feasibility_residual:.3e})",
            best_iterate=problem.unflatten(best_failed.x),
        )
    value, result = best
    return DgllSolution(
        X_aug=problem.unflatten(result.x), n_nodes=n, objective=value,
        kkt_residual=result.kkt_residual, constraint_residual=result.feasibility_residual,
        restarts_used=len(starts) - 1,
    )
