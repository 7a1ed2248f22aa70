"""Shared dense numerical kernels.

Everything here is dense: target problems are a few hundred unknowns at
most, where Cholesky / full symmetric eigendecomposition are the right
tools.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import DataError, NotPositiveDefiniteError


@dataclass(frozen=True)
class SpdFactorization:
    """Opaque Cholesky factor of a symmetric positive-definite matrix,
    reusable across right-hand sides."""

    c_and_lower: tuple


def spd_factor(A: np.ndarray) -> SpdFactorization:
    """Cholesky-factor a symmetric positive-definite matrix.

    Raises NotPositiveDefiniteError otherwise, which upstream signals a
    disconnected or un-anchored system.
    """
    A = np.asarray(A, dtype=float)
    try:
        c, lower = scipy.linalg.cho_factor(A)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {exc}") from None
    return SpdFactorization(c_and_lower=(c, lower))


def spd_solve(factor: SpdFactorization, b: np.ndarray) -> np.ndarray:
    """Back-substitute a previously computed Cholesky factor."""
    return scipy.linalg.cho_solve(factor.c_and_lower, b)


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    # Flip each eigenvector so its largest-magnitude entry is positive;
    # keeps eigen-based layouts reproducible across runs.
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        idx = int(np.argmax(np.abs(col)))
        if col[idx] < 0:
            out[:, j] = -col
    return out


@dataclass(frozen=True)
class EigenResult:
    """Ascending eigenvalues with matching (D-)orthonormal eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray


def sym_eig_smallest(A: np.ndarray, m: int) -> EigenResult:
    """The m smallest eigenpairs of a symmetric matrix, ascending."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if m > n:
        raise DataError(f"requested {m} eigenpairs from a {n}x{n} matrix")
    values, vectors = scipy.linalg.eigh(A)
    return EigenResult(values=values[:m], vectors=_canonical_signs(vectors[:, :m]))


def gen_eig_smallest(L: np.ndarray, D: np.ndarray, m: int) -> EigenResult:
    """The m smallest generalized eigenpairs of (L, D) for diagonal positive
    D, via the symmetric transform D^{-1/2} L D^{-1/2}.

    Returned vectors are D-orthonormal: U^T D U = I.
    """
    L = np.asarray(L, dtype=float)
    D = np.asarray(D, dtype=float)
    n = L.shape[0]
    if m > n:
        raise DataError(f"requested {m} eigenpairs from a {n}x{n} matrix")
    d = np.diagonal(D)
    if np.any(d <= 0):
        raise DataError("generalized eigenproblem needs strictly positive degrees")
    d_isqrt = 1.0 / np.sqrt(d)
    B = (L * d_isqrt[:, None]) * d_isqrt[None, :]
    B = (B + B.T) / 2.0
    values, vectors = scipy.linalg.eigh(B)
    U = vectors[:, :m] * d_isqrt[:, None]
    return EigenResult(values=values[:m], vectors=_canonical_signs(U))


@dataclass(frozen=True)
class EqConstrainedResult:
    """Outcome of an equality-constrained minimization.

    ``converged`` is False when the iteration budget ran out; ``x`` then
    carries the best iterate found (never silently labeled converged).
    """

    x: np.ndarray
    kkt_residual: float
    feasibility_residual: float
    converged: bool
    iterations: int
    multipliers: np.ndarray


def _recover_multipliers(grad: np.ndarray, J: np.ndarray) -> tuple[np.ndarray, float]:
    # Least squares on the KKT stationarity system grad f + J^T mu = 0.
    mu, *_ = np.linalg.lstsq(J.T, -grad, rcond=None)
    kkt = float(np.max(np.abs(grad + J.T @ mu))) if grad.size else 0.0
    return mu, kkt


def _newton_step(H: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # Solve H p = rhs with increasing diagonal regularization until the
    # factorization succeeds and the step is a descent direction.
    n = H.shape[0]
    tau = 0.0
    base = max(1.0, float(np.max(np.abs(np.diagonal(H)))))
    for _ in range(40):
        try:
            c = scipy.linalg.cho_factor(H + tau * np.eye(n))
            p = scipy.linalg.cho_solve(c, rhs)
            return p
        except scipy.linalg.LinAlgError:
            tau = max(2.0 * tau, 1e-10 * base)
    return np.linalg.lstsq(H, rhs, rcond=None)[0]


def minimize_eq_constrained(
    f: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    jac: Callable[[np.ndarray], np.ndarray],
    hess: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x0: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> EqConstrainedResult:
    """Minimize f(x) subject to g(x) = 0 by an augmented-Lagrangian method
    with Newton inner iterations and a final Newton-KKT polish.

    ``hess(x, mu)`` must return the Hessian of the Lagrangian
    f + mu^T g at (x, mu); ``max_iter`` bounds each inner Newton phase.
    Returns a converged result with max(|g|) <= tol and stationarity
    residual <= tol; an exhausted iteration budget yields a non-converged
    result carrying the best iterate, never an exception.
    """
    x = np.asarray(x0, dtype=float).copy()
    m = np.atleast_1d(g(x)).shape[0]
    mu = np.zeros(m)
    rho = 10.0
    total_iters = 0
    best = (np.inf, x.copy(), mu.copy())

    def check(xc: np.ndarray) -> tuple[float, float, np.ndarray]:
        gv = np.atleast_1d(g(xc))
        feas = float(np.max(np.abs(gv))) if gv.size else 0.0
        mu_ls, kkt = _recover_multipliers(np.asarray(grad(xc)), np.atleast_2d(jac(xc)))
        return feas, kkt, mu_ls

    prev_feas = np.inf
    for _outer in range(30):
        # Inner: Newton with backtracking on the augmented Lagrangian
        # L_A = f + mu^T g + rho/2 |g|^2.
        for _inner in range(max_iter):
            total_iters += 1
            gv = np.atleast_1d(g(x))
            J = np.atleast_2d(jac(x))
            mu_eff = mu + rho * gv
            grad_la = np.asarray(grad(x)) + J.T @ mu_eff
            grad_norm = float(np.max(np.abs(grad_la)))
            if grad_norm <= max(0.1 * tol, 1e-3 * tol * rho, 1e-12):
                break
            H_la = hess(x, mu_eff) + rho * (J.T @ J)
            p = _newton_step(H_la, -grad_la)

            def la(z: np.ndarray) -> float:
                gz = np.atleast_1d(g(z))
                return float(f(z) + mu @ gz + 0.5 * rho * (gz @ gz))

            la0 = la(x)
            slope = float(grad_la @ p)
            step = 1.0
            for _ in range(60):
                xn = x + step * p
                if la(xn) <= la0 + 1e-4 * step * slope:
                    x = xn
                    break
                step *= 0.5
            else:
                break  # line search stalled; hand back to the outer loop

        gv = np.atleast_1d(g(x))
        feas = float(np.max(np.abs(gv))) if gv.size else 0.0
        if feas < best[0]:
            best = (feas, x.copy(), mu.copy())
        mu = mu + rho * gv
        feas_now, kkt_now, mu_ls = check(x)
        if feas_now <= tol and kkt_now <= tol:
            x, mu = _kkt_polish(x, mu_ls, grad, g, jac, hess, tol)
            feas_f, kkt_f, mu_f = check(x)
            return EqConstrainedResult(
                x=x, kkt_residual=kkt_f, feasibility_residual=feas_f,
                converged=True, iterations=total_iters, multipliers=mu_f,
            )
        if feas > 0.25 * prev_feas:
            rho = min(rho * 10.0, 1e12)
        prev_feas = feas

    feas_f, kkt_f, mu_f = check(best[1])
    return EqConstrainedResult(
        x=best[1], kkt_residual=kkt_f, feasibility_residual=feas_f,
        converged=False, iterations=total_iters, multipliers=mu_f,
    )


def _kkt_polish(x, mu, grad, g, jac, hess, tol, rounds: int = 8):
    # Newton on the KKT system [grad f + J^T mu; g] = 0; quadratic local
    # convergence squeezes residuals well below the requested tolerance.
    n = x.shape[0]
    m = mu.shape[0]
    for _ in range(rounds):
        J = np.atleast_2d(jac(x))
        gv = np.atleast_1d(g(x))
        r1 = np.asarray(grad(x)) + J.T @ mu
        res = max(np.max(np.abs(r1)), np.max(np.abs(gv)) if gv.size else 0.0)
        if res <= 1e-3 * tol:
            break
        K = np.zeros((n + m, n + m))
        K[:n, :n] = hess(x, mu)
        K[:n, n:] = J.T
        K[n:, :n] = J
        rhs = -np.concatenate([r1, gv])
        try:
            step = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            break
        x_new = x + step[:n]
        mu_new = mu + step[n:]
        J_new = np.atleast_2d(jac(x_new))
        gv_new = np.atleast_1d(g(x_new))
        r1_new = np.asarray(grad(x_new)) + J_new.T @ mu_new
        res_new = max(np.max(np.abs(r1_new)), np.max(np.abs(gv_new)) if gv_new.size else 0.0)
        if res_new >= res:
            break
        x, mu = x_new, mu_new
    return x, mu
