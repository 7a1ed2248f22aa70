import numpy as np
import pytest
import scipy.optimize

from conftest import random_connected_adjacency
from dynlayout.errors import DataError
from dynlayout.gll import (augment_gll, bfp_lambda_select, bfp_layout, ccdr_layout,
                           centering_matrix, dgll_derivatives, dgll_layout,
                           dgll_objective, energy, laplacian, spectral_layout)
from dynlayout.layout import align_to_reference


def path_graph():
    return np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)


def two_triangles():
    W = np.zeros((6, 6))
    for a, b in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]:
        W[a, b] = W[b, a] = 1.0
    return W


class TestLaplacian:
    def test_path_graph(self):
        lap = laplacian(path_graph())
        assert np.array_equal(np.diagonal(lap.D), [1, 2, 1])
        assert np.array_equal(lap.L, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])

    def test_empty_graph(self):
        lap = laplacian(np.zeros((3, 3)))
        assert np.array_equal(lap.L, np.zeros((3, 3)))

    def test_annihilates_constant_vector(self, rng):
        W = random_connected_adjacency(rng, 6, weighted=True)
        lap = laplacian(W)
        assert np.allclose(lap.L @ np.ones(6), 0.0, atol=1e-12)


class TestEnergy:
    def test_path_graph_line(self):
        X = np.array([[0.0], [1.0], [2.0]])
        assert energy(X, laplacian(path_graph()).L) == pytest.approx(2.0)

    def test_constant_layout_is_zero(self):
        X = np.ones((3, 2))
        assert energy(X, laplacian(path_graph()).L) == pytest.approx(0.0)

    def test_double_sum_equals_trace_form(self, rng):
        W = random_connected_adjacency(rng, 6, weighted=True)
        X = rng.standard_normal((6, 2))
        double_sum = 0.5 * sum(W[i, j] * np.sum((X[i] - X[j]) ** 2)
                               for i in range(6) for j in range(6))
        assert energy(X, laplacian(W).L) == pytest.approx(double_sum, rel=1e-12)

    def test_rotation_invariance(self, rng):
        W = random_connected_adjacency(rng, 5)
        X = rng.standard_normal((5, 2))
        theta = 0.83
        Q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        L = laplacian(W).L
        assert energy(X @ Q, L) == pytest.approx(energy(X, L), rel=1e-12)


class TestSpectralLayout:
    def test_k2_one_dimensional(self):
        W = np.array([[0.0, 1.0], [1.0, 0.0]])
        layout = spectral_layout(W, 1, normalized=False)
        X = layout.X[:, 0]
        assert np.allclose(np.abs(X), [1.0, 1.0])
        assert X[0] * X[1] < 0
        assert X @ X == pytest.approx(2.0)

    def test_plain_constraints_and_energy_identity(self, rng):
        W = random_connected_adjacency(rng, 7, weighted=True)
        layout = spectral_layout(W, 2, normalized=False)
        X = layout.X
        n = 7
        assert np.allclose(X.T @ X, n * np.eye(2), atol=1e-8)
        assert np.allclose(X.T @ np.ones(n), 0.0, atol=1e-8)
        lap = laplacian(W)
        vals = np.sort(np.linalg.eigvalsh(lap.L))
        assert energy(X, lap.L) == pytest.approx(n * (vals[1] + vals[2]), abs=1e-6)

    def test_normalized_constraints(self, rng):
        W = random_connected_adjacency(rng, 7, weighted=True)
        layout = spectral_layout(W, 2, normalized=True)
        X = layout.X
        D = laplacian(W).D
        assert np.allclose(X.T @ D @ X, np.trace(D) * np.eye(2), atol=1e-8)
        assert np.allclose(X.T @ D @ np.ones(7), 0.0, atol=1e-8)

    def test_two_triangle_graph_matches_dense_oracle(self):
        # lambda_2 is simple but lambda_3 = 3 has multiplicity 3 here, so the
        # oracle comparison is per eigenspace
        W = two_triangles()
        layout = spectral_layout(W, 2, normalized=False)
        lap = laplacian(W)
        vals, vecs = np.linalg.eigh(lap.L)
        fiedler = np.sqrt(6) * vecs[:, 1]
        x1, x2 = layout.X[:, 0], layout.X[:, 1]
        assert np.allclose(np.minimum(np.abs(x1 - fiedler), np.abs(x1 + fiedler)),
                           0.0, atol=1e-8)
        assert np.allclose(lap.L @ x2, vals[2] * x2, atol=1e-8)

    def test_disconnected_rejected_with_component_count(self):
        W = np.zeros((4, 4))
        W[0, 1] = W[1, 0] = 1.0
        W[2, 3] = W[3, 2] = 1.0
        with pytest.raises(DataError, match="2 components"):
            spectral_layout(W, 1)


class TestAugmentGll:
    def test_no_groups(self):
        W = path_graph()
        system = augment_gll(W, np.zeros((3, 0)), 2.0)
        assert np.array_equal(system.W_aug, W)

    def test_single_node_single_group(self):
        system = augment_gll(np.zeros((1, 1)), np.array([[1.0]]), 3.0)
        assert np.array_equal(system.W_aug, [[0.0, 3.0], [3.0, 0.0]])
        assert np.array_equal(np.diagonal(system.D_aug), [3.0, 3.0])

    def test_degree_bookkeeping(self, rng):
        W = random_connected_adjacency(rng, 6)
        C = np.zeros((6, 2))
        C[:4, 0] = 1
        C[4:, 1] = 1
        system = augment_gll(W, C, 1.5)
        grouped = 6
        assert np.trace(system.D_aug) == pytest.approx(
            np.trace(laplacian(W).D) + 2 * 1.5 * grouped)


class TestCenteringMatrix:
    def test_identity_degrees(self):
        M = centering_matrix(np.eye(2))
        assert np.allclose(M, [[0.5, -0.5], [-0.5, 0.5]])

    def test_annihilates_constant_vector(self, rng):
        d = rng.uniform(0.5, 3.0, size=6)
        M = centering_matrix(np.diag(d))
        assert np.allclose(M @ np.ones(6), 0.0, atol=1e-12)

    def test_constant_vector_has_zero_weighted_variance(self, rng):
        d = rng.uniform(0.5, 3.0, size=5)
        M = centering_matrix(np.diag(d))
        x = 4.2 * np.ones(5)
        assert x @ M @ x == pytest.approx(0.0, abs=1e-10)


class TestCcdr:
    def test_reduces_to_spectral(self, rng):
        W = random_connected_adjacency(rng, 6)
        a = ccdr_layout(W, np.zeros((6, 0)), 0.0, 2, normalized=True)
        b = spectral_layout(W, 2, normalized=True)
        assert np.allclose(a.X, b.X, atol=1e-10)

    def test_satisfies_augmented_constraints(self, rng):
        W = random_connected_adjacency(rng, 6)
        C = np.zeros((6, 2))
        C[:3, 0] = 1
        C[3:, 1] = 1
        layout = ccdr_layout(W, C, 1.0, 2, normalized=True)
        system = augment_gll(W, C, 1.0)
        M = centering_matrix(system.D_aug)
        stacked = layout.stacked
        target = np.trace(system.D_aug)
        assert np.allclose(stacked.T @ M @ stacked, target * np.eye(2), atol=1e-8)

    def test_large_alpha_collapses_groups(self, rng):
        # two-group graph in 1-D: the single layout dimension becomes the
        # between-group mode as alpha grows, so within-group variance -> 0
        W = random_connected_adjacency(rng, 8)
        C = np.zeros((8, 2))
        C[:4, 0] = 1
        C[4:, 1] = 1

        def within_group_variance(alpha):
            layout = ccdr_layout(W, C, alpha, 1, normalized=True)
            var = 0.0
            for g in range(2):
                members = layout.X[C[:, g] == 1]
                var += float(np.sum((members - members.mean(axis=0)) ** 2))
            return var

        sweep = [within_group_variance(a) for a in (0.1, 1.0, 10.0, 100.0)]
        assert sweep[-1] < 0.05 * sweep[0]


class TestBfp:
    def test_lambda_zero_is_current_spectral(self, rng):
        W_prev = random_connected_adjacency(rng, 6)
        W_curr = random_connected_adjacency(rng, 6)
        layout = bfp_layout(laplacian(W_prev), laplacian(W_curr), 0.0, None, 2)
        expected = spectral_layout(W_curr, 2, normalized=True)
        assert np.allclose(layout.X, expected.X, atol=1e-10)

    def test_lambda_one_is_previous_spectral(self, rng):
        W_prev = random_connected_adjacency(rng, 6)
        W_curr = random_connected_adjacency(rng, 6)
        layout = bfp_layout(laplacian(W_prev), laplacian(W_curr), 1.0, None, 2)
        expected = spectral_layout(W_prev, 2, normalized=True)
        assert np.allclose(layout.X, expected.X, atol=1e-10)

    def test_identical_snapshots_any_lambda(self, rng):
        W = random_connected_adjacency(rng, 6)
        lap = laplacian(W)
        a = bfp_layout(lap, lap, 0.37, None, 2)
        b = spectral_layout(W, 2, normalized=True)
        assert np.allclose(a.X @ a.X.T, b.X @ b.X.T, atol=1e-8)

    def test_lambda_outside_range_rejected(self, rng):
        W = random_connected_adjacency(rng, 4)
        with pytest.raises(DataError):
            bfp_layout(laplacian(W), laplacian(W), 1.5, None, 2)

    def test_alignment_to_previous(self, rng):
        W = random_connected_adjacency(rng, 6)
        lap = laplacian(W)
        ref = spectral_layout(W, 2, normalized=True).X
        flipped = bfp_layout(lap, lap, 0.0, -ref, 2)
        assert np.allclose(flipped.X, -ref, atol=1e-8)


class TestBfpLambdaSelect:
    def test_single_candidate(self):
        assert bfp_lambda_select([0.0], lambda lam: 1.0) == 0.0

    def test_increasing_composite_picks_minimum(self):
        grid = [0.0, 0.25, 0.5, 0.75, 1.0]
        assert bfp_lambda_select(grid, lambda lam: 1.0 + lam) == 0.0

    def test_ties_go_to_smaller(self):
        assert bfp_lambda_select([0.0, 0.5, 1.0], lambda lam: 7.0) == 0.0

    def test_deterministic(self, rng):
        grid = [i / 10 for i in range(11)]
        table = {lam: float(rng.random()) for lam in grid}
        assert bfp_lambda_select(grid, table.get) == bfp_lambda_select(grid, table.get)


class TestDgllObjective:
    def test_beta_zero_is_trace_form(self, rng):
        W = random_connected_adjacency(rng, 5)
        L = laplacian(W).L
        X = rng.standard_normal((5, 2))
        assert dgll_objective(X, L, np.zeros((5, 5)), 0.0, np.zeros_like(X)) == \
            pytest.approx(float(np.trace(X.T @ L @ X)))

    def test_pure_temporal_at_previous_layout(self, rng):
        X = rng.standard_normal((4, 2))
        E = np.diag([1.0, 0, 1.0, 0])
        value = dgll_objective(X, np.zeros((4, 4)), E, 2.0, X)
        assert value == pytest.approx(-2.0 * float(np.trace(X.T @ E @ X)))

    def test_dropped_constant_algebra(self, rng):
        # objective + beta tr(Xp^T E Xp) equals the full quadratic expansion
        W = random_connected_adjacency(rng, 4)
        L = laplacian(W).L
        E = np.diag([1.0, 1.0, 0, 0])
        X = rng.standard_normal((4, 2))
        Xp = rng.standard_normal((4, 2))
        beta = 1.7
        full = float(np.trace(X.T @ L @ X)) + beta * sum(
            E[i, i] * np.sum((X[i] - Xp[i]) ** 2) for i in range(4))
        assert dgll_objective(X, L, E, beta, Xp) + beta * float(
            np.trace(Xp.T @ E @ Xp)) == pytest.approx(full)

    def test_rotation_invariance_without_temporal_term(self, rng):
        W = random_connected_adjacency(rng, 5)
        L = laplacian(W).L
        X = rng.standard_normal((5, 2))
        theta = 1.2
        Q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        a = dgll_objective(X, L, np.zeros((5, 5)), 0.0, np.zeros_like(X))
        b = dgll_objective(X @ Q, L, np.zeros((5, 5)), 0.0, np.zeros_like(X))
        assert a == pytest.approx(b, rel=1e-12)


def random_dgll_instance(rng, n, k, s=2, normalized=True):
    W = random_connected_adjacency(rng, n)
    C = np.zeros((n, k))
    for i in range(n):
        if k and rng.random() < 0.8:
            C[i, rng.integers(k)] = 1.0
    for g in range(k):
        if C[:, g].sum() == 0:
            C[rng.integers(n), g] = 1.0
    beta = float(rng.uniform(0.3, 2.0))
    E_diag = (rng.random(n) < 0.8).astype(float)
    if not E_diag.any():
        E_diag[0] = 1.0
    E = np.diag(E_diag)
    X_prev = rng.standard_normal((n + k, s))
    system = augment_gll(W, C, 1.0)
    D_for_M = system.D_aug if normalized else np.eye(n + k)
    M = centering_matrix(D_for_M)
    target = float(np.trace(D_for_M))
    E_aug = np.zeros((n + k, n + k))
    E_aug[:n, :n] = E
    return W, C, beta, E, X_prev, system, M, target, E_aug


class TestDgllDerivatives:
    def test_gradient_and_jacobian_match_finite_differences(self, rng):
        for _ in range(20):
            n = int(rng.integers(3, 9))
            k = int(rng.integers(0, 4))
            W, C, beta, E, X_prev, system, M, target, E_aug = \
                random_dgll_instance(rng, n, k)
            m = n + k
            x0 = rng.standard_normal(2 * m)

            def f(x):
                return dgll_objective(x.reshape(2, m).T, system.L_aug, E_aug,
                                      beta, X_prev)

            def g(x):
                return dgll_derivatives(x.reshape(2, m).T, system.L_aug, E_aug, beta,
                                        X_prev, M, np.zeros(3), target)[1]

            grad, gval, J, _ = dgll_derivatives(x0.reshape(2, m).T, system.L_aug,
                                                E_aug, beta, X_prev, M,
                                                np.zeros(3), target)
            h = 1e-6
            fd_grad = np.array([(f(x0 + h * e) - f(x0 - h * e)) / (2 * h)
                                for e in np.eye(2 * m)])
            scale = max(1.0, np.max(np.abs(grad)))
            assert np.max(np.abs(grad - fd_grad)) <= 1e-5 * scale
            fd_J = np.column_stack([(g(x0 + h * e) - g(x0 - h * e)) / (2 * h)
                                    for e in np.eye(2 * m)])
            assert np.max(np.abs(J - fd_J)) <= 1e-5 * max(1.0, np.max(np.abs(J)))

    def test_zero_multiplier_hessian_is_block_diagonal(self, rng):
        W, C, beta, E, X_prev, system, M, target, E_aug = \
            random_dgll_instance(rng, 5, 2)
        m = 7
        X = rng.standard_normal((m, 2))
        _, _, _, H = dgll_derivatives(X, system.L_aug, E_aug, beta, X_prev, M,
                                      np.zeros(3), target)
        block = 2 * system.L_aug + 2 * beta * E_aug
        assert np.array_equal(H[:m, :m], block)
        assert np.array_equal(H[m:, m:], block)
        assert np.array_equal(H[:m, m:], np.zeros((m, m)))

    def test_three_dimensions_rejected(self, rng):
        W, C, beta, E, X_prev, system, M, target, E_aug = \
            random_dgll_instance(rng, 4, 0)
        with pytest.raises(DataError):
            dgll_derivatives(np.zeros((4, 3)), system.L_aug, E_aug, beta,
                             np.zeros((4, 3)), M, np.zeros(3), target)


class TestDgllLayout:
    def test_eigen_reduction_without_anchor(self, rng):
        W = random_connected_adjacency(rng, 6)
        solution = dgll_layout(W, np.zeros((6, 0)), 0.0, 0.0, np.zeros((6, 6)),
                               np.zeros((6, 2)), 2, normalized=False)
        lap = laplacian(W)
        vals = np.sort(np.linalg.eigvalsh(lap.L))
        assert solution.objective == pytest.approx(6 * (vals[1] + vals[2]), abs=1e-6)

    def test_solution_meets_residual_contract(self, rng):
        for _ in range(5):
            n = int(rng.integers(4, 8))
            k = int(rng.integers(0, 3))
            W, C, beta, E, X_prev, *_ = random_dgll_instance(rng, n, k)
            solution = dgll_layout(W, C, 1.0, beta, E, X_prev, 2)
            assert solution.constraint_residual <= 1e-6
            assert solution.kkt_residual <= 1e-6

    def test_huge_beta_returns_feasible_previous(self, rng):
        W = random_connected_adjacency(rng, 6)
        system = augment_gll(W, np.zeros((6, 0)), 0.0)
        M = centering_matrix(system.D_aug)
        target = float(np.trace(system.D_aug))
        raw = rng.standard_normal((6, 2))
        G = raw.T @ M @ raw
        vals, vecs = np.linalg.eigh(G)
        X_prev = raw @ (vecs @ np.diag(vals**-0.5) @ vecs.T * np.sqrt(target))
        # X_prev is feasible, so its constraint-set projection is itself
        solution = dgll_layout(W, np.zeros((6, 0)), 0.0, 1e7, np.eye(6), X_prev, 2)
        assert np.max(np.abs(solution.X_aug - X_prev)) <= 1e-3

    def test_matches_tightening_penalty_oracle(self, rng):
        for _ in range(3):
            n = int(rng.integers(4, 6))
            W, C, beta, E, X_prev, system, M, target, E_aug = \
                random_dgll_instance(rng, n, 1)
            m = n + 1
            solution = dgll_layout(W, C, 1.0, beta, E, X_prev, 2)

            # independent penalty oracle: objective/constraints and their
            # gradients written out directly, minimized by scipy BFGS with a
            # tightening quadratic penalty
            L, E_full = system.L_aug, E_aug

            def f(x):
                X = x.reshape(2, m).T
                return float(np.trace(X.T @ L @ X)
                             + beta * (np.trace(X.T @ E_full @ X)
                                       - 2 * np.trace(X.T @ E_full @ X_prev)))

            def g(x):
                X = x.reshape(2, m).T
                return np.array([X[:, 0] @ M @ X[:, 0] - target,
                                 X[:, 1] @ M @ X[:, 1] - target,
                                 X[:, 1] @ M @ X[:, 0]])

            def penalty_grad(x, rho):
                X = x.reshape(2, m).T
                gf = 2 * L @ X + 2 * beta * E_full @ X - 2 * beta * E_full @ X_prev
                gv = g(x)
                gc = np.zeros_like(X)
                gc[:, 0] = 4 * gv[0] * (M @ X[:, 0]) + 2 * gv[2] * (M @ X[:, 1])
                gc[:, 1] = 4 * gv[1] * (M @ X[:, 1]) + 2 * gv[2] * (M @ X[:, 0])
                return (gf + rho * gc).T.reshape(-1)

            x = X_prev.T.reshape(-1).copy()
            for rho in [1e0, 1e2, 1e4, 1e6, 1e8, 1e10]:
                out = scipy.optimize.minimize(
                    lambda z, r=rho: f(z) + r * float(g(z) @ g(z)), x,
                    jac=lambda z, r=rho: penalty_grad(z, r),
                    method="BFGS", options={"gtol": 1e-10, "maxiter": 10000})
                x = out.x
            assert solution.objective == pytest.approx(f(x), abs=1e-6)

    def test_one_dimensional_solve(self, rng):
        W = random_connected_adjacency(rng, 5)
        X_prev = rng.standard_normal((5, 1))
        solution = dgll_layout(W, np.zeros((5, 0)), 0.0, 1.0, np.eye(5), X_prev, 1)
        assert solution.constraint_residual <= 1e-6
        assert solution.X_aug.shape == (5, 1)

    def test_restarts_return_lowest_objective(self, rng):
        W = random_connected_adjacency(rng, 6)
        X_prev = rng.standard_normal((6, 2))
        base = dgll_layout(W, np.zeros((6, 0)), 0.0, 0.5, np.eye(6), X_prev, 2,
                           restarts=0, rng=1)
        multi = dgll_layout(W, np.zeros((6, 0)), 0.0, 0.5, np.eye(6), X_prev, 2,
                            restarts=3, rng=1)
        assert multi.restarts_used == 3
        assert multi.objective <= base.objective + 1e-9

    def test_three_dimensions_rejected(self, rng):
        W = random_connected_adjacency(rng, 5)
        with pytest.raises(DataError):
            dgll_layout(W, np.zeros((5, 0)), 0.0, 1.0, np.eye(5),
                        np.zeros((5, 3)), 3)


class TestAlignToReference:
    def test_recovers_sign_flip_and_permutation(self, rng):
        X = rng.standard_normal((8, 2))
        ref = X[:, [1, 0]] * np.array([-1.0, 1.0])
        aligned = align_to_reference(ref, X)
        assert np.allclose(aligned, X)

    def test_masked_rows_ignored(self, rng):
        X = rng.standard_normal((6, 2))
        noisy = -X.copy()
        noisy[5] = rng.standard_normal(2) * 100
        mask = np.array([True] * 5 + [False])
        aligned = align_to_reference(noisy, X, mask)
        assert np.allclose(aligned[:5], X[:5])
