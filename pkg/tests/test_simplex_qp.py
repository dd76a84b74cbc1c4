import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gemith.oob import OobMatrix
from gemith.simplex_qp import (
    ensemble_mse,
    gram,
    kkt_report,
    project_to_simplex,
    solve_active_set,
    solve_gem_weights,
    solve_pgd,
)

Y3 = np.array([1.0, 2.0, 3.0])


def grid_min_k3(M, step=1e-3):
    """Brute force over the 2-simplex; exact quadratic form on each grid point."""
    G, g = gram(M.predictions, M.y)
    c = float(M.y @ M.y) / M.n
    ticks = np.round(np.arange(0, 1 + step / 2, step), 12)
    a, b = np.meshgrid(ticks, ticks, indexing="ij")
    keep = a + b <= 1 + 1e-12
    W = np.column_stack([a[keep], b[keep], np.clip(1 - a[keep] - b[keep], 0, None)])
    vals = np.einsum("ij,jk,ik->i", W, G, W) - 2 * W @ g + c
    i = int(np.argmin(vals))
    return float(vals[i]), W[i]


def random_instance(rng, n, k=3, spread=0.6):
    y = rng.normal(size=n)
    P = y[:, None] + rng.normal(scale=spread, size=(n, k)) + rng.normal(scale=0.3, size=k)
    return OobMatrix(P, y)


class TestMse:
    def test_vertex(self):
        M = OobMatrix(np.column_stack([Y3 + 0.1, Y3 - 0.2]), Y3)
        assert ensemble_mse([1.0, 0.0], M) == pytest.approx(0.01, abs=1e-15)
        assert ensemble_mse([0.0, 1.0], M) == pytest.approx(0.04, abs=1e-15)

    def test_symmetric_cancellation(self):
        M = OobMatrix(np.column_stack([Y3 + 0.1, Y3 - 0.1]), Y3)
        assert ensemble_mse([0.5, 0.5], M) < 1e-30

    def test_needs_matrix(self):
        with pytest.raises(TypeError):
            ensemble_mse([1.0], np.ones((3, 1)))


class TestProjection:
    def test_examples(self):
        assert project_to_simplex([2.0, 0.0]).tolist() == [1.0, 0.0]
        assert project_to_simplex([0.6, 0.6]) == pytest.approx([0.5, 0.5])
        assert project_to_simplex([0.2, 0.3, 0.5]) == pytest.approx([0.2, 0.3, 0.5])

    @settings(max_examples=200, deadline=None)
    @given(arrays(float, st.integers(1, 8), elements=st.floats(-50, 50)))
    def test_projection_is_optimal(self, v):
        w = project_to_simplex(v)
        assert np.all(w >= 0) and abs(w.sum() - 1) < 1e-12
        # variational inequality: (v - w) . (u - w) <= 0 for every vertex u
        r = v - w
        assert np.all(r - r @ w <= 1e-9 * (1 + np.abs(v).max()))


class TestSolver:
    def test_hand_instance(self):
        M = OobMatrix(np.column_stack([Y3 + 0.1, Y3 - 0.2]), Y3)
        sw = solve_gem_weights(M)
        assert sw.w == pytest.approx([2 / 3, 1 / 3], abs=1e-9)
        assert sw.objective < 1e-9

    def test_single_column(self):
        M = OobMatrix((Y3 + 0.3)[:, None], Y3)
        sw = solve_gem_weights(M)
        assert sw.w.tolist() == [1.0]
        assert sw.objective == pytest.approx(0.09)

    def test_perfect_column_wins(self):
        rng = np.random.default_rng(0)
        y = rng.normal(size=30)
        M = OobMatrix(np.column_stack([y + rng.normal(size=30), y, y + 1.0]), y)
        sw = solve_gem_weights(M)
        assert sw.w == pytest.approx([0.0, 1.0, 0.0], abs=1e-9)
        assert sw.objective < 1e-20

    def test_random_5x3_against_grid(self):
        M = random_instance(np.random.default_rng(42), 5)
        best, _ = grid_min_k3(M)
        sw = solve_gem_weights(M)
        assert sw.objective <= best + 1e-12
        assert best - sw.objective < 1e-6

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_pgd(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(2, 9))
        M = random_instance(rng, int(rng.integers(k, 60)), k)
        a = solve_gem_weights(M)
        b = solve_gem_weights(M, method="pgd")
        assert a.objective <= b.objective + 1e-12
        assert b.objective - a.objective < 1e-8

    def test_duplicate_columns(self):
        rng = np.random.default_rng(3)
        y = rng.normal(size=40)
        c = y + rng.normal(size=40)
        M = OobMatrix(np.column_stack([c, c, y + rng.normal(size=40)]), y)
        M2 = OobMatrix(M.predictions[:, 1:], y)
        assert solve_gem_weights(M).objective == pytest.approx(solve_gem_weights(M2).objective, abs=1e-12)

    def test_dominates_every_vertex_and_uniform(self):
        rng = np.random.default_rng(5)
        M = random_instance(rng, 50, 6)
        obj = solve_gem_weights(M).objective
        for j in range(6):
            assert obj <= ensemble_mse(np.eye(6)[j], M) + 1e-12
        assert obj <= ensemble_mse(np.full(6, 1 / 6), M) + 1e-12

    def test_dirichlet_sampling_never_beats_solver(self):
        rng = np.random.default_rng(9)
        M = random_instance(rng, 40, 4)
        obj = solve_gem_weights(M).objective
        W = rng.dirichlet(np.ones(4), size=10_000)
        R = M.y[:, None] - M.predictions @ W.T
        assert obj <= (R * R).mean(axis=0).min() + 1e-12

    def test_scale_equivariance(self):
        rng = np.random.default_rng(6)
        M = random_instance(rng, 30, 4)
        scaled = OobMatrix(M.predictions * 7.0, M.y * 7.0)
        a, b = solve_gem_weights(M), solve_gem_weights(scaled)
        assert b.objective == pytest.approx(49 * a.objective, rel=1e-9)
        assert np.max(np.abs(b.w - a.w)) <= 1e-8

    def test_convexity_witness(self):
        rng = np.random.default_rng(12)
        M = random_instance(rng, 30, 5)
        for _ in range(200):
            w1, w2 = rng.dirichlet(np.ones(5), size=2)
            t = rng.uniform()
            mix = ensemble_mse(t * w1 + (1 - t) * w2, M)
            assert mix <= t * ensemble_mse(w1, M) + (1 - t) * ensemble_mse(w2, M) + 1e-12

    def test_kkt_certificate(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            M = random_instance(rng, 40, int(rng.integers(2, 7)))
            spread, violation = kkt_report(solve_gem_weights(M), M)
            assert spread <= 1e-8 and violation <= 1e-8

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            solve_gem_weights(OobMatrix(np.array([[1.0, np.nan]]), np.array([1.0])))

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            solve_gem_weights(OobMatrix(np.ones((3, 2)), np.ones(3)), method="simplex")

    def test_raw_solvers_agree_on_gram(self):
        M = random_instance(np.random.default_rng(1), 25, 5)
        G, g = gram(M.predictions, M.y)
        wa, _ = solve_active_set(G, g)
        wp, _ = solve_pgd(G, g)
        assert ensemble_mse(wa, M) <= ensemble_mse(wp, M) + 1e-12

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(1, 40))
    def test_feasible_and_optimal_property(self, seed, k, n):
        rng = np.random.default_rng(seed)
        M = random_instance(rng, n, k, spread=float(rng.uniform(0.01, 3)))
        sw = solve_gem_weights(M)
        assert np.all(sw.w >= 0) and abs(sw.w.sum() - 1) < 1e-12
        ref = solve_gem_weights(M, method="pgd").objective
        assert sw.objective <= ref + 1e-9 * max(1.0, ref)
