import numpy as np
import pytest

from nldict.dictionary import CnldParams, backward, forward
from nldict.sparse import (
    DivergenceError,
    IstaConfig,
    hard_threshold_topk,
    iht,
    ista,
    soft_threshold,
)
from nldict.transform import analyze, num_channels

from oracles import dense_operator, lasso_coordinate_descent

HAAR = (np.pi / 4, 0.0)


def linear_params(angles):
    angles = np.atleast_2d(angles)
    return CnldParams(angles=angles, slopes=np.ones((angles.shape[0], 3)))


class TestSoftThreshold:
    def test_values(self):
        assert soft_threshold(0.5, 0.2) == pytest.approx(0.3)
        assert soft_threshold(-0.1, 0.2) == 0.0
        v = np.linspace(-2, 2, 11)
        np.testing.assert_array_equal(soft_threshold(v, 0.0), v)

    def test_nonexpansive(self):
        rng = np.random.default_rng(60)
        a, b = rng.standard_normal((2, 1000)) * 3
        t = rng.uniform(0, 2, size=1000)
        gap = np.abs(soft_threshold(a, t) - soft_threshold(b, t))
        assert np.all(gap <= np.abs(a - b) + 1e-15)


class TestHardThresholdTopk:
    def test_spec_example(self):
        y = np.array([[[3.0, -5.0], [1.0, 0.5]]])
        out = hard_threshold_topk(y, 2)
        np.testing.assert_array_equal(out, [[[3.0, -5.0], [0.0, 0.0]]])

    def test_identity_when_k_is_total(self):
        rng = np.random.default_rng(61)
        y = rng.standard_normal((4, 8, 8))
        np.testing.assert_array_equal(hard_threshold_topk(y, y.size), y)

    def test_nonzero_count(self):
        rng = np.random.default_rng(62)
        y = rng.standard_normal((4, 8, 8))
        y[np.abs(y) < 0.5] = 0.0
        nnz = np.count_nonzero(y)
        for k in (0, 5, nnz, nnz + 40, y.size):
            out = hard_threshold_topk(y, k)
            assert np.count_nonzero(out) == min(k, nnz)

    def test_tie_break_scan_order(self):
        y = np.zeros((1, 2, 2))
        y.ravel()[:] = [1.0, -1.0, 1.0, 0.5]
        out = hard_threshold_topk(y, 2)
        np.testing.assert_array_equal(out.ravel(), [1.0, -1.0, 0.0, 0.0])

    def test_batched_budget_per_sample(self):
        rng = np.random.default_rng(63)
        y = rng.standard_normal((3, 4, 8, 8))
        out = hard_threshold_topk(y, 7)
        for b in range(3):
            np.testing.assert_array_equal(out[b], hard_threshold_topk(y[b], 7))


class TestIsta:
    def test_exact_representation_zero_penalty(self):
        rng = np.random.default_rng(64)
        p = linear_params([HAAR] * 2)
        x = rng.standard_normal((16, 16))
        y0 = analyze(x, p.angles)
        y, trace = ista(x, p, IstaConfig(lam=0.0, step=1.0, max_iters=5, tol=0.0),
                        y0=y0)
        assert trace[0] < 1e-10
        assert np.linalg.norm(forward(y, p) - x) < 1e-10

    def test_matches_independent_dense_prox_loop(self):
        # equal iterations, fixed step, uniform penalty
        rng = np.random.default_rng(65)
        p = linear_params([(0.7, 0.2)])
        x = rng.standard_normal((4, 4))
        shape = (num_channels(1), 4, 4)
        D = dense_operator(lambda y: forward(y, p), shape, (4, 4))
        y0 = analyze(x, p.angles)
        lam, eta, iters = 0.03, 0.9, 40
        cfg = IstaConfig(lam=lam, step=eta, max_iters=iters, tol=0.0,
                         backtracking=False, approx_weight=1.0)
        y, _ = ista(x, p, cfg, y0=y0)

        yo = y0.ravel().copy()
        xr = x.ravel()
        for _ in range(iters):
            g = D.T @ (D @ yo - xr)
            yo = soft_threshold(yo - eta * g, eta * lam)
        assert np.max(np.abs(y.ravel() - yo)) < 1e-8

    def test_matches_coordinate_descent_at_convergence(self):
        rng = np.random.default_rng(66)
        p = linear_params([(0.7, 0.2)])
        x = rng.standard_normal((4, 4))
        shape = (num_channels(1), 4, 4)
        D = dense_operator(lambda y: forward(y, p), shape, (4, 4))
        lam = 0.05
        cfg = IstaConfig(lam=lam, step=1.0, max_iters=6000, tol=0.0,
                         backtracking=True, approx_weight=1.0)
        y, trace = ista(x, p, cfg)
        y_cd = lasso_coordinate_descent(D, x.ravel(), lam, sweeps=6000)

        def objective(v):
            return 0.5 * np.sum((x.ravel() - D @ v) ** 2) + lam * np.sum(np.abs(v))

        # the redundant dictionary makes the minimizer non-unique, but the
        # objective value and the fit D @ y are unique; check those plus the
        # prox fixed-point certificate of our solution
        yi = y.ravel()
        assert abs(objective(yi) - objective(y_cd)) < 1e-10
        assert np.max(np.abs(D @ yi - D @ y_cd)) < 1e-6
        prox_res = yi - soft_threshold(yi - D.T @ (D @ yi - x.ravel()), lam)
        assert np.max(np.abs(prox_res)) < 1e-7

    def test_objective_monotone_on_nonlinear_instances(self):
        rng = np.random.default_rng(67)
        for _ in range(10):
            p = CnldParams(angles=rng.uniform(-np.pi, np.pi, (2, 2)),
                           slopes=rng.uniform(0.3, 2.5, (2, 3)))
            x = rng.standard_normal((16, 16))
            y, trace = ista(x, p, IstaConfig(lam=0.02, max_iters=100, tol=0.0),
                            y0=rng.standard_normal((num_channels(2), 16, 16)))
            assert np.all(np.diff(trace) <= 1e-12)

    def test_fixed_point_gradient_report(self):
        rng = np.random.default_rng(68)
        p = CnldParams(angles=rng.uniform(-np.pi, np.pi, (2, 2)),
                       slopes=rng.uniform(0.5, 1.5, (2, 3)))
        x = rng.standard_normal((16, 16))
        y, trace = ista(x, p, IstaConfig(lam=0.0, max_iters=300, tol=1e-12))
        out, cache = forward(y, p, want_cache=True)
        g, _ = backward(y, p, x - out, cache)
        final_drop = abs(trace[-2] - trace[-1]) if len(trace) > 1 else 0.0
        # reported, not asserted against a universal bound (nonconvex problem)
        print(f"fixed-point report: |grad|_inf={np.max(np.abs(g)):.3e} "
              f"final objective drop={final_drop:.3e}")
        assert np.isfinite(np.max(np.abs(g)))

    def test_batched_matches_single(self):
        rng = np.random.default_rng(69)
        p = CnldParams(angles=rng.uniform(-np.pi, np.pi, (2, 2)),
                       slopes=rng.uniform(0.5, 1.5, (2, 3)))
        xs = rng.standard_normal((3, 16, 16))
        cfg = IstaConfig(lam=0.05, max_iters=30, tol=1e-8)
        ys, traces = ista(xs, p, cfg)
        for b in range(3):
            yb, tb = ista(xs[b], p, cfg)
            np.testing.assert_allclose(ys[b], yb, atol=1e-12)
            np.testing.assert_allclose(traces[: tb.shape[0], b], tb, atol=1e-12)

    def test_divergence_error(self):
        p = linear_params([HAAR])
        x = np.full((16, 16), np.nan)
        with pytest.raises(DivergenceError) as err:
            ista(x, p, IstaConfig(lam=0.1, max_iters=5))
        assert err.value.iteration == 0


class TestIht:
    def test_budget_respected_and_fidelity_drops(self):
        rng = np.random.default_rng(70)
        p = CnldParams(angles=rng.uniform(-np.pi, np.pi, (2, 2)),
                       slopes=rng.uniform(0.5, 1.5, (2, 3)))
        x = rng.standard_normal((16, 16))
        k = 60
        y, trace = iht(x, p, k, max_iters=30)
        assert np.count_nonzero(y) <= k
        assert trace[-1] <= trace[0]
        assert np.all(np.diff(trace) <= 1e-12)
