"""Proximal sparse coding against the (non)linear synthesis dictionary.

`ista` minimizes  F(y) = 0.5 * ||x - phi(y)||^2 + lam * ||w . y||_1  by
proximal gradient steps, where phi is :func:`nldict.dictionary.forward`
and ``w`` is a per-channel penalty weight that is 1 on every detail
channel.  The approximation channel's weight defaults to 0: penalizing the
coarse band mostly subtracts a bias from the reconstruction (soft
thresholding removes a fixed amount from every surviving coefficient, and
nothing else can represent the coarse content), which measurably hurts
denoising; set ``approx_weight=1`` for the strictly uniform penalty.

With backtracking enabled each step must satisfy the quadratic
sufficient-decrease condition before it is accepted, which makes the
objective trace non-increasing even though phi is only piecewise linear.

`hard_threshold_topk` and `iht` cover the K-sparse variant (projected
gradient onto the best-K set).

Everything here accepts leading batch axes and then runs one independent
solve per sample (per-sample step sizes, per-sample stopping).
"""

from dataclasses import dataclass

import numpy as np

from .dictionary import backward, forward, inverse


class DivergenceError(RuntimeError):
    """Objective became non-finite; carries the iteration index."""

    def __init__(self, iteration):
        super().__init__(f"objective became non-finite at iteration {iteration}")
        self.iteration = iteration


def soft_threshold(v, t):
    """Shrink toward zero: sign(v) * max(|v| - t, 0); broadcasts over t."""
    v = np.asarray(v)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def hard_threshold_topk(y, k):
    """Keep the k largest-magnitude coefficients of each stack, zero the rest.

    Ties are broken by scan order (channel-major, then row-major): among
    equal magnitudes the earlier entry survives.  For batched input the
    budget applies per sample.  k >= size returns the input unchanged.
    """
    y = np.asarray(y, dtype=float)
    if k < 0:
        raise ValueError("k must be nonnegative")
    if y.ndim < 3:
        raise ValueError("expected a (..., C, H, W) coefficient stack")
    n = int(np.prod(y.shape[-3:]))
    flat = y.reshape(-1, n)
    if k >= n:
        return y.copy()
    out = np.zeros_like(flat)
    if k > 0:
        order = np.argsort(-np.abs(flat), axis=1, kind="stable")
        keep = order[:, :k]
        rows = np.repeat(np.arange(flat.shape[0]), k)
        out[rows, keep.ravel()] = flat[rows, keep.ravel()]
    return out.reshape(y.shape)


@dataclass
class IstaConfig:
    """Solver settings for :func:`ista`.

    lam        : l1 weight (>= 0)
    step       : initial gradient step eta (> 0); 1.0 is safe at unit slopes
                 because the linear dictionary is Parseval-tight
    max_iters  : iteration budget
    tol        : stop when the relative objective change drops below this
    backtracking : halve the step until sufficient decrease holds
    shrink     : backtracking factor in (0, 1)
    approx_weight : penalty multiplier for the approximation channel
    """

    lam: float = 0.1
    step: float = 1.0
    max_iters: int = 100
    tol: float = 1e-6
    backtracking: bool = True
    shrink: float = 0.5
    approx_weight: float = 0.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.step <= 0:
            raise ValueError("step must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be >= 0")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must be in (0, 1)")
        if self.approx_weight < 0:
            raise ValueError("approx_weight must be >= 0")


def _channel_weights(channels, approx_weight):
    w = np.ones(channels)
    w[0] = approx_weight
    return w


def ista(x, p, cfg, y0=None):
    """Sparse-code image(s) against the dictionary by proximal gradient.

    Parameters
    ----------
    x : ndarray, (..., H, W)
        Target image(s).
    p : CnldParams
    cfg : IstaConfig
    y0 : ndarray or None
        Starting coefficients; defaults to the exact dictionary inverse of
        ``x`` (equal to ``analyze(x)`` at unit slopes).

    Returns
    -------
    y : ndarray, (..., 3*levels+1, H, W)
    trace : ndarray, (n_recorded, ...batch)
        Objective value before iterating and after every iteration; with
        backtracking on it is non-increasing along axis 0.

    Raises
    ------
    DivergenceError
        If the objective stops being finite.
    """
    x = np.asarray(x, dtype=float)
    if y0 is None:
        y0 = inverse(x, p)
    batch_shape = x.shape[:-2]
    hw = x.shape[-2:]
    xb = x.reshape((-1,) + hw)
    nb = xb.shape[0]
    y = np.asarray(y0, dtype=float).reshape((nb, -1) + hw).copy()
    channels = y.shape[1]
    w = _channel_weights(channels, cfg.approx_weight)
    w4 = w[None, :, None, None]

    def fidelity(xs, outs):
        return 0.5 * np.sum((xs - outs) ** 2, axis=(-2, -1))

    def penalty(ys):
        return cfg.lam * np.sum(w4 * np.abs(ys), axis=(-3, -2, -1))

    out = forward(y, p)
    f = fidelity(xb, out)
    obj = f + penalty(y)
    if not np.all(np.isfinite(obj)):
        raise DivergenceError(0)
    trace = [obj.copy()]
    eta = np.full(nb, float(cfg.step))
    active = np.ones(nb, dtype=bool)

    for it in range(1, cfg.max_iters + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        ya = y[idx]
        xa = xb[idx]
        out_a, cache = forward(ya, p, want_cache=True)
        grad, _ = backward(ya, p, xa - out_a, cache)
        f_a = f[idx]
        eta_a = eta[idx].copy()
        cand = np.empty_like(ya)
        f_c = np.empty(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        for _ in range(60):
            sub = np.flatnonzero(pending)
            if sub.size == 0:
                break
            e4 = eta_a[sub, None, None, None]
            c = soft_threshold(ya[sub] - e4 * grad[sub], cfg.lam * e4 * w4)
            fc = fidelity(xa[sub], forward(c, p))
            cand[sub] = c
            f_c[sub] = fc
            if not cfg.backtracking:
                pending[sub] = False
                continue
            delta = c - ya[sub]
            model = (f_a[sub]
                     + np.sum(grad[sub] * delta, axis=(-3, -2, -1))
                     + np.sum(delta * delta, axis=(-3, -2, -1)) / (2 * eta_a[sub]))
            ok = fc <= model
            pending[sub] = ~ok
            eta_a[sub[~ok]] *= cfg.shrink
        still = np.flatnonzero(pending)
        if still.size:
            # sufficient decrease unattainable at tiny steps: stay put
            cand[still] = ya[still]
            f_c[still] = f_a[still]
            active[idx[still]] = False
        obj_new = f_c + penalty(cand)
        if not np.all(np.isfinite(obj_new)):
            raise DivergenceError(it)
        rel = np.abs(trace[-1][idx] - obj_new) / np.maximum(np.abs(trace[-1][idx]), 1.0)
        y[idx] = cand
        f[idx] = f_c
        eta[idx] = eta_a
        step_obj = trace[-1].copy()
        step_obj[idx] = obj_new
        trace.append(step_obj)
        active[idx[rel < cfg.tol]] = False

    y = y.reshape(batch_shape + (channels,) + hw)
    trace = np.asarray(trace).reshape((-1,) + batch_shape)
    return y, trace


def iht(x, p, k, max_iters=50, step=1.0, tol=1e-6, y0=None):
    """K-sparse coding by iterative hard thresholding (projected gradient).

    Keeps the step monotone by halving it per sample whenever the fidelity
    term would increase.  Returns (y, trace) like :func:`ista`, the trace
    holding the fidelity term only.
    """
    x = np.asarray(x, dtype=float)
    if y0 is None:
        y0 = inverse(x, p)
    batch_shape = x.shape[:-2]
    hw = x.shape[-2:]
    xb = x.reshape((-1,) + hw)
    nb = xb.shape[0]
    # start from a feasible point: project the warm start onto the k-sparse set
    y = hard_threshold_topk(np.asarray(y0, dtype=float).reshape((nb, -1) + hw), k)
    channels = y.shape[1]

    def fidelity(xs, outs):
        return 0.5 * np.sum((xs - outs) ** 2, axis=(-2, -1))

    f = fidelity(xb, forward(y, p))
    if not np.all(np.isfinite(f)):
        raise DivergenceError(0)
    trace = [f.copy()]
    eta = np.full(nb, float(step))
    active = np.ones(nb, dtype=bool)

    for it in range(1, max_iters + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        ya = y[idx]
        xa = xb[idx]
        out_a, cache = forward(ya, p, want_cache=True)
        grad, _ = backward(ya, p, xa - out_a, cache)
        f_a = f[idx]
        eta_a = eta[idx].copy()
        cand = np.empty_like(ya)
        f_c = np.empty(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        for _ in range(30):
            sub = np.flatnonzero(pending)
            if sub.size == 0:
                break
            e4 = eta_a[sub, None, None, None]
            c = hard_threshold_topk(ya[sub] - e4 * grad[sub], k)
            fc = fidelity(xa[sub], forward(c, p))
            cand[sub] = c
            f_c[sub] = fc
            ok = fc <= f_a[sub]
            pending[sub] = ~ok
            eta_a[sub[~ok]] *= 0.5
        still = np.flatnonzero(pending)
        if still.size:
            cand[still] = ya[still]
            f_c[still] = f_a[still]
            active[idx[still]] = False
        if not np.all(np.isfinite(f_c)):
            raise DivergenceError(it)
        rel = np.abs(f[idx] - f_c) / np.maximum(np.abs(f[idx]), 1.0)
        y[idx] = cand
        f[idx] = f_c
        eta[idx] = eta_a
        step_obj = trace[-1].copy()
        step_obj[idx] = f_c
        trace.append(step_obj)
        active[idx[rel < tol]] = False

    y = y.reshape(batch_shape + (channels,) + hw)
    trace = np.asarray(trace).reshape((-1,) + batch_shape)
    return y, trace
