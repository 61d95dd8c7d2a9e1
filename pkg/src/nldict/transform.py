"""Separable 2-D undecimated multi-level filter-bank analysis and synthesis.

The transform applies a 2-channel orthonormal pair from :mod:`nldict.lattice`
along rows then columns, never downsampling; deeper levels reuse the same
recursion on the running approximation with the filters zero-upsampled by
``2**(level-1)`` (the classic "holes" construction).  Every 1-D filtering
step is scaled by ``1/sqrt(2)``, which makes the overall analysis operator
``A`` a Parseval tight frame (``A^T A = I``): synthesis is literally the
transpose and reconstruction is exact for *any* angles.  All boundaries are
periodic, so adjointness holds to machine precision.

Coefficient stacks are plain ndarrays with the channel axis third from the
end, laid out as::

    [LL_L, LH_L, HL_L, HH_L, LH_{L-1}, ..., LH_1, HL_1, HH_1]

(3 * levels + 1 channels; detail letters are (vertical, horizontal) filter
selections, e.g. HL = highpass down the columns, lowpass along the rows).
Images are ``(..., H, W)`` and stacks ``(..., C, H, W)``; any leading axes
are treated as batch dimensions by every function in this module.
"""

import numpy as np

from .lattice import filter_gradients, lattice_to_filters

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


class CacheMismatchError(RuntimeError):
    """A VJP was given a cache from a different forward call (or none)."""


def num_channels(levels):
    """Channel count of a coefficient stack: 3 * levels + 1."""
    return 3 * levels + 1


def detail_index(level, levels):
    """Stack index of the LH plane of ``level`` (HL, HH follow it)."""
    return 1 + 3 * (levels - level)


def bank_filters(banks):
    """Filter pairs for every level of a (levels, n_angles) angle array."""
    banks = as_banks(banks)
    return [lattice_to_filters(row) for row in banks]


def as_banks(banks):
    banks = np.asarray(banks, dtype=float)
    if banks.ndim != 2 or banks.shape[0] < 1 or banks.shape[1] < 1:
        raise ValueError(
            f"banks must be a (levels, angles-per-level) array, got shape {banks.shape}"
        )
    return banks


def _check_image(x, levels):
    x = np.asarray(x, dtype=float)
    if x.ndim < 2:
        raise ValueError(f"image must have at least 2 axes, got {x.ndim}")
    need = 2 ** levels
    h, w = x.shape[-2:]
    if h < need or w < need:
        raise ValueError(
            f"{h}x{w} image is too small for a {levels}-level transform "
            f"(needs at least {need} pixels per side)"
        )
    return x


def _check_stack(y, levels):
    y = np.asarray(y, dtype=float)
    if y.ndim < 3 or y.shape[-3] != num_channels(levels):
        raise ValueError(
            f"coefficient stack must have {num_channels(levels)} channels "
            f"for {levels} levels, got shape {y.shape}"
        )
    return y


def dilated_filter(x, taps, dilation, axis):
    """Periodic ``y[n] = (1/sqrt2) * sum_k taps[k] x[n - dilation k]``."""
    acc = taps[0] * x
    for k in range(1, len(taps)):
        if taps[k] != 0.0:
            rolled = np.roll(x, dilation * k, axis=axis)
            rolled *= taps[k]
            acc += rolled
    acc *= _INV_SQRT2
    return acc


def dilated_filter_adj(x, taps, dilation, axis):
    """Adjoint of :func:`dilated_filter`: correlation instead of convolution."""
    acc = taps[0] * x
    for k in range(1, len(taps)):
        if taps[k] != 0.0:
            rolled = np.roll(x, -dilation * k, axis=axis)
            rolled *= taps[k]
            acc += rolled
    acc *= _INV_SQRT2
    return acc


def _tap_grad(g, x, ntaps, dilation, axis, adjoint=False):
    """Gradient of ``<g, filter(x)>`` with respect to the tap values."""
    sign = -1 if adjoint else 1
    gflat = np.ascontiguousarray(g).ravel()
    out = np.empty(ntaps)
    out[0] = np.dot(gflat, np.ascontiguousarray(x).ravel())
    for k in range(1, ntaps):
        rolled = np.roll(x, sign * dilation * k, axis=axis)
        out[k] = np.dot(gflat, rolled.ravel())
    return _INV_SQRT2 * out


def analysis_stage(a, pair, dilation, want_cache=False):
    """One level of separable analysis: rows then columns, no decimation."""
    r0 = dilated_filter(a, pair.h0, dilation, -1)
    r1 = dilated_filter(a, pair.h1, dilation, -1)
    ll = dilated_filter(r0, pair.h0, dilation, -2)
    hl = dilated_filter(r0, pair.h1, dilation, -2)
    lh = dilated_filter(r1, pair.h0, dilation, -2)
    hh = dilated_filter(r1, pair.h1, dilation, -2)
    if want_cache:
        return (ll, lh, hl, hh), {"a": a, "r0": r0, "r1": r1}
    return ll, lh, hl, hh


def synthesis_stage(ll, lh, hl, hh, pair, dilation, want_cache=False):
    """Exact adjoint of :func:`analysis_stage`."""
    u0 = (dilated_filter_adj(ll, pair.h0, dilation, -2)
          + dilated_filter_adj(hl, pair.h1, dilation, -2))
    u1 = (dilated_filter_adj(lh, pair.h0, dilation, -2)
          + dilated_filter_adj(hh, pair.h1, dilation, -2))
    a = (dilated_filter_adj(u0, pair.h0, dilation, -1)
         + dilated_filter_adj(u1, pair.h1, dilation, -1))
    if want_cache:
        return a, {"ll": ll, "lh": lh, "hl": hl, "hh": hh, "u0": u0, "u1": u1}
    return a


def analyze(x, banks, want_cache=False):
    """Decompose an image into its undecimated coefficient stack.

    Parameters
    ----------
    x : ndarray, (..., H, W)
        Input image(s); H and W must both be at least ``2**levels``.
    banks : ndarray, (levels, n_angles)
        Per-level lattice angles (the same 1-D bank filters rows and
        columns of that level).
    want_cache : bool
        Also return the intermediate planes needed by :func:`analyze_vjp`.

    Returns
    -------
    ndarray, (..., 3*levels+1, H, W)
        Coefficient stack in the documented channel order; satisfies
        ``||analyze(x)|| == ||x||`` (tight frame).
    """
    banks = as_banks(banks)
    levels = banks.shape[0]
    x = _check_image(x, levels)
    pairs = bank_filters(banks)
    a = x
    details = []
    stages = []
    for lev in range(1, levels + 1):
        out = analysis_stage(a, pairs[lev - 1], 2 ** (lev - 1), want_cache)
        if want_cache:
            (ll, lh, hl, hh), st = out
            stages.append(st)
        else:
            ll, lh, hl, hh = out
        details.append((lh, hl, hh))
        a = ll
    planes = [a]
    for lh, hl, hh in reversed(details):
        planes.extend((lh, hl, hh))
    y = np.stack(planes, axis=-3)
    if want_cache:
        return y, {"op": "analyze", "banks": banks.copy(), "in_shape": x.shape,
                   "stages": stages}
    return y


def synthesize(y, banks, want_cache=False):
    """Reconstruct an image from a coefficient stack (adjoint of analyze).

    ``synthesize(analyze(x), banks) == x`` to numerical precision for all
    angle values.
    """
    banks = as_banks(banks)
    levels = banks.shape[0]
    y = _check_stack(y, levels)
    pairs = bank_filters(banks)
    a = y[..., 0, :, :]
    stages = []
    for lev in range(levels, 0, -1):
        base = detail_index(lev, levels)
        lh = y[..., base, :, :]
        hl = y[..., base + 1, :, :]
        hh = y[..., base + 2, :, :]
        out = synthesis_stage(a, lh, hl, hh, pairs[lev - 1], 2 ** (lev - 1),
                              want_cache)
        if want_cache:
            a, st = out
            stages.append(st)
        else:
            a = out
    if want_cache:
        return a, {"op": "synthesize", "banks": banks.copy(),
                   "in_shape": y.shape, "stages": stages}
    return a


def _check_cache(cache, op, banks):
    if not isinstance(cache, dict) or "op" not in cache:
        raise CacheMismatchError(
            f"no forward cache supplied; call {op}(..., want_cache=True) first"
        )
    if cache["op"] != op:
        raise CacheMismatchError(f"cache is from {cache['op']!r}, need {op!r}")
    if not np.array_equal(cache["banks"], banks):
        raise CacheMismatchError("cache was built with different bank angles")


def analyze_vjp(cotangent, banks, cache):
    """Vector-Jacobian product through ``x -> analyze(x, banks)``.

    Parameters
    ----------
    cotangent : ndarray, stack-shaped
        Weights on the analysis output.
    cache : dict
        From ``analyze(x, banks, want_cache=True)`` at the same point.

    Returns
    -------
    grad_x : ndarray, image-shaped
        ``(d analyze / d x)^T cotangent`` (equals ``synthesize(cotangent)``).
    grad_angles : ndarray, same shape as ``banks``
        ``<cotangent, d analyze(x) / d theta>`` per angle.
    """
    banks = as_banks(banks)
    levels = banks.shape[0]
    _check_cache(cache, "analyze", banks)
    gy = _check_stack(cotangent, levels)
    pairs = bank_filters(banks)
    ntaps = pairs[0].h0.size
    angle_grads = np.zeros_like(banks)
    g_ll = gy[..., 0, :, :]
    for lev in range(levels, 0, -1):
        st = cache["stages"][lev - 1]
        pair = pairs[lev - 1]
        m = 2 ** (lev - 1)
        base = detail_index(lev, levels)
        g_lh = gy[..., base, :, :]
        g_hl = gy[..., base + 1, :, :]
        g_hh = gy[..., base + 2, :, :]
        t0 = _tap_grad(g_ll, st["r0"], ntaps, m, -2)
        t1 = _tap_grad(g_hl, st["r0"], ntaps, m, -2)
        t0 += _tap_grad(g_lh, st["r1"], ntaps, m, -2)
        t1 += _tap_grad(g_hh, st["r1"], ntaps, m, -2)
        gr0 = (dilated_filter_adj(g_ll, pair.h0, m, -2)
               + dilated_filter_adj(g_hl, pair.h1, m, -2))
        gr1 = (dilated_filter_adj(g_lh, pair.h0, m, -2)
               + dilated_filter_adj(g_hh, pair.h1, m, -2))
        t0 += _tap_grad(gr0, st["a"], ntaps, m, -1)
        t1 += _tap_grad(gr1, st["a"], ntaps, m, -1)
        g_ll = (dilated_filter_adj(gr0, pair.h0, m, -1)
                + dilated_filter_adj(gr1, pair.h1, m, -1))
        dh0, dh1 = filter_gradients(banks[lev - 1])
        angle_grads[lev - 1] = dh0 @ t0 + dh1 @ t1
    return g_ll, angle_grads


def synthesize_vjp(cotangent, banks, cache):
    """Vector-Jacobian product through ``y -> synthesize(y, banks)``.

    Returns ``grad_y`` (stack-shaped, equals ``analyze(cotangent)``) and
    the per-angle inner products ``<cotangent, d synthesize(y) / d theta>``.
    """
    banks = as_banks(banks)
    levels = banks.shape[0]
    _check_cache(cache, "synthesize", banks)
    g = np.asarray(cotangent, dtype=float)
    if g.shape != cache["in_shape"][:-3] + cache["in_shape"][-2:]:
        raise CacheMismatchError(
            f"cotangent shape {g.shape} does not match cached forward run"
        )
    pairs = bank_filters(banks)
    ntaps = pairs[0].h0.size
    angle_grads = np.zeros_like(banks)
    grad_details = [None] * (levels + 1)
    for lev in range(1, levels + 1):
        st = cache["stages"][levels - lev]
        pair = pairs[lev - 1]
        m = 2 ** (lev - 1)
        t0 = _tap_grad(g, st["u0"], ntaps, m, -1, adjoint=True)
        t1 = _tap_grad(g, st["u1"], ntaps, m, -1, adjoint=True)
        gu0 = dilated_filter(g, pair.h0, m, -1)
        gu1 = dilated_filter(g, pair.h1, m, -1)
        t0 += _tap_grad(gu0, st["ll"], ntaps, m, -2, adjoint=True)
        t1 += _tap_grad(gu0, st["hl"], ntaps, m, -2, adjoint=True)
        t0 += _tap_grad(gu1, st["lh"], ntaps, m, -2, adjoint=True)
        t1 += _tap_grad(gu1, st["hh"], ntaps, m, -2, adjoint=True)
        grad_details[lev] = (dilated_filter(gu1, pair.h0, m, -2),
                             dilated_filter(gu0, pair.h1, m, -2),
                             dilated_filter(gu1, pair.h1, m, -2))
        g = dilated_filter(gu0, pair.h0, m, -2)
        dh0, dh1 = filter_gradients(banks[lev - 1])
        angle_grads[lev - 1] = dh0 @ t0 + dh1 @ t1
    planes = [g]
    for lev in range(levels, 0, -1):
        planes.extend(grad_details[lev])
    grad_y = np.stack(planes, axis=-3)
    return grad_y, angle_grads
