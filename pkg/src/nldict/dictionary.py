"""Nonlinear synthesis dictionary: per-level PReLU on the detail planes
feeding the undecimated synthesis cascade.

The synthesizer consumes a coefficient stack and rebuilds an image level by
level, from the coarsest down: the three detail planes of each level pass
through a parametric ReLU (one learnable slope per plane) before entering
that level's linear synthesis stage, while the approximation path is never
activated.  With every slope equal to 1 the map reduces exactly to
:func:`nldict.transform.synthesize`; with positive slopes it stays
invertible on the range of the analysis operator (apply analysis, then
divide negative detail values by their slope).

A model with L levels carries 2L rotation angles and 3L slopes, 5L scalars
in total (20 for the 4-level configuration used in the experiments).
:func:`backward` propagates a residual through the cascade and returns the
exact loss gradients for all of them, plus the gradient with respect to
every coefficient, via the same adjoint filtering primitives the linear
transform uses.
"""

from dataclasses import dataclass

import numpy as np

from .lattice import filter_gradients, lattice_to_filters
from .transform import (
    CacheMismatchError,
    _check_stack,
    _tap_grad,
    as_banks,
    detail_index,
    dilated_filter,
    num_channels,
    synthesis_stage,
)


@dataclass
class CnldParams:
    """Full parameter set: per-level lattice angles and PReLU slopes.

    ``angles`` has shape (levels, stages-per-bank) and ``slopes`` shape
    (levels, 3), one slope per detail plane in (LH, HL, HH) order.
    """

    angles: np.ndarray
    slopes: np.ndarray

    def __post_init__(self):
        self.angles = np.array(self.angles, dtype=float)
        self.slopes = np.array(self.slopes, dtype=float)
        if self.angles.ndim != 2 or self.slopes.ndim != 2:
            raise ValueError("angles and slopes must be 2-D arrays")
        if self.slopes.shape != (self.angles.shape[0], 3):
            raise ValueError(
                f"slopes shape {self.slopes.shape} does not match "
                f"{self.angles.shape[0]} levels"
            )

    @property
    def levels(self):
        return self.angles.shape[0]

    def copy(self):
        return CnldParams(self.angles.copy(), self.slopes.copy())


# Gradients share the parameter layout; backward() returns one of these.
ParamGradient = CnldParams


def parameter_count(levels, stages=2):
    """Scalar parameters of a model: angles plus slopes (5L when stages=2)."""
    return levels * (stages + 3)


def pack(p):
    """Flatten parameters: angles level 1..L, then slopes level 1..L
    in (LH, HL, HH) order."""
    return np.concatenate([p.angles.ravel(), p.slopes.ravel()])


def unpack(vector, levels, stages=2):
    """Inverse of :func:`pack`."""
    vector = np.asarray(vector, dtype=float)
    expect = parameter_count(levels, stages)
    if vector.shape != (expect,):
        raise ValueError(
            f"parameter vector must have length {expect} for {levels} levels, "
            f"got shape {vector.shape}"
        )
    n_ang = levels * stages
    return CnldParams(angles=vector[:n_ang].reshape(levels, stages),
                      slopes=vector[n_ang:].reshape(levels, 3))


def prelu(v, slope):
    """Parametric ReLU: ``v`` on nonnegatives, ``slope * v`` on negatives."""
    out = np.where(np.asarray(v) >= 0, v, slope * np.asarray(v))
    return float(out) if out.ndim == 0 else out


def prelu_subgrad(v, slope):
    """Chosen subgradient pair (d/dv, d/dslope); the kink at 0 takes the
    positive branch so unit slopes stay exactly linear."""
    v = np.asarray(v)
    dv = np.where(v >= 0, 1.0, slope)
    ds = np.where(v < 0, v, 0.0)
    if v.ndim == 0:
        return float(dv), float(ds)
    return dv, ds


def forward(y, p, want_cache=False):
    """Synthesize an image from coefficients through the activated cascade.

    Parameters
    ----------
    y : ndarray, (..., 3*levels+1, H, W)
        Coefficient stack (leading axes are batch).
    p : CnldParams
    want_cache : bool
        Also return the activations :func:`backward` needs.

    Returns
    -------
    ndarray, (..., H, W)
    """
    levels = p.levels
    y = _check_stack(y, levels)
    banks = as_banks(p.angles)
    pairs = [lattice_to_filters(row) for row in banks]
    a = y[..., 0, :, :]
    stages = []
    for lev in range(levels, 0, -1):
        base = detail_index(lev, levels)
        pre = y[..., base:base + 3, :, :]
        s_lh, s_hl, s_hh = p.slopes[lev - 1]
        lh = np.where(pre[..., 0, :, :] >= 0, pre[..., 0, :, :], s_lh * pre[..., 0, :, :])
        hl = np.where(pre[..., 1, :, :] >= 0, pre[..., 1, :, :], s_hl * pre[..., 1, :, :])
        hh = np.where(pre[..., 2, :, :] >= 0, pre[..., 2, :, :], s_hh * pre[..., 2, :, :])
        out = synthesis_stage(a, lh, hl, hh, pairs[lev - 1], 2 ** (lev - 1),
                              want_cache)
        if want_cache:
            a, st = out
            st["pre"] = pre
            stages.append(st)
        else:
            a = out
    if want_cache:
        return a, {"op": "nld_forward", "params": pack(p), "in_shape": y.shape,
                   "stages": stages}
    return a


def backward(y, p, residual, cache):
    """Gradients of ``J = 0.5 * || x - forward(y, p) ||^2``.

    Parameters
    ----------
    y : ndarray
        The coefficient stack passed to the matching :func:`forward` call.
    p : CnldParams
    residual : ndarray, image-shaped
        ``x - forward(y, p)``; summed over any leading batch axes, so for
        batched input the returned parameter gradient is the gradient of
        the summed per-sample losses.
    cache : dict
        From ``forward(y, p, want_cache=True)``.

    Returns
    -------
    grad_y : ndarray, stack-shaped
        dJ/dy.
    grad_p : ParamGradient
        dJ/d(angles), dJ/d(slopes).
    """
    levels = p.levels
    y = _check_stack(y, levels)
    if not isinstance(cache, dict) or cache.get("op") != "nld_forward":
        raise CacheMismatchError(
            "no forward cache supplied; call forward(..., want_cache=True) first"
        )
    if not np.array_equal(cache["params"], pack(p)):
        raise CacheMismatchError("cache was built with different parameters")
    if cache["in_shape"] != y.shape:
        raise CacheMismatchError(
            f"cache was built for input shape {cache['in_shape']}, got {y.shape}"
        )
    banks = as_banks(p.angles)
    pairs = [lattice_to_filters(row) for row in banks]
    ntaps = pairs[0].h0.size
    angle_grads = np.zeros_like(banks)
    slope_grads = np.zeros_like(p.slopes)
    grad_details = [None] * (levels + 1)

    g = -np.asarray(residual, dtype=float)
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
        g_act = (dilated_filter(gu1, pair.h0, m, -2),   # LH
                 dilated_filter(gu0, pair.h1, m, -2),   # HL
                 dilated_filter(gu1, pair.h1, m, -2))   # HH
        pre = st["pre"]
        planes = []
        for ch in range(3):
            v = pre[..., ch, :, :]
            slope = p.slopes[lev - 1, ch]
            planes.append(np.where(v >= 0, g_act[ch], slope * g_act[ch]))
            slope_grads[lev - 1, ch] = np.sum(np.where(v < 0, g_act[ch] * v, 0.0))
        grad_details[lev] = planes
        g = dilated_filter(gu0, pair.h0, m, -2)
        dh0, dh1 = filter_gradients(banks[lev - 1])
        angle_grads[lev - 1] = dh0 @ t0 + dh1 @ t1

    planes = [g]
    for lev in range(levels, 0, -1):
        planes.extend(grad_details[lev])
    grad_y = np.stack(planes, axis=-3)
    return grad_y, ParamGradient(angles=angle_grads, slopes=slope_grads)


def inverse(x, p):
    """Exact inverse of :func:`forward` on its range.

    Runs the linear analysis, then divides negative detail values by their
    slope (the PReLU inverse); requires strictly positive slopes.
    ``forward(inverse(x, p), p) == x`` to numerical precision.
    """
    from .transform import analyze

    if np.any(p.slopes <= 0):
        raise ValueError("inverse requires strictly positive slopes")
    levels = p.levels
    y = analyze(x, p.angles)
    for lev in range(1, levels + 1):
        base = detail_index(lev, levels)
        for ch in range(3):
            v = y[..., base + ch, :, :]
            y[..., base + ch, :, :] = np.where(v >= 0, v, v / p.slopes[lev - 1, ch])
    return y
