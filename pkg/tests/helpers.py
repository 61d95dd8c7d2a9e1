"""Shared fixtures-in-spirit: synthetic data builders, denoising helpers,
and an in-process CLI runner."""

import contextlib
import io

import numpy as np

from nldict.cli import main as _cli_main
from nldict.dictionary import CnldParams, forward
from nldict.image import psnr
from nldict.sparse import IstaConfig, ista
from nldict.transform import num_channels


def run_cli(*argv):
    """Invoke the CLI in-process; returns (exit_code, stdout_text)."""
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = _cli_main(list(argv))
    return code, buf.getvalue()


def make_generative_dataset(rng, p_star, n_patches, shape, k):
    """Patches synthesized from known parameters and k-sparse codes."""
    channels = num_channels(p_star.levels)
    xs = []
    for _ in range(n_patches):
        y = np.zeros((channels,) + shape)
        flat = y.ravel()
        idx = rng.choice(flat.size, size=k, replace=False)
        flat[idx] = rng.uniform(0.5, 1.5, size=k) * rng.choice([-1.0, 1.0], size=k)
        xs.append(forward(y, p_star))
    return np.stack(xs)


def make_separated_dataset(rng, p_star, n_patches, size, natoms, min_dist):
    """Generative patches whose atoms sit at spatially well-separated
    positions (toroidal distance), so their supports are recoverable and
    the training loss tracks parameter mismatch rather than coding error."""
    channels = num_channels(p_star.levels)
    xs = []
    for _ in range(n_patches):
        pts = []
        while len(pts) < natoms:
            r, c = rng.integers(0, size, 2)
            if all(min(abs(r - rr), size - abs(r - rr)) ** 2
                   + min(abs(c - cc), size - abs(c - cc)) ** 2
                   >= min_dist ** 2 for rr, cc in pts):
                pts.append((int(r), int(c)))
        y = np.zeros((channels, size, size))
        for r, c in pts:
            ch = int(rng.integers(0, channels))
            y[ch, r, c] = rng.uniform(0.8, 1.5) * (1.0 if rng.random() < 0.5 else -1.0)
        xs.append(forward(y, p_star))
    return np.stack(xs)


def perturbed(p, rng, angle_scale=0.15, slope_scale=0.2):
    q = p.copy()
    q.angles += rng.uniform(-angle_scale, angle_scale, size=q.angles.shape)
    q.slopes *= 1.0 + rng.uniform(-slope_scale, slope_scale, size=q.slopes.shape)
    return q


def denoise(params, noisy, lam, iters=60, tol=1e-5):
    """One ISTA denoising run; returns the reconstructed image."""
    cfg = IstaConfig(lam=lam, step=1.0, max_iters=iters, tol=tol)
    y, _ = ista(noisy, params, cfg)
    return forward(y, params)


def best_denoise(params, noisy, clean, lambdas, iters=60, tol=1e-5):
    """Grid-tune the l1 weight; returns (best_psnr, best_lam, best_image)."""
    best = (-np.inf, None, None)
    for lam in lambdas:
        out = denoise(params, noisy, lam, iters=iters, tol=tol)
        score = psnr(clean, out)
        if score > best[0]:
            best = (score, lam, out)
    return best
