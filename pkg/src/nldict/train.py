"""Sparsity-aware dictionary learning over patch minibatches.

Each epoch shuffles the patch set with a seeded generator and walks it in
minibatches.  A batch is processed in two half-steps: (a) its coefficient
vectors are refined by a few warm-started sparse-coding iterations (ISTA by
default, or top-K projected gradient in ``iht`` mode) against the current
parameters, then (b) the parameters take one SGD step on the batch-mean
reconstruction loss, after which the PReLU slopes are projected back into
their positivity bounds so the synthesizer stays invertible.  Coefficients
persist across epochs (warm start); on the first epoch they start from the
plain analysis of each patch.

Everything is deterministic given the config: identical seeds and patches
reproduce bit-identical parameters.
"""

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from .dictionary import CnldParams, backward, forward, pack, unpack
from .image import NoiseSpec, add_awgn
from .sparse import IstaConfig, iht, ista
from .transform import analyze


@dataclass
class TrainConfig:
    """Learning hyperparameters.

    ``sparse_mode`` selects the coding half-step: "ista" uses ``lam``,
    "iht" uses the hard budget ``k``.  ``sparse_iters`` bounds the coding
    iterations per batch per epoch (0 keeps the warm-start coefficients
    untouched).  ``noise_sigma`` > 0 corrupts the training patches once, up
    front, with seeded Gaussian noise; the default trains on clean patches.
    """

    epochs: int = 10
    minibatch: int = 128
    patches_per_image: int = 256
    patch_size: int = 32
    learning_rate: float = 0.01
    sparse_mode: str = "ista"
    lam: float = 0.1
    k: int = 0
    rng_seed: int = 0
    slope_bounds: tuple = (1e-3, 10.0)
    sparse_iters: int = 20
    sparse_tol: float = 1e-4
    approx_weight: float = 0.0
    noise_sigma: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.minibatch < 1:
            raise ValueError("minibatch must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.sparse_mode not in ("ista", "iht"):
            raise ValueError(f"unknown sparse_mode {self.sparse_mode!r}")
        if self.sparse_mode == "iht" and self.k < 1:
            raise ValueError("iht mode needs k >= 1")
        lo, hi = self.slope_bounds
        if not 0 < lo <= hi:
            raise ValueError("slope_bounds must satisfy 0 < lo <= hi")
        if self.sparse_iters < 0:
            raise ValueError("sparse_iters must be >= 0")


@dataclass
class TrainReport:
    """One entry per epoch: mean loss, parameter hash, wall-clock seconds."""

    entries: list = field(default_factory=list)

    @property
    def mean_losses(self):
        return np.array([e["mean_loss"] for e in self.entries])


def init_udht(levels):
    """Haar-initialized parameters: the parameter-free baseline transform.

    Angles (pi/4, 0) at every level and unit slopes make the synthesizer
    coincide with the undecimated Haar synthesis, so analysis followed by
    the forward map is the identity at this initialization.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    return CnldParams(angles=np.array([[np.pi / 4, 0.0]] * levels),
                      slopes=np.ones((levels, 3)))


def param_hash(p):
    """Stable hex digest of the packed parameter vector."""
    return hashlib.sha256(pack(p).tobytes()).hexdigest()


def batch_loss_and_gradient(x, y, p):
    """Mean reconstruction loss over a batch and its parameter gradient.

    The batch gradient equals the mean of the per-sample gradients (one
    backward pass computes the sum; dividing by the batch size gives the
    mean in a fixed reduction order).
    """
    out, cache = forward(y, p, want_cache=True)
    resid = x - out
    n = x.shape[0] if x.ndim == 3 else 1
    loss = 0.5 * float(np.sum(resid * resid)) / n
    _, grad_p = backward(y, p, resid, cache)
    return loss, pack(grad_p) / n


def _code_batch(x, y0, p, cfg):
    if cfg.sparse_iters == 0:
        return y0
    if cfg.sparse_mode == "ista":
        icfg = IstaConfig(lam=cfg.lam, step=1.0, max_iters=cfg.sparse_iters,
                          tol=cfg.sparse_tol, backtracking=True,
                          approx_weight=cfg.approx_weight)
        y, _ = ista(x, p, icfg, y0=y0)
    else:
        y, _ = iht(x, p, cfg.k, max_iters=cfg.sparse_iters,
                   tol=cfg.sparse_tol, y0=y0)
    return y


def train(patches, cfg, init):
    """Alternate sparse coding and SGD parameter updates over the patches.

    Parameters
    ----------
    patches : ndarray (S, h, w) or sequence of equal-shape 2-D arrays
        Training patches in [0, 1] (clean; see ``cfg.noise_sigma``).
    cfg : TrainConfig
    init : CnldParams
        Starting parameters, e.g. :func:`init_udht`.

    Returns
    -------
    (CnldParams, TrainReport)

    Raises
    ------
    RuntimeError
        If the loss stops being finite (reports epoch, batch, parameters).
    """
    x = np.stack([np.asarray(pt, dtype=float) for pt in patches])
    if x.ndim != 3 or x.shape[0] == 0:
        raise ValueError("patches must be a nonempty set of equal-shape 2-D arrays")
    n_patches = x.shape[0]
    if cfg.minibatch > n_patches:
        raise ValueError(
            f"minibatch {cfg.minibatch} exceeds patch count {n_patches}"
        )
    levels = init.levels
    if min(x.shape[1:]) < 2 ** levels:
        raise ValueError(
            f"patch size {x.shape[1:]} too small for {levels} levels"
        )
    if cfg.noise_sigma > 0:
        x = add_awgn(x, NoiseSpec(sigma=cfg.noise_sigma, seed=cfg.noise_seed))

    p = init.copy()
    codes = analyze(x, p.angles)
    rng = np.random.default_rng(cfg.rng_seed)
    report = TrainReport()
    lo, hi = cfg.slope_bounds

    for epoch in range(1, cfg.epochs + 1):
        tic = time.perf_counter()
        order = rng.permutation(n_patches)
        loss_sum = 0.0
        for b, start in enumerate(range(0, n_patches, cfg.minibatch)):
            sel = order[start:start + cfg.minibatch]
            xb = x[sel]
            yb = _code_batch(xb, codes[sel], p, cfg)
            codes[sel] = yb
            loss, grad = batch_loss_and_gradient(xb, yb, p)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, batch {b}; "
                    f"parameters = {pack(p).tolist()}"
                )
            loss_sum += loss * sel.size
            vec = pack(p) - cfg.learning_rate * grad
            p = unpack(vec, levels)
            p.slopes = np.clip(p.slopes, lo, hi)
        report.entries.append({
            "epoch": epoch,
            "mean_loss": loss_sum / n_patches,
            "param_hash": param_hash(p),
            "seconds": time.perf_counter() - tic,
        })
    return p, report
