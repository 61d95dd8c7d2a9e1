"""Grayscale image ingestion, noise injection, metrics, and patch sampling.

Images live in [0, 1] as float64 arrays of shape (H, W).  The only file
format is binary PGM (magic ``P5``) with maxval 255: 8-bit values map to
[0, 1] by ``v / 255`` on load, and the writer quantizes with
``round(clamp(v, 0, 1) * 255)`` and emits the canonical header
``P5\\n<w> <h>\\n255\\n``, so canonical files round-trip byte for byte.

Noise is reproducible across platforms by construction: a PCG64 stream
seeded with the given seed supplies two uniform draws per pixel, converted
to Gaussians with the Box-Muller cosine branch in row-major order.  The
noisy image is intentionally not clipped to [0, 1]; only the PGM writer
clamps.
"""

from dataclasses import dataclass

import numpy as np


class PgmFormatError(ValueError):
    """Malformed PGM input; ``offset`` is the failing byte position."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


_WHITESPACE = b" \t\r\n\v\f"


def _next_token(data, pos):
    while pos < len(data):
        ch = data[pos:pos + 1]
        if ch == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif ch in _WHITESPACE:
            pos += 1
        else:
            break
    if pos >= len(data):
        raise PgmFormatError("unexpected end of header", len(data))
    start = pos
    while pos < len(data) and data[pos:pos + 1] not in _WHITESPACE:
        pos += 1
    return data[start:pos], start, pos


def load_pgm(path):
    """Read a binary PGM (P5, maxval 255) into a float image in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P5":
        raise PgmFormatError(f"not a binary PGM (magic {data[:2]!r})", 0)
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        token, start, pos = _next_token(data, pos)
        if not token.isdigit():
            raise PgmFormatError(f"invalid {name} token {token!r}", start)
        fields.append(int(token))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PgmFormatError(f"bad dimensions {width}x{height}", 2)
    if maxval != 255:
        raise PgmFormatError(f"unsupported maxval {maxval} (need 255)", pos)
    if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
        raise PgmFormatError("missing single whitespace before payload", pos)
    pos += 1
    need = width * height
    payload = data[pos:pos + need]
    if len(payload) < need:
        raise PgmFormatError(
            f"truncated payload: expected {need} bytes, found {len(payload)}", pos
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).astype(float) / 255.0
    return pixels.reshape(height, width)


def save_pgm(img, path):
    """Quantize an image to 8 bits and write the canonical P5 file."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise ValueError(f"image must be 2-D, got shape {img.shape}")
    q = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    height, width = img.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (width, height))
        fh.write(q.tobytes())


@dataclass
class NoiseSpec:
    """Additive white Gaussian noise level (in [0,1] units) and seed."""

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def add_awgn(img, spec):
    """Add seeded Gaussian noise; the result is not clipped.

    The generator is fixed for reproducibility: PCG64(seed) uniforms
    mapped through the Box-Muller cosine branch, one pair per pixel in
    row-major order.  sigma = 0 returns the input unchanged.
    """
    img = np.asarray(img, dtype=float)
    if spec.sigma == 0:
        return img.copy()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    u1 = rng.random(img.size)
    u2 = rng.random(img.size)
    z = np.sqrt(-2.0 * np.log(1.0 - u1)) * np.cos(2.0 * np.pi * u2)
    return img + spec.sigma * z.reshape(img.shape)


def psnr(ref, test):
    """Peak signal-to-noise ratio in dB with peak 1.0; inf for equal images."""
    ref = np.asarray(ref, dtype=float)
    test = np.asarray(test, dtype=float)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    mse = np.mean((ref - test) ** 2)
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def extract_patches(img, count, size, seed):
    """Sample ``count`` square patches at seeded uniform positions.

    Patches may overlap; the corner list is a pure function of the seed.
    Returns an array of shape (count, size, size).
    """
    img = np.asarray(img, dtype=float)
    height, width = img.shape
    if size < 1 or size > min(height, width):
        raise ValueError(f"patch size {size} invalid for {height}x{width} image")
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = rng.integers(0, height - size + 1, size=count)
    cols = rng.integers(0, width - size + 1, size=count)
    return np.stack([img[r:r + size, c:c + size] for r, c in zip(rows, cols)])
