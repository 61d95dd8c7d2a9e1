"""The undecimated 2-D transform is a Parseval tight frame for any angles:
analysis preserves norms, synthesis is the exact adjoint and inverse.

Run:  python3 demos/02_transform_roundtrip.py
"""

import numpy as np

from nldict import analyze, num_channels, synthesize, synthesize_vjp

rng = np.random.default_rng(7)
levels = 4
banks = rng.uniform(-np.pi, np.pi, size=(levels, 2))
x = rng.random((64, 64))

y = analyze(x, banks)
print(f"image 64x64 -> stack {y.shape}  ({num_channels(levels)} channels = "
      f"3*{levels}+1, all full size)")
print(f"norm preservation: |x| = {np.linalg.norm(x):.6f}, "
      f"|y| = {np.linalg.norm(y):.6f}")

xr = synthesize(y, banks)
print(f"perfect reconstruction error: {np.linalg.norm(xr - x):.2e}")

# adjointness <Ax, z> == <x, A^T z>
z = rng.standard_normal(y.shape)
lhs = np.sum(analyze(x, banks) * z)
rhs = np.sum(x * synthesize(z, banks))
print(f"adjointness gap: {abs(lhs - rhs):.2e}")

# the coefficient layout: coarse approximation first, then detail triples
# from the deepest level to the finest
labels = ["LL4"] + [f"{n}{lev}" for lev in range(levels, 0, -1)
                    for n in ("LH", "HL", "HH")]
energy = np.sum(y ** 2, axis=(1, 2))
print("\nchannel energy split (%):")
for lab, e in zip(labels, 100 * energy / np.sum(energy)):
    print(f"  {lab:4s} {e:6.2f}")

# gradients with respect to the angles flow through the synthesis; use a
# thresholded stack so the residual (and hence the gradient) is nonzero
y_sparse = np.where(np.abs(y) > 0.1, y, 0.0)
out, cache = synthesize(y_sparse, banks, want_cache=True)
_, dtheta = synthesize_vjp(out - x, banks, cache)
print(f"\nangle gradient of 0.5*|synthesize(y_sparse) - x|^2 "
      f"(shape {dtheta.shape}):")
print(dtheta)
