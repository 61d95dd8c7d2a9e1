"""Walk through the rotation-lattice filter construction.

Every angle pair yields an orthonormal filter pair; special angles recover
classic wavelets.  Run:  python3 demos/01_lattice_filters.py
"""

import numpy as np

from nldict import filter_gradients, lattice_to_filters, synthesis_filters

np.set_printoptions(precision=4, suppress=True)

# --- special points -------------------------------------------------------
print("Haar point (pi/4, 0):")
fp = lattice_to_filters([np.pi / 4, 0.0])
print("  h0 =", fp.h0, " h1 =", fp.h1)

print("\nDaubechies-2 point (pi/6, pi/12):")
fp = lattice_to_filters([np.pi / 6, np.pi / 12])
print("  h0 =", fp.h0)
print("  (the classic maximally-flat length-4 lowpass)")

print("\nPure delays at (0, 0):")
fp = lattice_to_filters([0.0, 0.0])
print("  h0 =", fp.h0, " h1 =", fp.h1)

# --- orthonormality holds everywhere --------------------------------------
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(500):
    fp = lattice_to_filters(rng.uniform(-np.pi, np.pi, 2))
    gram = [abs(fp.h0 @ fp.h0 - 1), abs(fp.h1 @ fp.h1 - 1), abs(fp.h0 @ fp.h1)]
    worst = max(worst, *gram)
print(f"\nworst orthonormality defect over 500 random angle pairs: {worst:.2e}")

# --- smooth dependence on angles ------------------------------------------
theta = np.array([0.9, -0.4])
dh0, dh1 = filter_gradients(theta)
eps = 1e-6
fd = (lattice_to_filters(theta + [eps, 0]).h0
      - lattice_to_filters(theta - [eps, 0]).h0) / (2 * eps)
print(f"\nd h0 / d theta_1 = {dh0[0]}")
print(f"finite difference = {fd}")

# --- synthesis = time reversal --------------------------------------------
sf = synthesis_filters(lattice_to_filters(theta))
print("\nsynthesis lowpass is the flipped analysis lowpass:",
      np.array_equal(sf.h0, lattice_to_filters(theta).h0[::-1]))
