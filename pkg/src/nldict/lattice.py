"""Rotation-lattice parameterization of 2-channel orthonormal filter pairs.

A pair of conjugate quadrature filters (CQF) of length ``2n`` is generated
from ``n`` rotation angles through the cascade of 2x2 polyphase factors

    P(z) = Q(theta_n) L(z) Q(theta_{n-1}) L(z) ... L(z) Q(theta_1),

where ``Q(t)`` is the plane rotation ``[[cos t, -sin t], [sin t, cos t]]``
and ``L(z) = diag(z^-1, 1)`` is a one-sample delay on the first phase.
The product is paraunitary for every choice of angles, so the resulting
filters are orthonormal by construction; no constraint on the angles is
ever needed.

Tap convention
--------------
The polyphase entries ``P[p][q](z) = sum_j c_j z^-j`` are mapped to causal
analysis filters by interleaving the two phases,

    h_p[2*j + q] = coeff of z^-j in P[p][q](z),

and the *second* row of the cascade is the lowpass branch ``h0`` while the
first row is the highpass branch ``h1``.  With this convention the angle
pair (pi/4, 0) yields exactly the Haar lowpass ``(1/sqrt2, 1/sqrt2, 0, 0)``
(the highpass comes out delayed by two taps, which is harmless: the 2-D
transform uses periodic indexing, and its synthesis is the exact adjoint).
Angles are used as given; they are never wrapped or normalized.
"""

from collections import namedtuple

import numpy as np

FilterPair = namedtuple("FilterPair", ["h0", "h1"])


def _check_angles(theta):
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size < 1:
        raise ValueError(
            "lattice angles must be a 1-D sequence with at least one entry, "
            f"got shape {theta.shape}"
        )
    return theta


def _rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _rotation_deriv(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[-s, -c], [c, -s]])


def _cascade(rotations):
    """Multiply out Q_n L(z) Q_{n-1} ... L(z) Q_1 for constant 2x2 factors.

    Returns the polynomial matrix as an array of shape (n, 2, 2) whose
    slice ``[j]`` holds the coefficient of z^-j.
    """
    poly = rotations[0][np.newaxis]  # start with Q_1, degree 0
    for q in rotations[1:]:
        deg = poly.shape[0]
        nxt = np.zeros((deg + 1, 2, 2))
        # L(z) * poly: first row gains one delay, second row is unchanged.
        nxt[1:, 0, :] += poly[:, 0, :]
        nxt[:deg, 1, :] += poly[:, 1, :]
        poly = np.einsum("ab,jbc->jac", q, nxt)
    return poly


def _poly_to_taps(poly):
    """Interleave polyphase coefficients into time-domain taps.

    Row 1 of the cascade becomes the lowpass h0, row 0 the highpass h1.
    """
    n = poly.shape[0]
    taps = np.zeros((2, 2 * n))
    for q in (0, 1):
        taps[0, q::2] = poly[:, 1, q]
        taps[1, q::2] = poly[:, 0, q]
    return FilterPair(h0=taps[0], h1=taps[1])


def lattice_to_filters(theta):
    """Build the analysis filter pair for the given rotation angles.

    Parameters
    ----------
    theta : sequence of float
        Rotation angles in radians, one per lattice stage.  Two angles
        give the length-4 filters used throughout this package.

    Returns
    -------
    FilterPair
        ``h0`` (lowpass) and ``h1`` (highpass) tap arrays of length
        ``2 * len(theta)``, each with unit Euclidean norm and satisfying
        the even-shift orthogonality of a CQF pair.
    """
    theta = _check_angles(theta)
    poly = _cascade([_rotation(t) for t in theta])
    return _poly_to_taps(poly)


def filter_gradients(theta):
    """Differentiate the filter taps with respect to each angle.

    The derivative replaces exactly one rotation in the cascade by its
    elementwise derivative (cos -> -sin, sin -> cos) and re-multiplies.

    Parameters
    ----------
    theta : sequence of float
        Rotation angles in radians.

    Returns
    -------
    (dh0, dh1) : ndarray pair, each of shape (len(theta), 2 * len(theta))
        Row ``i`` holds d taps / d theta_i.
    """
    theta = _check_angles(theta)
    rotations = [_rotation(t) for t in theta]
    n = theta.size
    dh0 = np.zeros((n, 2 * n))
    dh1 = np.zeros((n, 2 * n))
    for i in range(n):
        factors = list(rotations)
        factors[i] = _rotation_deriv(theta[i])
        pair = _poly_to_taps(_cascade(factors))
        dh0[i] = pair.h0
        dh1[i] = pair.h1
    return dh0, dh1


def synthesis_filters(fp):
    """Time-reverse an analysis pair, giving the adjoint (synthesis) taps."""
    return FilterPair(h0=np.asarray(fp.h0)[::-1].copy(),
                      h1=np.asarray(fp.h1)[::-1].copy())
