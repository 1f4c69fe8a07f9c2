"""Prescribed deformations and loads used by the experiments.

The pincers closing map is written in rotated polar coordinates
``r = |x|``, ``t = atan2(-x2, -x1)`` as

    y(r, t) = -r (cos(a t), sin(a t)),

which is the identity for a = 1 and rotates each point about the origin by
the angle (a - 1) t, so the two arms of the pincers swing toward (and for
a large enough past) each other.  Its Jacobian determinant equals ``a``
wherever the map is smooth; the origin is singular and the positive x1
axis carries the angular branch cut, so meshes interpolating this map must
keep material away from both (the illustration geometry uses a hinge
hole).
"""

from __future__ import annotations

import numpy as np


def pincers_map(a: float = 1.1):
    """Closing map with angular stretch ``a``; see module docstring.

    Returns a callable ``fmap(x1, x2) -> (y, jac, cross)`` with shapes
    (2, n), (2, 2, n) and (2, n) suitable for Hermite interpolation.
    """

    def fmap(x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        r2 = x1 * x1 + x2 * x2
        r = np.sqrt(r2)
        t = np.arctan2(-x2, -x1)
        c = np.cos(a * t)
        s = np.sin(a * t)

        with np.errstate(invalid="ignore", divide="ignore"):
            r1 = x1 / r
            rr2 = x2 / r
            t1 = -x2 / r2
            t2 = x1 / r2
            r12 = -x1 * x2 / r2 ** 1.5
            t12 = (2 * x2 * x2 - r2) / (r2 * r2)

        y = np.stack([-r * c, -r * s])
        j11 = -r1 * c + r * a * s * t1
        j12 = -rr2 * c + r * a * s * t2
        j21 = -r1 * s - r * a * c * t1
        j22 = -rr2 * s - r * a * c * t2
        jac = np.stack([np.stack([j11, j12]), np.stack([j21, j22])])

        mix = r1 * t2 + rr2 * t1
        c1 = (-r12 * c + a * s * mix + a * a * r * c * t1 * t2
              + a * r * s * t12)
        c2 = (-r12 * s - a * c * mix + a * a * r * s * t1 * t2
              - a * r * c * t12)
        cross = np.stack([c1, c2])
        return y, jac, cross

    return fmap


def model2_body_force(nu: float, closing: bool = True):
    """Vertical load density g(x) = +-nu (0, H(x1) sign(x2)) on the arms.

    The load enters the energy as + integral of g . y, so a positive
    vertical component on the upper arm (sign factor +1) pulls that arm
    down: ``closing=True`` presses the two arms together, which is the
    loading the experiments need.  ``closing=False`` gives the opposite
    orientation (the same density with a leading minus sign).

    The Heaviside/sign factors are evaluated at quadrature points only;
    points exactly on x2 = 0 get sign zero.
    """
    s = 1.0 if closing else -1.0

    def force(xy):
        xy = np.asarray(xy, dtype=float)
        f = np.zeros_like(xy)
        f[..., 1] = s * nu * (xy[..., 0] > 0) * np.sign(xy[..., 1])
        return f

    return force
