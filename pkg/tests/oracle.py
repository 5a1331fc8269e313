"""Independent references: mpmath Bessel functions and a chunked phase-unwrap winding."""
from __future__ import annotations

import mpmath
import numpy as np

mpmath.mp.dps = 40


def bessel_jy(m, w):
    """J_m(w), Y_m(w) at 40 digits, rounded to complex128."""
    w = mpmath.mpc(complex(w))
    return complex(mpmath.besselj(m, w)), complex(mpmath.bessely(m, w))


def seeded_points(n=1000, seed=20240917):
    """Orders and arguments inside the validity box with representable values."""
    rng = np.random.default_rng(seed)
    m = rng.integers(0, 120, n)
    mod = np.exp(rng.uniform(np.log(0.05), np.log(300.0), n))
    ang = rng.uniform(-0.95 * np.pi, 0.95 * np.pi, n)
    w = mod * np.exp(1j * ang)
    w = w.real + 1j * np.clip(w.imag, -20.0, 20.0)
    return m, w


def chunked_winding(F, center, radius, n=100_000, chunk=10_000):
    """Sum of wrapped phase increments over ``n`` equispaced contour points.

    ``F`` maps a 1-D array of points to an ``(points, columns)`` table.
    """
    t = np.linspace(0.0, 2.0 * np.pi, n + 1)
    z = complex(center) + radius * np.exp(1j * t)
    total, prev = None, None
    for s in range(0, n + 1, chunk):
        v = np.atleast_2d(np.asarray(F(z[s:s + chunk])))
        if prev is not None:
            v = np.vstack([prev, v])
        inc = np.angle(v[1:] / v[:-1]).sum(axis=0)
        total = inc if total is None else total + inc
        prev = v[-1:]
    return np.rint(total / (2.0 * np.pi)).astype(int)
