"""Integer-order cylinder functions of complex argument.

The heavy lifting is in a compiled kernel (``quasires._bessel``) with a numpy
fallback (``quasires._bessel_py``); the fallback is selected automatically when
the extension cannot be imported, or forced with ``QUASIRES_PURE_PYTHON=1``.

Validity box for the public functions: ``0 <= m <= 1000``, ``|w| <= 1e4``,
``|Im w| <= 50``, and the requested values must be representable in double
precision (no overflow of Y_m, no underflow of J_m).  Y and H are on the
principal branch, cut along the non-positive real axis.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _bessel_py

_kernel = _bessel_py
BACKEND = "python"
if os.environ.get("QUASIRES_PURE_PYTHON", "") != "1":
    try:
        from . import _bessel as _kernel  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        _kernel = _bessel_py

MAX_ORDER = 1000
MAX_ABS = 1e4
MAX_IMAG = 50.0
# log of the largest/smallest magnitude we let through
_LOG_BIG = 690.0


class DomainError(ValueError):
    """Order or argument outside the supported validity box."""


@dataclass(frozen=True)
class CylValue:
    m: int
    w: complex
    j: complex
    jp: complex
    y: complex
    yp: complex
    h1: complex
    h1p: complex


def jy(w, M, want_y=True, method="auto"):
    """Batched J_m(w), Y_m(w) for ``m = 0..M+1``.

    ``w`` is any array-like of complex arguments; the result has shape
    ``(w.size, M + 2)``.  No domain checks: underflowed J values come back as
    0 and overflowed Y values as inf.  ``w = 0`` yields ``J_0 = 1`` and NaN for Y.
    """
    w = np.asarray(w, dtype=complex).ravel()
    J, Y = _kernel.jy_batch(w, int(M), want_y, method)
    # integer-order J is real on the real axis, Y on the positive half-axis;
    # clear the rounding noise so products like Im(H' conj H) stay exact
    real = w.imag == 0
    if real.any():
        J[real] = J[real].real
        if want_y:
            pos = real & (w.real > 0)
            Y[pos] = Y[pos].real
    return J, Y


def derivatives(C):
    """First derivatives from an order table ``C[..., 0..M+1]``.

    Uses ``C_0' = -C_1`` and ``C_m' = (C_{m-1} - C_{m+1}) / 2``; returns orders
    ``0..M``.
    """
    C = np.asarray(C)
    out = np.empty(C.shape[:-1] + (C.shape[-1] - 1,), dtype=C.dtype)
    out[..., 0] = -C[..., 1]
    out[..., 1:] = 0.5 * (C[..., :-2] - C[..., 2:])
    return out


def log_magnitude_estimate(m, w):
    """Rough ``log|Y_m(w)|`` for the representability check (m > |w| regime)."""
    a = abs(w)
    if m == 0 or a >= m:
        return abs(complex(w).imag)
    return math.lgamma(m) + m * math.log(2.0 / a) - math.log(math.pi) + abs(complex(w).imag)


def in_domain(m, w, need_y=True):
    """True if ``(m, w)`` lies inside the documented validity box."""
    w = complex(w)
    if not (0 <= m <= MAX_ORDER) or abs(w) > MAX_ABS or abs(w.imag) > MAX_IMAG:
        return False
    if need_y and (w == 0 or (w.imag == 0 and w.real < 0)):
        return False
    if w != 0 and log_magnitude_estimate(m + 1, w) > _LOG_BIG:
        return False
    return True


def _check(m, w, need_y):
    if int(m) != m or not (0 <= m <= MAX_ORDER):
        raise DomainError(f"order {m} outside 0..{MAX_ORDER}")
    w = complex(w)
    if not (np.isfinite(w.real) and np.isfinite(w.imag)):
        raise DomainError("non-finite argument")
    if abs(w) > MAX_ABS or abs(w.imag) > MAX_IMAG:
        raise DomainError(f"argument {w} outside |w| <= {MAX_ABS}, |Im w| <= {MAX_IMAG}")
    if need_y:
        if w == 0:
            raise DomainError("Y_m is singular at w = 0")
        if w.imag == 0 and w.real < 0:
            raise DomainError("argument on the branch cut (-inf, 0]")
    if w != 0 and log_magnitude_estimate(m + 1, w) > _LOG_BIG:
        raise DomainError(f"J_{m}({w}) / Y_{m}({w}) not representable in double precision")
    return int(m), w


def _finite(*vals):
    for v in vals:
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise DomainError("result overflowed")


def cyl_j(m, w):
    """Bessel function of the first kind J_m(w)."""
    m, w = _check(m, w, need_y=False)
    J, _ = jy([w], m, want_y=False)
    v = complex(J[0, m])
    _finite(v)
    return v


def cyl_y(m, w):
    """Bessel function of the second kind Y_m(w), principal branch."""
    m, w = _check(m, w, need_y=True)
    _, Y = jy([w], m)
    v = complex(Y[0, m])
    _finite(v)
    return v


def cyl_all(m, w):
    """J, Y, H^(1) and their first derivatives at one order and argument."""
    m, w = _check(m, w, need_y=True)
    J, Y = jy([w], m + 1)
    Jp = derivatives(J[0])
    Yp = derivatives(Y[0])
    j, y = complex(J[0, m]), complex(Y[0, m])
    jp, yp = complex(Jp[m]), complex(Yp[m])
    _finite(j, y, jp, yp)
    return CylValue(m=m, w=w, j=j, jp=jp, y=y, yp=yp, h1=j + 1j * y, h1p=jp + 1j * yp)


def wronskian_lattice(n_abs=25, n_arg=13, abs_range=(0.1, 500.0), max_imag=20.0):
    """Fixed test lattice ``|w|`` log-spaced in ``abs_range``, ``|arg w| <= 3pi/4``.

    Points with ``|Im w| > max_imag`` are dropped.
    """
    rad = np.geomspace(abs_range[0], abs_range[1], n_abs)
    ang = np.linspace(-0.75 * math.pi, 0.75 * math.pi, n_arg)
    w = (rad[:, None] * np.exp(1j * ang[None, :])).ravel()
    return w[np.abs(w.imag) <= max_imag]


def wronskian_residuals(w, m_max=200):
    """Scaled Wronskian residuals on ``w`` for orders ``0..m_max``.

    Entry ``[i, m]`` is ``|J_{m+1}Y_m - J_mY_{m+1} - 2/(pi w)|`` over
    ``1 + |J_{m+1}Y_m| + |J_mY_{m+1}|``; NaN where ``(m, w_i)`` is outside the
    validity box.
    """
    w = np.asarray(w, dtype=complex).ravel()
    J, Y = jy(w, m_max)
    with np.errstate(invalid="ignore", over="ignore"):
        a = J[:, 1:m_max + 2] * Y[:, :m_max + 1]
        b = J[:, :m_max + 1] * Y[:, 1:m_max + 2]
        res = np.abs(a - b - 2.0 / (math.pi * w[:, None])) / (1.0 + np.abs(a) + np.abs(b))
    ok = np.array([[in_domain(m, x) for m in range(m_max + 1)] for x in w])
    return np.where(ok, res, np.nan)
