"""Quadrature checks of integral identities on the exact series fields.

All integrals use the trapezoid rule in angle and composite Gauss-Legendre in
radius, with field values and derivatives taken term-wise from the series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modal import MediumConfig, ModalField, jacobi_anger_order
from .special import derivatives, jy

DOUBLING_TOL = 1e-9
PANEL_PHASE = 120.0  # phase of the fastest integrand oscillation per radial panel
CHUNK = 16384


class QuadratureBudgetError(RuntimeError):
    """Doubling the nodes changed a reported integral beyond tolerance."""


@dataclass(frozen=True)
class QuadReport:
    """Both sides of an identity and the verdict at ``tolerance``."""

    lhs: float
    rhs: float
    tolerance: float
    scale: float = 1.0
    name: str = ""

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def relative(self) -> float:
        return self.residual / max(abs(self.lhs), abs(self.rhs), 1.0)

    @property
    def passed(self) -> bool:
        return self.relative <= self.tolerance

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def as_dict(self):
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "residual": self.residual,
                "relative": self.relative, "scale": self.scale, "tolerance": self.tolerance,
                "verdict": self.verdict}


@dataclass(frozen=True)
class MorawetzParams:
    """Multiplier ``x·∇v - i β v / h + α v`` and the quadrature for one domain piece.

    ``domain`` is ``"disk"`` (the unit disk, interior series) or ``"annulus"``
    (``1 < r < R``, incident plus scattered series).
    """

    alpha: float
    beta: float
    h: float
    n_const: float
    domain: str = "disk"
    R: float = 2.0
    n_r: int = 64
    n_theta: int = 256

    def __post_init__(self):
        if self.domain not in ("disk", "annulus"):
            raise ValueError("domain must be 'disk' or 'annulus'")
        if self.n_r < 32 or self.n_theta < 128:
            raise ValueError("need n_r >= 32 and n_theta >= 128")
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.domain == "annulus" and not self.R > 1:
            raise ValueError("annulus needs R > 1")


def _panels(a, b, n, wave):
    """Composite Gauss-Legendre nodes on ``[a, b]``; panel count from ``wave``."""
    npan = max(1, int(math.ceil((b - a) * wave / PANEL_PHASE)))
    x, w = np.polynomial.legendre.leggauss(int(n))
    edges = np.linspace(a, b, npan + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    r = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
    wt = (0.5 * (hi - lo) * w).ravel()
    return r, wt


def _angles(n):
    t = 2.0 * math.pi * np.arange(n) / n
    return t, 2.0 * math.pi / n


def _theta_nodes(n_theta, M):
    # the trapezoid rule is exact for |v|^2 when n_theta > 2M
    return max(int(n_theta), 2 * M + 8)


class _Piece:
    """Field evaluator for one domain piece: values, ∂_r, ∂_θ."""

    def __init__(self, field: ModalField, domain, R):
        self.field = field
        self.domain = domain
        self.R = R
        if domain == "annulus":
            self.M_inc = max(field.M, jacobi_anger_order(field.k * R))
            self.M = self.M_inc
        else:
            self.M = field.M

    def __call__(self, r, t):
        if self.domain == "disk":
            return self.field.interior(r, t)
        return self.field.exterior(r, t, self.M_inc)


def _morawetz_sides(piece, k, cfg, p: MorawetzParams, n_r, n_theta):
    h, a, b = p.h, p.alpha, p.beta
    d = 2
    f = piece.field
    if p.domain == "disk":
        r0, r1, wave = 0.0, 1.0, 2.0 * abs(f.nbar) * k
        # (h^2 Δ + n) v = (n - k^2 h^2 nbar^2) v inside the disk
        lap_coef = p.n_const - (k * h) ** 2 * (cfg.n_i + cfg.z)
    else:
        r0, r1, wave = 1.0, p.R, 2.0 * k
        lap_coef = p.n_const - (k * h) ** 2
    r, wr = _panels(r0, r1, n_r, wave)
    nt = _theta_nodes(n_theta, piece.M)
    t, wt = _angles(nt)
    rows = max(1, CHUNK // nt)
    lhs = scale_vol = 0.0
    for i in range(0, r.size, rows):
        rr, ww = r[i:i + rows], wr[i:i + rows]
        R2, T2 = np.meshgrid(rr, t, indexing="ij")
        v, vr, vt = (x.reshape(R2.shape) for x in piece(R2.ravel(), T2.ravel()))
        grad2 = np.abs(vr) ** 2 + np.abs(vt) ** 2 / R2**2
        Mv = R2 * vr - 1j * (b / h) * v + a * v
        src = 2.0 * np.real(np.conj(Mv) * lap_coef * v)
        area = (ww * rr)[:, None] * wt
        lhs += float(((src + (2 * a - d + 2) * h * h * grad2
                       + (d - 2 * a) * p.n_const * np.abs(v) ** 2) * area).sum())
        scale_vol += float(((np.abs(src) + abs(2 * a - d + 2) * h * h * grad2
                             + abs(d - 2 * a) * abs(p.n_const) * np.abs(v) ** 2) * area).sum())

    def boundary(rr, sign):
        # circle of radius rr with outward normal sign * r_hat
        vv, vvr, vvt = piece(np.full(nt, rr), t)
        dnu = sign * vvr
        xnu = sign * rr
        tang2 = np.abs(vvt) ** 2 / rr**2
        term = xnu * (h * h * np.abs(dnu) ** 2 - h * h * tang2 + p.n_const * np.abs(vv) ** 2)
        term = term + 2 * h * np.real((1j * (b / h) * np.conj(vv) + a * np.conj(vv)) * h * dnu)
        ds = rr * wt
        size = (abs(xnu) * (h * h * np.abs(dnu) ** 2 + h * h * tang2 + abs(p.n_const) * np.abs(vv) ** 2)
                + 2 * h * (abs(b / h) + abs(a)) * np.abs(vv) * h * np.abs(dnu))
        return float((term * ds).sum()), float((size * ds).sum())

    if p.domain == "disk":
        rhs, sc = boundary(1.0, 1.0)
    else:
        outer, so = boundary(p.R, 1.0)
        inner, si = boundary(1.0, -1.0)
        rhs, sc = outer + inner, so + si
    return lhs, rhs, max(scale_vol, sc)


def morawetz_residual(k, cfg: MediumConfig, params: MorawetzParams, tolerance=1e-8,
                      check_doubling=True) -> QuadReport:
    """Both sides of the integrated Morawetz identity on one domain piece.

    The disk piece uses the interior series, the annulus ``1 < r < R`` the
    incident plus scattered series.  ``z`` must be real.  Raises
    :class:`QuadratureBudgetError` when doubling ``n_r`` and ``n_theta``
    moves either side by more than ``1e-9`` relative.
    """
    if abs(complex(cfg.z).imag) > 0:
        raise ValueError("the identity check needs real z")
    field = ModalField(k, cfg)
    piece = _Piece(field, params.domain, params.R)
    lhs, rhs, scale = _morawetz_sides(piece, field.k, cfg, params, params.n_r, params.n_theta)
    if check_doubling:
        l2, r2, _ = _morawetz_sides(piece, field.k, cfg, params, 2 * params.n_r, 2 * params.n_theta)
        ref = max(abs(lhs), abs(rhs), 1.0)
        if abs(l2 - lhs) > DOUBLING_TOL * ref or abs(r2 - rhs) > DOUBLING_TOL * ref:
            raise QuadratureBudgetError(
                f"node doubling moved the sides by {abs(l2 - lhs):.3e}, {abs(r2 - rhs):.3e}")
    return QuadReport(lhs, rhs, tolerance, scale, f"morawetz/{params.domain}")


def _radiation_value(field: ModalField, R, nt):
    h = 1.0 / field.k
    t, wt = _angles(nt)
    u, ur, ut = field.scattered(np.full(nt, R), t)
    ds = R * wt
    a = (R * (h * h * np.abs(ur) ** 2 - h * h * np.abs(ut) ** 2 / R**2 + np.abs(u) ** 2) * ds).sum()
    cross = (np.conj(u) * h * ur * ds).sum()
    d = 2
    value = a - 2 * R * cross.imag + (d - 1) * h * cross.real
    scale = ((R * (h * h * np.abs(ur) ** 2 + h * h * np.abs(ut) ** 2 / R**2 + np.abs(u) ** 2) * ds).sum()
             + (2 * R + (d - 1) * h) * (np.abs(u) * h * np.abs(ur) * ds).sum())
    return float(value), float(scale)


def radiation_boundary_functional(k, cfg: MediumConfig, R, n_theta=256, slack=1e-10) -> QuadReport:
    """Boundary functional of an outgoing field on ``|x| = R``; should be ``<= 0``.

    Reported as ``lhs`` = the functional, ``rhs`` = 0; the verdict is
    ``lhs <= slack * scale`` rather than equality.
    """
    if not R > 1:
        raise ValueError("R must exceed 1")
    field = ModalField(k, cfg)
    nt = _theta_nodes(n_theta, field.M)
    value, scale = _radiation_value(field, R, nt)
    v2, _ = _radiation_value(field, R, 2 * nt)
    if abs(v2 - value) > DOUBLING_TOL * max(scale, 1e-300):
        raise QuadratureBudgetError("angular doubling moved the radiation functional")
    return _SignReport(value, 0.0, slack, scale, "radiation")


@dataclass(frozen=True)
class _SignReport(QuadReport):
    """One-sided check: passes when ``lhs <= tolerance * scale``."""

    @property
    def relative(self) -> float:
        return max(self.lhs, 0.0) / max(self.scale, 1e-300)


def dtn_positivity(m_range, x_grid, tolerance=1e-10) -> QuadReport:
    """``Im(H_m'(x) conj(H_m(x))) = 2/(π x)`` over all ``m`` and ``x``.

    ``lhs``/``rhs`` hold the values at the worst point.
    """
    ms = np.asarray(list(m_range), dtype=int)
    x = np.asarray(list(x_grid), dtype=float)
    if np.any(x <= 0):
        raise ValueError("x must be positive")
    M = int(ms.max())
    J, Y = jy(x, M + 1)
    Jp, Yp = derivatives(J.real), derivatives(Y.real)
    J, Y = J.real, Y.real
    # Im(H' conj H) = J Y' - J' Y for real x; this form cannot overflow
    val = J[:, ms] * Yp[:, ms] - Jp[:, ms] * Y[:, ms]
    ref = (2.0 / (math.pi * x))[:, None] * np.ones(ms.size)
    rel = np.abs(val - ref) / ref
    i, j = np.unravel_index(int(np.argmax(rel)), rel.shape)
    lhs, rhs = float(val[i, j]), float(ref[i, j])
    return _RelReport(lhs, rhs, tolerance, rhs, "dtn")


@dataclass(frozen=True)
class _RelReport(QuadReport):
    @property
    def relative(self) -> float:
        return self.residual / abs(self.rhs)


def _flux_sides(field: ModalField, R, n_r, nt):
    k = field.k
    t, wt = _angles(nt)
    u, ur, _ = field.exterior(np.full(nt, R), t, max(field.M, jacobi_anger_order(k * R)))
    flux = float(np.imag((np.conj(u) * ur * R * wt).sum()))
    r, w = _panels(0.0, 1.0, n_r, 2.0 * abs(field.nbar) * k)
    rows = max(1, CHUNK // nt)
    mass = 0.0
    for i in range(0, r.size, rows):
        R2, T2 = np.meshgrid(r[i:i + rows], t, indexing="ij")
        v = field.interior(R2.ravel(), T2.ravel())[0].reshape(R2.shape)
        mass += float((np.abs(v) ** 2 * (w[i:i + rows] * r[i:i + rows])[:, None] * wt).sum())
    rhs = -k * k * complex(field.cfg.z).imag * mass
    scale = float((np.abs(u) * np.abs(ur) * R * wt).sum()) + k * k * abs(field.cfg.z) * mass
    return flux, rhs, scale


def flux_balance(k, cfg: MediumConfig, R=2.0, n_r=64, n_theta=256, tolerance=1e-6) -> QuadReport:
    """Green's identity ``Im ∮ conj(u) ∂_r u = -k² Im z ∫_disk |u|²`` for the total field.

    For real ``z`` both sides vanish and the check becomes
    ``|flux| <= 1e-10 * scale``.
    """
    if not R > 1:
        raise ValueError("R must exceed 1")
    field = ModalField(k, cfg)
    M = max(field.M, jacobi_anger_order(field.k * R))
    nt = _theta_nodes(n_theta, M)
    lhs, rhs, scale = _flux_sides(field, R, n_r, nt)
    l2, r2, _ = _flux_sides(field, R, 2 * n_r, 2 * nt)
    ref = max(abs(lhs), abs(rhs), 1e-6 * scale)
    if abs(l2 - lhs) > DOUBLING_TOL * ref or abs(r2 - rhs) > DOUBLING_TOL * ref:
        raise QuadratureBudgetError("node doubling moved the flux balance")
    if complex(cfg.z).imag == 0:
        return _AbsReport(lhs, rhs, 1e-10, scale, "flux")
    return _FluxReport(lhs, rhs, tolerance, scale, "flux")


@dataclass(frozen=True)
class _AbsReport(QuadReport):
    @property
    def relative(self) -> float:
        return self.residual / max(self.scale, 1e-300)


@dataclass(frozen=True)
class _FluxReport(QuadReport):
    @property
    def relative(self) -> float:
        return self.residual / max(abs(self.lhs), abs(self.rhs), 1e-300)


__all__ = [
    "QuadReport", "MorawetzParams", "QuadratureBudgetError", "morawetz_residual",
    "radiation_boundary_functional", "dtn_positivity", "flux_balance",
]
