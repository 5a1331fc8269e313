"""Mode-by-mode solution of plane-wave transmission through a penetrable unit disk.

Inside the disk the field solves ``Δu + k²(n_i + z)u = 0``, outside
``Δu + k²u = 0``; ``u`` and ``∂_r u`` are continuous across ``r = 1`` and the
scattered part is outgoing.  With ``nbar = sqrt(n_i + z)`` and incident mode
data ``c_m = i^m exp(-i m θ_inc)`` the per-mode unknowns solve

    a_m J_m(nbar k)        - b_m H_m(k)  = c_m J_m(k)
    a_m nbar J_m'(nbar k)  - b_m H_m'(k) = c_m J_m'(k)

whose determinant is ``D_m = nbar J_m'(nbar k) H_m(k) - J_m(nbar k) H_m'(k)``.
Negative modes carry the same transfer ratios, so every series below sums
``m = 0..M`` with the weights ``ε_0 = 1``, ``ε_m = 2``.
"""
from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import special
from .special import derivatives, jy

MAX_MODES = 1000
NEAR_SINGULAR = 1e-30
BLOCK = 4096


class NearSingularError(ArithmeticError):
    """|D_m| is below the near-singular threshold (the configuration sits on a pole)."""


class CapExceededError(RuntimeError):
    """The mode-count cap was reached before the tail test succeeded."""


@dataclass(frozen=True)
class MediumConfig:
    """Unit disk with interior index ``n_i + z`` hit by a plane wave.

    Parameters
    ----------
    n_i : float
        Unperturbed interior index, ``> 0``.
    z : complex
        Perturbation added inside the disk; ``|z| < n_i``.
    theta_inc : float
        Propagation angle of the incident plane wave in radians.
    """

    n_i: float
    z: complex = 0j
    theta_inc: float = 0.0

    def __post_init__(self):
        n = float(self.n_i)
        z = complex(self.z)
        if not (math.isfinite(n) and n > 0):
            raise ValueError(f"n_i must be positive, got {self.n_i}")
        if not (cmath.isfinite(z) and abs(z) < n):
            raise ValueError(f"need |z| < n_i, got z={z}, n_i={n}")
        if not math.isfinite(float(self.theta_inc)):
            raise ValueError("theta_inc must be finite")
        object.__setattr__(self, "n_i", n)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "theta_inc", float(self.theta_inc))

    @property
    def radius(self) -> float:
        return 1.0

    def with_z(self, z) -> "MediumConfig":
        return MediumConfig(self.n_i, z, self.theta_inc)


def refraction_root(cfg: MediumConfig) -> complex:
    """Principal square root of ``n_i + z`` (real part positive)."""
    return cmath.sqrt(cfg.n_i + cfg.z)


def _check_k(k):
    k = float(k)
    if not (math.isfinite(k) and k > 0):
        raise ValueError(f"k must be positive, got {k}")
    return k


def _check_box(M, *args):
    for w in args:
        special._check(M, w, need_y=False)


def _jj(w, M):
    J, _ = jy(w, M, want_y=False)
    return J


def _hankel(x, M):
    J, Y = jy(x, M)
    return J + 1j * Y


def _second(C, Cp, w):
    """Second derivatives from the Bessel ODE, orders 0..M."""
    m = np.arange(Cp.shape[-1])
    w = np.asarray(w)[..., None] if np.ndim(w) else w
    return -Cp / w - (1.0 - (m * m) / (w * w)) * C[..., : Cp.shape[-1]]


def _incident_phase(M, theta_inc):
    m = np.arange(M + 1)
    return (1j) ** (m % 4) * np.exp(-1j * m * theta_inc)


def determinants(k, cfg: MediumConfig, M: int, with_derivatives=False):
    """D_0..D_M at one frequency.

    Returns an array of shape ``(M + 1,)``; with ``with_derivatives`` also
    ``∂D/∂k`` (at fixed ``nbar``) and ``∂D/∂z``.
    """
    nb = refraction_root(cfg)
    return determinant_table(k, cfg.n_i, [cfg.z], M, with_derivatives, nbar=[nb])


def determinant_table(k, n_i, z, M, with_derivatives=False, nbar=None, hankel=None):
    """D_m(k, z) for many complex ``z`` (rows) and modes ``0..M`` (columns).

    ``k`` may be complex here (the resonance search evaluates off the real
    axis).  ``hankel`` optionally passes precomputed ``(H, H')`` at ``k``.
    Returns ``D`` and, if requested, ``(D, dD/dk, dD/dz)`` as arrays squeezed
    to one row when a single ``z`` is given.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    nb = np.sqrt(n_i + z) if nbar is None else np.asarray(nbar, dtype=complex)
    kk = complex(k)
    w = nb * kk
    J = _jj(w, M + 1)
    Jp = derivatives(J)[:, : M + 1]
    Jm = J[:, : M + 1]
    if hankel is None:
        Hall = _hankel([kk], M + 1)[0]
        H = Hall[: M + 1]
        Hp = derivatives(Hall)[: M + 1]
    else:
        H, Hp = hankel
    nbc = nb[:, None]
    D = nbc * Jp * H - Jm * Hp
    if not with_derivatives:
        return D[0] if z.size == 1 else D
    Jpp = _second(Jm, Jp, w)
    Hpp = _second(H, Hp, kk)
    dDdk = nbc * nbc * Jpp * H - Jm * Hpp
    dDdn = Jp * H + nbc * kk * Jpp * H - kk * Jp * Hp
    dDdz = dDdn / (2.0 * nbc)
    if z.size == 1:
        return D[0], dDdk[0], dDdz[0]
    return D, dDdk, dDdz


def term_scale(k, n_i, z, M, hankel=None):
    """``|nbar J' H| + |J H'|``, the size of the two terms making up D_m."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    nb = np.sqrt(n_i + z)
    kk = complex(k)
    J = _jj(nb * kk, M + 1)
    Jp = derivatives(J)[:, : M + 1]
    if hankel is None:
        Hall = _hankel([kk], M + 1)[0]
        H, Hp = Hall[: M + 1], derivatives(Hall)[: M + 1]
    else:
        H, Hp = hankel
    s = np.abs(nb[:, None] * Jp * H) + np.abs(J[:, : M + 1] * Hp)
    return s[0] if z.size == 1 else s


def modal_determinant(m: int, k: float, cfg: MediumConfig) -> complex:
    """Transmission determinant D_m at real frequency ``k``.

    Examples
    --------
    >>> cfg = MediumConfig(1.0)
    >>> abs(abs(modal_determinant(3, 2.0, cfg)) - 2 / (math.pi * 2.0)) < 1e-14
    True
    """
    k = _check_k(k)
    nb = refraction_root(cfg)
    _check_box(m + 1, nb * k)
    special._check(m + 1, k, need_y=True)
    return complex(determinants(k, cfg, m)[m])


@dataclass(frozen=True)
class ModalSolution:
    """Coefficients of one angular mode.

    ``a_m`` multiplies ``J_m(nbar k r) e^{imθ}`` inside, ``b_m`` multiplies
    ``H_m(k r) e^{imθ}`` outside; ``D_m`` is the determinant of the system.
    """

    m: int
    k: float
    a_m: complex
    b_m: complex
    D_m: complex
    nbar: complex
    c_m: complex

    def matching_residuals(self):
        """Relative mismatch of value and radial derivative at ``r = 1``."""
        m, k, nb = self.m, self.k, self.nbar
        J = _jj([nb * k], m + 1)[0]
        Jk = _jj([k], m + 1)[0]
        Hk = _hankel([k], m + 1)[0]
        Jp, Jkp, Hkp = derivatives(J)[m], derivatives(Jk)[m], derivatives(Hk)[m]
        t_in = (self.a_m * J[m], self.a_m * nb * Jp)
        t_out = (self.c_m * Jk[m] + self.b_m * Hk[m], self.c_m * Jkp + self.b_m * Hkp)
        scale = (
            abs(t_in[0]) + abs(self.c_m * Jk[m]) + abs(self.b_m * Hk[m]),
            abs(t_in[1]) + abs(self.c_m * Jkp) + abs(self.b_m * Hkp),
        )
        return tuple(abs(t_in[i] - t_out[i]) / max(scale[i], 1e-300) for i in range(2))


def _transfer(k, cfg, M):
    """Per-mode ``(a/c, b/c, D)`` for ``m = 0..M``, plus the Bessel tables used."""
    nb = refraction_root(cfg)
    w = nb * k
    J = _jj([w], M + 1)[0]
    Jk, Yk = jy([k], M + 1)
    Hk = Jk[0] + 1j * Yk[0]
    Jk = Jk[0]
    n = M + 1
    Jp, Jkp, Hkp = derivatives(J)[:n], derivatives(Jk)[:n], derivatives(Hk)[:n]
    J, Jk, Hk = J[:n], Jk[:n], Hk[:n]
    D = nb * Jp * Hk - J * Hkp
    wr = -2j / (math.pi * k)
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = wr / D
        tb = (J * Jkp - nb * Jp * Jk) / D
    return ta, tb, D, dict(J=J, Jp=Jp, Jk=Jk, Jkp=Jkp, Hk=Hk, Hkp=Hkp)


def modal_coefficients(m: int, k: float, cfg: MediumConfig) -> ModalSolution:
    """Solve the 2x2 interface system for mode ``m``.

    Raises
    ------
    NearSingularError
        If ``|D_m| < 1e-30``.
    """
    k = _check_k(k)
    nb = refraction_root(cfg)
    _check_box(m + 1, nb * k)
    special._check(m + 1, k, need_y=True)
    ta, tb, D, _ = _transfer(k, cfg, m)
    if not abs(D[m]) >= NEAR_SINGULAR:
        raise NearSingularError(f"|D_{m}| = {abs(D[m]):.3e} at k={k}, z={cfg.z}")
    c = complex(_incident_phase(m, cfg.theta_inc)[m])
    return ModalSolution(m=m, k=k, a_m=c * complex(ta[m]), b_m=c * complex(tb[m]),
                         D_m=complex(D[m]), nbar=nb, c_m=c)


def truncation_order(k: float, cfg: MediumConfig, tail_tol: float = 1e-14) -> int:
    """Number of modes needed to synthesise the field to ``tail_tol``.

    The tail test runs on the boundary traces ``|a_m J_m(nbar k)| + |b_m H_m(k)|``
    (the size of mode ``m`` of the field on ``r = 1``), starting from
    ``ceil(|nbar| k) + 8``.
    """
    k = _check_k(k)
    if not 0 < tail_tol < 1:
        raise ValueError("tail_tol must lie in (0, 1)")
    nb = refraction_root(cfg)
    M = int(math.ceil(abs(nb) * k)) + 8
    chunk = max(16, M // 2)
    while True:
        top = min(M + chunk, MAX_MODES)
        ta, tb, D, t = _transfer(k, cfg, top)
        with np.errstate(invalid="ignore", over="ignore"):
            trace = np.abs(ta * t["J"]) + np.abs(tb * t["Hk"])
        trace = np.where(np.isfinite(trace), trace, np.inf)
        run = np.maximum.accumulate(trace)
        for mm in range(M, top + 1):
            if trace[mm] < tail_tol * run[mm]:
                return mm
        if top >= MAX_MODES:
            raise CapExceededError(f"no truncation below {MAX_MODES} modes at k={k}")
        M = top + 1
        chunk *= 2


def jacobi_anger_order(x_max: float, tail_tol: float = 1e-16) -> int:
    """Smallest ``M`` with ``|J_M(x)| < tail_tol`` for all ``0 <= x <= x_max``."""
    M = int(math.ceil(x_max)) + 8
    while M < 4 * MAX_MODES:
        # J_m(x) is increasing in x for x < m, so the right end is the worst case
        J = _jj([x_max], M)[0]
        if abs(J[M]) < tail_tol and M > x_max:
            return M
        M += 4
    raise CapExceededError("Jacobi-Anger truncation cap")


class ModalField:
    """Truncated series for the interior, scattered and incident fields.

    Each evaluator takes polar coordinates ``r``, ``theta`` (same shape) and
    returns ``(u, du/dr, du/dθ)`` flattened.

    Parameters
    ----------
    k : float
    cfg : MediumConfig
    M : int, optional
        Highest mode; defaults to :func:`truncation_order`.
    """

    def __init__(self, k, cfg: MediumConfig, M=None, tail_tol=1e-14):
        self.k = _check_k(k)
        self.cfg = cfg
        self.nbar = refraction_root(cfg)
        self.M = truncation_order(self.k, cfg, tail_tol) if M is None else int(M)
        ta, tb, D, _ = _transfer(self.k, cfg, self.M)
        if np.any(~(np.abs(D) >= NEAR_SINGULAR)):
            bad = int(np.flatnonzero(~(np.abs(D) >= NEAR_SINGULAR))[0])
            raise NearSingularError(f"|D_{bad}| below {NEAR_SINGULAR} at k={k}, z={cfg.z}")
        self.ta, self.tb, self.D = ta, tb, D
        m = np.arange(self.M + 1)
        self._weight = np.where(m == 0, 1.0, 2.0) * (1j) ** (m % 4)

    def _angular(self, theta, M):
        m = np.arange(M + 1)
        phi = np.asarray(theta).ravel()[:, None] - self.cfg.theta_inc
        w = (np.where(m == 0, 1.0, 2.0) * (1j) ** (m % 4))[None, :]
        return w * np.cos(m * phi), -w * m * np.sin(m * phi)

    def _sum(self, R, Rp, coef, theta, M):
        A, At = self._angular(theta, M)
        RA = R * coef
        return ((RA * A).sum(axis=1), (Rp * coef * A).sum(axis=1), (RA * At).sum(axis=1))

    def interior(self, r, theta):
        r = np.asarray(r, dtype=float).ravel()
        kn = self.k * self.nbar
        J = _jj(kn * r, self.M + 1)
        Jp = derivatives(J)[:, : self.M + 1]
        return self._sum(J[:, : self.M + 1], kn * Jp, self.ta[None, :], theta, self.M)

    def scattered(self, r, theta):
        r = np.asarray(r, dtype=float).ravel()
        H = _hankel(self.k * r, self.M + 1)
        Hp = derivatives(H)[:, : self.M + 1]
        with np.errstate(invalid="ignore", over="ignore"):
            return self._sum(H[:, : self.M + 1], self.k * Hp, self.tb[None, :], theta, self.M)

    def incident(self, r, theta, M=None):
        r = np.asarray(r, dtype=float).ravel()
        if M is None:
            M = max(self.M, jacobi_anger_order(self.k * float(r.max(initial=0.0))))
        J = _jj(self.k * r, M + 1)
        Jp = derivatives(J)[:, : M + 1]
        return self._sum(J[:, : M + 1], self.k * Jp, np.ones((1, M + 1)), theta, M)

    def exterior(self, r, theta, M_inc=None):
        """Incident plus scattered."""
        inc = self.incident(r, theta, self.M if M_inc is None else M_inc)
        sc = self.scattered(r, theta)
        return tuple(a + b for a, b in zip(inc, sc))


FIELD_KINDS = ("incident", "scattered", "interior", "total")


@dataclass(frozen=True)
class FieldGrid:
    """Field samples on a square pixel grid.

    ``values[i, j]`` is at ``x = -extent + 2 extent j/(res-1)``,
    ``y = extent - 2 extent i/(res-1)`` (row-major, y pointing down).
    ``kind == "interior"`` is zero outside the disk and ``"scattered"`` is
    zero inside.
    """

    extent: float
    resolution: int
    values: np.ndarray
    kind: str
    modes: int


def grid_coordinates(extent, res):
    t = np.linspace(-extent, extent, res)
    x = np.broadcast_to(t[None, :], (res, res))
    y = np.broadcast_to(t[::-1, None], (res, res))
    return x, y


def evaluate_field(k, cfg: MediumConfig, extent=3.0, resolution=256, kind="total",
                   jobs=1, tail_tol=1e-14) -> FieldGrid:
    """Synthesize a field on the square ``[-extent, extent]²``.

    Pixels are processed in fixed blocks of ``BLOCK`` points, so the output is
    bit-identical for any ``jobs``.
    """
    if kind not in FIELD_KINDS:
        raise ValueError(f"kind must be one of {FIELD_KINDS}")
    if not extent >= 1.1:
        raise ValueError("extent must be >= 1.1")
    res = int(resolution)
    if not 2 <= res <= 4096:
        raise ValueError("resolution must lie in 2..4096")
    field = ModalField(k, cfg, tail_tol=tail_tol)
    x, y = grid_coordinates(float(extent), res)
    r = np.hypot(x, y).ravel()
    th = np.arctan2(y, x).ravel()
    M_inc = max(field.M, jacobi_anger_order(field.k * float(extent) * math.sqrt(2.0)))
    out = np.zeros(r.size, dtype=complex)

    def block(start):
        sl = slice(start, min(start + BLOCK, r.size))
        rb, tb = r[sl], th[sl]
        inside = rb <= 1.0
        vals = np.zeros(rb.size, dtype=complex)
        if kind in ("interior", "total") and inside.any():
            vals[inside] = field.interior(rb[inside], tb[inside])[0]
        outside = ~inside
        if outside.any():
            if kind in ("scattered", "total"):
                vals[outside] += field.scattered(rb[outside], tb[outside])[0]
            if kind in ("incident", "total"):
                vals[outside] += field.incident(rb[outside], tb[outside], M_inc)[0]
        if kind == "incident" and inside.any():
            vals[inside] = field.incident(rb[inside], tb[inside], M_inc)[0]
        out[sl] = vals

    starts = range(0, r.size, BLOCK)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as ex:
            list(ex.map(block, starts))
    else:
        for s in starts:
            block(s)
    return FieldGrid(extent=float(extent), resolution=res, values=out.reshape(res, res),
                     kind=kind, modes=field.M)
