"""Zeros of the modal determinants: quasi-resonances in k, poles in z.

Counting uses the argument principle with adaptive phase tracking; location
uses Newton's method with analytic derivatives of D_m.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .modal import MAX_MODES, CapExceededError, MediumConfig, determinant_table
from .special import derivatives, jy

TWO_PI = 2.0 * math.pi
ZERO_RATIO = 1e-14
CLEAR_RATIO = 1e-6
CERT_MODES = 5
MIN_CELL = 1e-10
RESIDUAL_TOL = 1e-9


class ZeroOnContourError(ArithmeticError):
    """The sampled function came too close to zero on the contour."""

    def __init__(self, msg, columns=()):
        super().__init__(msg)
        self.columns = tuple(columns)


class RefinementBudgetError(RuntimeError):
    """Phase tracking did not resolve within the refinement budget."""


# ---------------------------------------------------------------- winding ---

def circle_path(center, radius):
    c, r = complex(center), float(radius)
    return lambda s: c + r * np.exp(TWO_PI * 1j * np.asarray(s))


def cell_path(r0, r1, t0, t1):
    """Counter-clockwise boundary of the polar cell ``[r0, r1] x [t0, t1]``."""

    def p(s):
        s = np.asarray(s, dtype=float)
        q = np.minimum((4.0 * s).astype(int), 3)
        u = 4.0 * s - q
        r = np.choose(q, [np.full_like(u, r1), r1 + (r0 - r1) * u, np.full_like(u, r0),
                          r0 + (r1 - r0) * u])
        t = np.choose(q, [t0 + (t1 - t0) * u, np.full_like(u, t1), t1 + (t0 - t1) * u,
                          np.full_like(u, t0)])
        return r * np.exp(1j * t)

    return p


@dataclass
class WindingResult:
    windings: np.ndarray
    min_ratio: np.ndarray
    samples: int


def path_windings(F, path, n0=64, max_refine=60, max_samples=1 << 20) -> WindingResult:
    """Winding numbers of every column of ``F`` along a closed path.

    ``F`` maps a 1-d array of points to an array ``(points, columns)``;
    ``path`` maps ``s`` in ``[0, 1]`` to points with ``path(0) == path(1)``.
    Intervals are bisected until every phase increment is below ``π/2``.
    """
    s = np.linspace(0.0, 1.0, n0 + 1)
    vals = np.asarray(F(path(s)))
    if vals.ndim == 1:
        vals = vals[:, None]
    for _ in range(max_refine + 1):
        dead = np.flatnonzero(np.any(~(np.abs(vals) > 0) | ~np.isfinite(vals), axis=0))
        if dead.size:
            raise ZeroOnContourError("function vanishes on the contour", dead)
        with np.errstate(invalid="ignore", divide="ignore"):
            dphi = np.angle(vals[1:] / vals[:-1])
        bad = np.any(~(np.abs(dphi) < math.pi / 2), axis=1)
        if not bad.any():
            break
        if s.size > max_samples:
            raise RefinementBudgetError(f"sample budget {max_samples} exceeded")
        mid = 0.5 * (s[:-1][bad] + s[1:][bad])
        if np.any(mid <= s[:-1][bad]) or np.any(mid >= s[1:][bad]):
            # only a zero on (or within rounding of) the path does this
            raise ZeroOnContourError("phase jump below floating-point resolution")
        new = np.asarray(F(path(mid)))
        if new.ndim == 1:
            new = new[:, None]
        s = np.concatenate([s, mid])
        vals = np.concatenate([vals, new])
        order = np.argsort(s, kind="stable")
        s, vals = s[order], vals[order]
    else:
        raise RefinementBudgetError(f"phase not resolved after {max_refine} refinements")
    mag = np.abs(vals)
    top = mag.max(axis=0)
    ratio = mag.min(axis=0) / np.where(top > 0, top, 1.0)
    hit = np.flatnonzero(~(ratio > ZERO_RATIO) | ~np.isfinite(top))
    if hit.size:
        raise ZeroOnContourError("function vanishes on the contour", hit)
    total = dphi.sum(axis=0) / TWO_PI
    return WindingResult(np.rint(total).astype(int), ratio, int(s.size))


def winding_number(f: Callable, center, radius, max_refine=60) -> int:
    """Winding number of the analytic function ``f`` around a circle.

    ``f`` must accept a numpy array of complex points.

    Examples
    --------
    >>> winding_number(lambda z: z * z - 0.01, 0, 1)
    2
    """
    res = path_windings(lambda z: np.asarray(f(z))[:, None], circle_path(center, radius),
                        max_refine=max_refine)
    return int(res.windings[0])


def dense_winding(f, center, radius, n=100_000):
    """Brute-force winding by phase unwrapping on ``n`` equispaced points."""
    t = np.linspace(0.0, TWO_PI, n + 1)
    v = np.asarray(f(complex(center) + radius * np.exp(1j * t)))
    ph = np.unwrap(np.angle(v), axis=0)
    return np.rint((ph[-1] - ph[0]) / TWO_PI).astype(int)


# ------------------------------------------------------------- z-plane ---

class _ModeTable:
    """D_m(k, ·) for fixed real k with the Hankel factors cached."""

    def __init__(self, k, n_i, M):
        self.k, self.n_i = float(k), float(n_i)
        self.M = -1
        self._grow(M)

    def _grow(self, M):
        if M <= self.M:
            return
        J, Y = jy([self.k], M + 1)
        with np.errstate(invalid="ignore", over="ignore"):
            # orders past overflow are inf; the cutoff cap reports them
            H = J[0] + 1j * Y[0]
            self.H, self.Hp = H[: M + 1], derivatives(H)[: M + 1]
        self.M = M

    def hankel(self, m):
        return self.H[: m + 1], self.Hp[: m + 1]

    def table(self, z, M, modes=None):
        self._grow(M)
        D = determinant_table(self.k, self.n_i, z, M, hankel=self.hankel(M))
        D = np.atleast_2d(D)
        return D if modes is None else D[:, modes]

    def eval(self, m, z):
        return determinant_table(self.k, self.n_i, [z], m, True, hankel=self.hankel(m))

    def scale(self, m, z):
        nb = np.sqrt(self.n_i + complex(z))
        J, _ = jy([nb * self.k], m + 1, want_y=False)
        Jp = derivatives(J[0])[m]
        return abs(nb * Jp * self.H[m]) + abs(J[0, m] * self.Hp[m])


@dataclass(frozen=True)
class Pole:
    z: complex
    m: int
    multiplicity: int
    residual: float
    scale: float


@dataclass(frozen=True)
class ModeCertificate:
    m: int
    winding: int
    radius: float
    min_ratio: float
    nudged: bool


@dataclass(frozen=True)
class LevelCheck:
    m: int
    depth: int
    parent: int
    children: int

    @property
    def consistent(self):
        return self.parent == self.children


@dataclass
class PoleSet:
    """Zeros of ``z -> D_m(k, z)`` in ``|z| < rho`` for ``m <= mode_cutoff``."""

    k: float
    rho: float
    n_i: float
    poles: list
    mode_cutoff: int
    certificates: list
    tail_certificates: list
    level_checks: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def total_count(self) -> int:
        return len(self.poles)

    @property
    def total_with_multiplicity(self) -> int:
        return sum(p.multiplicity for p in self.poles)

    def count_for_mode(self, m) -> int:
        return sum(p.multiplicity for p in self.poles if p.m == m)

    def windings(self) -> dict:
        return {c.m: c.winding for c in self.certificates}


def _circle_scan(tab: _ModeTable, modes, rho):
    """Windings on ``|z| = rho`` with the radius nudge on contour zeros."""
    modes = np.asarray(modes)
    M = int(modes.max())
    for r, nudged in ((rho, False), (rho * (1 + 1e-6), True), (rho * (1 - 1e-6), True)):
        try:
            res = path_windings(lambda z: tab.table(z, M, modes), circle_path(0, r))
            return res, r, nudged
        except ZeroOnContourError:
            continue
    raise ZeroOnContourError(f"zero on |z| = {rho} after nudging")


def _cutoff_floor(k, rho, n_i):
    return int(math.ceil(math.sqrt(n_i + rho) * k)) + 12


def _cutoff_scan(tab, k, rho, n_i):
    M0 = _cutoff_floor(k, rho, n_i)
    top = M0 + CERT_MODES
    while True:
        if top > MAX_MODES:
            raise CapExceededError(f"mode cutoff exceeds {MAX_MODES}")
        res, r, nudged = _circle_scan(tab, np.arange(top + 1), rho)
        clear = (res.windings == 0) & (res.min_ratio > CLEAR_RATIO)
        dirty = np.flatnonzero(~clear)
        Mc = max(M0, int(dirty.max()) if dirty.size else 0)
        if Mc + CERT_MODES <= top:
            return Mc, res, r, nudged
        top = Mc + CERT_MODES + 8


def mode_cutoff(k, rho, cfg_base: MediumConfig) -> int:
    """Highest mode that can carry a z-pole in ``|z| < rho``.

    Starts from ``ceil(sqrt(n_i + rho) k) + 12`` and extends until the next
    five modes have zero winding and no near-zero on the contour.
    """
    _check_search(k, rho, cfg_base)
    tab = _ModeTable(k, cfg_base.n_i, _cutoff_floor(k, rho, cfg_base.n_i) + CERT_MODES)
    return _cutoff_scan(tab, k, rho, cfg_base.n_i)[0]


def _check_search(k, rho, cfg):
    if not (math.isfinite(k) and k > 0):
        raise ValueError("k must be positive")
    if not (0 < rho < cfg.n_i):
        raise ValueError("need 0 < rho < n_i")


def _newton(fun, x0, maxit=80, tol=1e-14, stall=1e-9):
    """Complex Newton iteration.

    Converged when a step is below ``tol`` (relative to ``max(1, |x|)``), or
    when steps below ``stall`` stop shrinking (rounding floor reached).
    """
    x = complex(x0)
    prev = math.inf
    for _ in range(maxit):
        f, df = fun(x)
        if f == 0:
            return x, True
        if df == 0 or not np.isfinite(df):
            return x, False
        step = f / df
        x -= step
        if not np.isfinite(x):
            return x, False
        size = abs(step) / max(1.0, abs(x))
        if size <= tol or (size <= stall and abs(step) >= 0.5 * prev):
            return x, True
        prev = abs(step)
    return x, False


def _in_cell(z, cell, slack=1e-12):
    r0, r1, t0, t1 = cell
    r = abs(z)
    if r < r0 - slack or r > r1 + slack:
        return False
    if r <= slack:
        return r0 <= slack
    t = (math.atan2(z.imag, z.real) - t0) % TWO_PI
    return t <= (t1 - t0) + slack / max(r, 1e-300)


def _split(cell, frac=0.5):
    r0, r1, t0, t1 = cell
    rm = r0 + frac * (r1 - r0)
    tm = t0 + frac * (t1 - t0)
    return [(r0, rm, t0, tm), (r0, rm, tm, t1), (rm, r1, t0, tm), (rm, r1, tm, t1)]


def _cell_diameter(cell):
    r0, r1, t0, t1 = cell
    return max(r1 - r0, r1 * min(t1 - t0, math.pi))


def _cell_winding(tab, m, cell):
    res = path_windings(lambda z: tab.table(z, m, [m]), cell_path(*cell))
    return int(res.windings[0])


def _children(tab, m, cell):
    """Split a cell, nudging the split point when a zero sits on a new edge."""
    for frac in (0.5, 0.5 + 1 / 37, 0.5 - 1 / 41, 0.5 + 1 / 11):
        try:
            kids = _split(cell, frac)
            return kids, [_cell_winding(tab, m, c) for c in kids]
        except ZeroOnContourError:
            continue
    raise ZeroOnContourError(f"cannot split cell {cell} for mode {m}")


def _polish(tab, m, z0):
    def fun(z):
        D, _, dz = tab.eval(m, z)
        return D[m], dz[m]

    return _newton(fun, z0)


def _locate_mode(tab, m, winding, radius):
    """Subdivide the disk for one mode until every cell isolates its zeros."""
    poles, checks, failures = [], [], []
    kids = None
    for off in (0.0, 0.0137, -0.0291, 0.071):
        try:
            quads = [(0.0, radius, off + q * math.pi / 2, off + (q + 1) * math.pi / 2)
                     for q in range(4)]
            kids = [(c, _cell_winding(tab, m, c)) for c in quads]
            break
        except ZeroOnContourError:
            continue
    if kids is None:
        raise ZeroOnContourError(f"cannot split the disk for mode {m}")
    checks.append(LevelCheck(m, 1, winding, sum(w for _, w in kids)))
    stack = [(c, w, 1) for c, w in kids if w != 0]
    while stack:
        cell, w, depth = stack.pop()
        if w < 0:
            failures.append(f"mode {m}: negative winding {w} in cell {cell}")
            continue
        r0, r1, t0, t1 = cell
        centre = (0.5 * (r0 + r1)) * complex(math.cos(0.5 * (t0 + t1)), math.sin(0.5 * (t0 + t1)))
        if w == 1:
            z, ok = _polish(tab, m, centre)
            if ok and _in_cell(z, cell):
                poles.append((z, 1))
                continue
        if _cell_diameter(cell) < MIN_CELL:
            z, ok = _polish(tab, m, centre)
            poles.append((z if ok else centre, w))
            if not ok:
                failures.append(f"mode {m}: Newton failed in a minimal cell")
            continue
        sub, ws = _children(tab, m, cell)
        checks.append(LevelCheck(m, depth + 1, w, sum(ws)))
        stack.extend((c, cw, depth + 1) for c, cw in zip(sub, ws) if cw != 0)
    return poles, checks, failures


def find_z_poles(k, rho, cfg_base: MediumConfig, jobs=1) -> PoleSet:
    """All zeros of ``D_m(k, ·)`` in ``|z| < rho`` over the certified mode range."""
    _check_search(k, rho, cfg_base)
    n_i = cfg_base.n_i
    tab = _ModeTable(k, n_i, _cutoff_floor(k, rho, n_i) + CERT_MODES)
    Mc, res, radius, nudged = _cutoff_scan(tab, k, rho, n_i)
    certs = [ModeCertificate(m, int(res.windings[m]), radius, float(res.min_ratio[m]), nudged)
             for m in range(Mc + 1)]
    tail = [ModeCertificate(m, int(res.windings[m]), radius, float(res.min_ratio[m]), nudged)
            for m in range(Mc + 1, Mc + 1 + CERT_MODES)]
    todo = [c for c in certs if c.winding != 0]

    def work(c):
        return c.m, _locate_mode(tab, c.m, c.winding, radius)

    if jobs > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as ex:
            out = list(ex.map(work, todo))
    else:
        out = [work(c) for c in todo]
    poles, checks, failures = [], [], []
    for m, (found, ch, fl) in out:
        checks.extend(ch)
        failures.extend(fl)
        for z, mult in found:
            D = abs(tab.eval(m, z)[0][m])
            poles.append(Pole(complex(z), m, int(mult), float(D), float(tab.scale(m, z))))
    poles.sort(key=lambda p: (p.m, p.z.real, p.z.imag))
    for c in certs:
        got = sum(p.multiplicity for p in poles if p.m == c.m)
        if got != c.winding:
            failures.append(f"mode {c.m}: located {got} zeros, winding {c.winding}")
    return PoleSet(k=float(k), rho=float(rho), n_i=n_i, poles=poles, mode_cutoff=Mc,
                   certificates=certs, tail_certificates=tail, level_checks=checks,
                   failures=failures)


def pole_count_scaling(k_list, rho, cfg_base: MediumConfig, jobs=1) -> dict:
    """Pole counts against k with a least-squares log-log slope.

    Only ``k`` with a nonzero count enter the fit.  ``max_ratio`` is
    ``max count / k^4``.
    """
    ks = [float(k) for k in k_list]
    if len(ks) < 3 or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k_list must be ascending with at least 3 entries")
    sets = [find_z_poles(k, rho, cfg_base, jobs) for k in ks]
    counts = np.array([s.total_with_multiplicity for s in sets])
    pos = counts > 0
    slope = float("nan")
    if pos.sum() >= 2:
        slope = float(np.polyfit(np.log(np.array(ks)[pos]), np.log(counts[pos]), 1)[0])
    return {
        "k": ks,
        "count": counts.tolist(),
        "slope": slope,
        "fitted_points": int(pos.sum()),
        "max_ratio": float(max(c / k**4 for c, k in zip(counts, ks))),
        "pole_sets": sets,
    }


def holomorphy_radius(z0, pole_set: PoleSet) -> float:
    """Distance from ``z0`` to the nearest located pole (``inf`` if none)."""
    if not pole_set.poles:
        return math.inf
    return float(min(abs(complex(z0) - p.z) for p in pole_set.poles))


def holomorphy_statistics(pole_set: PoleSet, n=1000, seed=0, percentile=5.0) -> dict:
    """Distances from uniform real ``z0`` in ``(-rho, rho)`` to the pole set.

    Reports the lower ``percentile`` of the distances and ``c = that * k^4``.
    """
    rng = np.random.default_rng(seed)
    z0 = rng.uniform(-pole_set.rho, pole_set.rho, n)
    if pole_set.poles:
        P = np.array([p.z for p in pole_set.poles])
        d = np.abs(z0[:, None] - P[None, :]).min(axis=1)
    else:
        d = np.full(n, np.inf)
    q = float(np.percentile(d, percentile))
    return {"k": pole_set.k, "n": n, "seed": seed, "percentile": percentile,
            "distance": q, "c": q * pole_set.k**4}


# ------------------------------------------------------------- k-plane ---

@dataclass(frozen=True)
class QuasiResonance:
    k_qr: float
    width: float
    m_dom: int
    residual: float
    scale: float = 1.0

    @property
    def k_complex(self) -> complex:
        return complex(self.k_qr, -self.width)


class ResonanceList(list):
    """List of :class:`QuasiResonance` with the rejected candidates attached."""

    def __init__(self, items=(), failures=()):
        super().__init__(items)
        self.failures = list(failures)


def _k_scan(cfg, kgrid, m_max):
    nb = np.sqrt(cfg.n_i + cfg.z)
    J, _ = jy(nb * kgrid, m_max + 1, want_y=False)
    Jk, Yk = jy(kgrid, m_max + 1)
    H = Jk + 1j * Yk
    n = m_max + 1
    D = nb * derivatives(J)[:, :n] * H[:, :n] - J[:, :n] * derivatives(H)[:, :n]
    return np.abs(D)


def _resonance_newton(cfg, m, k0):
    def fun(k):
        D, dk, _ = determinant_table(k, cfg.n_i, [cfg.z], m, True)
        return D[m], dk[m]

    return _newton(fun, k0)


def find_quasi_resonances(cfg: MediumConfig, k_min, k_max, m_max, step=1e-3,
                          window=0.01, depth=0.5) -> ResonanceList:
    """Near-real zeros of the modal determinants in ``k_min < Re k < k_max``.

    Each mode is scanned on a real grid (spacing at most ``step``); a local
    minimum of ``|D_m|`` qualifies when it is below ``depth`` times ``|D_m|``
    at distance ``window`` on both sides.  Candidates are polished by complex
    Newton on ``D_m``; those that diverge, leave the interval or land in
    ``Im k > 0`` are kept in ``.failures``.
    """
    if not (0 < k_min < k_max):
        raise ValueError("need 0 < k_min < k_max")
    need = math.ceil(math.sqrt(cfg.n_i) * k_max)
    if m_max < need:
        raise ValueError(f"m_max must be at least {need}")
    n = int(math.ceil((k_max - k_min) / step)) + 1
    kgrid = np.linspace(k_min, k_max, n)
    h = kgrid[1] - kgrid[0]
    A = _k_scan(cfg, kgrid, m_max)
    off = max(1, int(round(window / h)))
    found, failures = [], []
    for m in range(m_max + 1):
        a = A[:, m]
        idx = np.flatnonzero((a[1:-1] < a[:-2]) & (a[1:-1] <= a[2:])) + 1
        for j in idx:
            left, right = a[max(j - off, 0)], a[min(j + off, n - 1)]
            if not a[j] <= depth * min(left, right):
                continue
            kz, ok = _resonance_newton(cfg, m, kgrid[j])
            if not ok:
                failures.append((m, float(kgrid[j]), "newton did not converge"))
                continue
            if not (k_min < kz.real < k_max):
                failures.append((m, float(kgrid[j]), "left the interval"))
                continue
            if kz.imag > 1e-12 * abs(kz):
                failures.append((m, float(kgrid[j]), "zero in the upper half-plane"))
                continue
            D = determinant_table(kz, cfg.n_i, [cfg.z], m)[m]
            nb = np.sqrt(cfg.n_i + cfg.z)
            J, Y = jy([nb * kz, kz], m + 1)
            H = J[1] + 1j * Y[1]
            sc = abs(nb * derivatives(J[0])[m] * H[m]) + abs(J[0, m] * derivatives(H)[m])
            if abs(D) > RESIDUAL_TOL * sc:
                failures.append((m, float(kgrid[j]), "residual above tolerance"))
                continue
            found.append(QuasiResonance(float(kz.real), float(max(0.0, -kz.imag)), m,
                                        float(abs(D)), float(sc)))
    # smallest mode first so it wins the tie
    found.sort(key=lambda q: (q.m_dom, q.k_qr))
    out = []
    for q in found:
        if not any(abs(p.k_complex - q.k_complex) <= 1e-8 for p in out):
            out.append(q)
    out.sort(key=lambda q: q.k_qr)
    return ResonanceList(out, failures)
