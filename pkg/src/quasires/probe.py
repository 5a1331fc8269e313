"""Amplification proxy for the cut-off solution operator and z-sweeps.

For one angular mode the proxy is the ratio of the L² mass of the total
field to that of the incident field over ``B(0, probe_radius)``.  For the
default ``probe_radius = 1`` this is

    |a_m| ||J_m(nbar k r)|| / ||J_m(k r)||,

with ``r dr`` weights; the angular factor cancels.  Mode ``m`` and ``-m``
give the same ratio.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .modal import NEAR_SINGULAR, MediumConfig, refraction_root, truncation_order
from .special import derivatives, jy

BLOCK = 64


@dataclass(frozen=True)
class ProbeSpec:
    """Where and how the amplification is measured.

    Parameters
    ----------
    probe_radius : float
        Radius of the ball the mass is measured on, ``>= 1``.
    nodes : int
        Gauss-Legendre nodes per radial piece, ``>= 32``.
    mode_limit : int, optional
        Highest mode included; ``None`` uses the field truncation order.
    """

    probe_radius: float = 1.0
    nodes: int = 64
    mode_limit: int | None = None

    def __post_init__(self):
        if not self.probe_radius >= 1.0:
            raise ValueError("probe_radius must be >= 1")
        if int(self.nodes) < 32:
            raise ValueError("nodes must be >= 32")
        if self.mode_limit is not None and int(self.mode_limit) < 0:
            raise ValueError("mode_limit must be nonnegative")


def _gauss(n, a, b):
    x, w = np.polynomial.legendre.leggauss(int(n))
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def modal_amplifications(k, cfg: MediumConfig, spec: ProbeSpec, M=None):
    """Amplification of every mode ``0..M``.

    Returns ``(amp, flagged)``; ``flagged[m]`` marks ``|D_m| < 1e-30``, where
    ``amp[m]`` is the ``inf`` sentinel.
    """
    k = float(k)
    if M is None:
        M = spec.mode_limit if spec.mode_limit is not None else truncation_order(k, cfg)
    nb = refraction_root(cfg)
    r, w = _gauss(spec.nodes, 0.0, 1.0)
    Jin, _ = jy(nb * k * r, M, want_y=False)
    Jinc, _ = jy(k * r, M, want_y=False)
    Jin, Jinc = Jin[:, : M + 1], Jinc[:, : M + 1]
    # boundary data fixes the transfer ratios
    Jb, _ = jy([nb * k], M + 1, want_y=False)
    Jk, Yk = jy([k], M + 1)
    Hk = Jk[0] + 1j * Yk[0]
    n = M + 1
    D = nb * derivatives(Jb[0])[:n] * Hk[:n] - Jb[0, :n] * derivatives(Hk)[:n]
    flagged = ~(np.abs(D) >= NEAR_SINGULAR)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ta = (-2j / (math.pi * k)) / D
        tb = (Jb[0, :n] * derivatives(Jk[0])[:n] - nb * derivatives(Jb[0])[:n] * Jk[0, :n]) / D
    wr = (w * r)[:, None]
    num = (wr * np.abs(ta[None, :] * Jin) ** 2).sum(axis=0)
    den = (wr * np.abs(Jinc) ** 2).sum(axis=0)
    if spec.probe_radius > 1.0:
        ro, wo = _gauss(spec.nodes, 1.0, spec.probe_radius)
        Jo, Yo = jy(k * ro, M)
        Jo, Ho = Jo[:, :n], (Jo + 1j * Yo)[:, :n]
        wro = (wo * ro)[:, None]
        with np.errstate(invalid="ignore", over="ignore"):
            num = num + (wro * np.abs(Jo + tb[None, :] * Ho) ** 2).sum(axis=0)
        den = den + (wro * np.abs(Jo) ** 2).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        amp = np.sqrt(num / den)
    amp = np.where(flagged, np.inf, amp)
    return amp, flagged


def modal_amplification(m, k, cfg: MediumConfig, spec: ProbeSpec = ProbeSpec()) -> float:
    """Amplification of a single mode; ``inf`` when ``|D_m| < 1e-30``."""
    amp, _ = modal_amplifications(k, cfg, spec, M=int(m))
    return float(amp[int(m)])


def amplification(k, cfg: MediumConfig, spec: ProbeSpec = ProbeSpec()) -> float:
    """Largest modal amplification over ``0..mode_limit``."""
    amp, _ = modal_amplifications(k, cfg, spec)
    return float(np.nanmax(amp))


@dataclass(frozen=True)
class SweepResult:
    """Amplification at ``z_j = -rho + (j + 1/2) 2 rho / n`` for ``j < n``."""

    k: float
    rho: float
    z: np.ndarray
    amp: np.ndarray
    flagged: np.ndarray
    modes: int
    nodes: int
    probe_radius: float

    @property
    def spacing(self) -> float:
        return 2.0 * self.rho / self.z.size

    def value_at(self, z0) -> float:
        return float(self.amp[int(np.argmin(np.abs(self.z - z0)))])


def sweep_grid(rho, n):
    j = np.arange(n)
    z = -rho + (j + 0.5) * (2.0 * rho / n)
    z[n // 2] = 0.0  # exact zero at the centre cell
    return z


def sweep_z(k, rho, n_samples, cfg_base: MediumConfig, spec: ProbeSpec = ProbeSpec(),
            jobs=1) -> SweepResult:
    """Amplification on a uniform grid of real ``z`` in ``(-rho, rho)``.

    ``n_samples`` must be odd (the middle sample is ``z = 0``).  The mode
    range is fixed once for the sweep from the truncation order at
    ``z = ±rho``, so every sample uses the same modes.
    """
    n = int(n_samples)
    if n < 101 or n % 2 == 0:
        raise ValueError("n_samples must be odd and >= 101")
    if not 0 < rho < cfg_base.n_i:
        raise ValueError("need 0 < rho < n_i")
    k = float(k)
    z = sweep_grid(float(rho), n)
    if spec.mode_limit is not None:
        M = int(spec.mode_limit)
    else:
        M = max(truncation_order(k, cfg_base.with_z(rho)), truncation_order(k, cfg_base.with_z(-rho)))
    amp = np.empty(n)
    flag = np.zeros(n, dtype=bool)

    def block(start):
        for j in range(start, min(start + BLOCK, n)):
            a, f = modal_amplifications(k, cfg_base.with_z(z[j]), spec, M)
            amp[j] = np.nanmax(a)
            flag[j] = f.any()

    starts = range(0, n, BLOCK)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as ex:
            list(ex.map(block, starts))
    else:
        for s in starts:
            block(s)
    return SweepResult(k=k, rho=float(rho), z=z, amp=amp, flagged=flag, modes=M,
                       nodes=spec.nodes, probe_radius=spec.probe_radius)


def excluded_set_measure(sweep: SweepResult, threshold: float) -> float:
    """Riemann-sum measure of ``{z : amp(z) > threshold}``; sentinels count as above."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    above = (sweep.amp > threshold) | sweep.flagged
    return float(np.count_nonzero(above)) * sweep.spacing


def default_halfplane_grid(n_re=41, n_im=11):
    """``Re z`` in ``[-0.5, 0.5]`` by log-spaced ``Im z`` in ``[1e-3, 1e-1]``."""
    re = np.linspace(-0.5, 0.5, n_re)
    im = np.geomspace(1e-3, 1e-1, n_im)
    return (re[None, :] + 1j * im[:, None]).ravel()


def upper_halfplane_check(k, z_grid, cfg_base: MediumConfig, spec: ProbeSpec = ProbeSpec(),
                          factor=10.0) -> dict:
    """``r(z) = amp(k, z) Im z / (k² (1 + |z|²))`` over the grid.

    Passes when ``max r <= factor * median r``.
    """
    z = np.asarray(z_grid, dtype=complex).ravel()
    if z.size == 0 or np.any(z.imag <= 0):
        raise ValueError("every grid point needs Im z > 0")
    k = float(k)
    amp = np.array([amplification(k, cfg_base.with_z(zz), spec) for zz in z])
    r = amp * z.imag / (k * k * (1.0 + np.abs(z) ** 2))
    med = float(np.median(r))
    top = float(r.max())
    return {"k": k, "max": top, "median": med, "ratio": top / med,
            "argmax": complex(z[int(np.argmax(r))]), "passed": bool(top <= factor * med),
            "r": r, "z": z}
