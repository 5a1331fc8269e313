import math

import mpmath
import numpy as np
import pytest

from quasires.modal import MediumConfig, modal_coefficients
from quasires.probe import (ProbeSpec, amplification, default_halfplane_grid,
                            excluded_set_measure, modal_amplification, modal_amplifications,
                            sweep_grid, sweep_z, upper_halfplane_check)

K_QR1 = 0.992772133752486


@pytest.mark.parametrize("radius", [1.0, 2.5])
def test_vacuum_amplification_is_one(radius):
    amp, flag = modal_amplifications(3.0, MediumConfig(n_i=1.0), ProbeSpec(radius), M=40)
    assert not flag.any()
    assert np.max(np.abs(amp - 1)) < 1e-12


def test_mode_amplification_against_mpmath():
    cfg = MediumConfig(n_i=5.0, z=0.02)
    m, k = 4, 1.3
    s = modal_coefficients(m, k, cfg)
    mpmath.mp.dps = 30
    w = complex(s.nbar * k)
    num = mpmath.quad(lambda r: abs(mpmath.besselj(m, w * r)) ** 2 * r, [0, 1])
    den = mpmath.quad(lambda r: mpmath.besselj(m, k * r) ** 2 * r, [0, 1])
    ref = abs(s.a_m / s.c_m) * math.sqrt(num / den)
    assert abs(modal_amplification(m, k, cfg) - ref) < 1e-12 * ref


def test_amplification_is_mode_max():
    cfg = MediumConfig(n_i=100.0)
    amp, _ = modal_amplifications(K_QR1, cfg, ProbeSpec(), M=30)
    assert amplification(K_QR1, cfg, ProbeSpec(mode_limit=30)) == amp.max()
    assert int(np.argmax(amp)) == 7


@pytest.mark.parametrize("kw", [dict(probe_radius=0.5), dict(nodes=8), dict(mode_limit=-1)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        ProbeSpec(**kw)


def test_sweep_grid():
    z = sweep_grid(0.05, 101)
    assert z[50] == 0.0 and z.size == 101
    assert np.allclose(np.diff(z), 0.1 / 101)


@pytest.mark.parametrize("n", [100, 99])
def test_sweep_rejects_bad_counts(n):
    with pytest.raises(ValueError):
        sweep_z(1.0, 0.05, n, MediumConfig(n_i=100.0))


def test_sweep_jobs_and_measure():
    cfg = MediumConfig(n_i=100.0)
    a = sweep_z(K_QR1, 0.05, 201, cfg, jobs=1)
    b = sweep_z(K_QR1, 0.05, 201, cfg, jobs=6)
    assert a.amp.tobytes() == b.amp.tobytes()
    assert a.value_at(0.0) == a.amp[100]
    m1 = excluded_set_measure(a, a.value_at(0.0) / 10)
    m2 = excluded_set_measure(a, a.value_at(0.0) / 1000)
    assert 0 < m1 <= m2 <= 2 * a.rho
    with pytest.raises(ValueError):
        excluded_set_measure(a, 0.0)


def test_halfplane_grid_and_check():
    z = default_halfplane_grid()
    assert z.size == 451 and np.all(z.imag > 0)
    out = upper_halfplane_check(2.0, z[::9], MediumConfig(n_i=2.0))
    assert out["ratio"] >= 1 and out["r"].shape == out["z"].shape
    with pytest.raises(ValueError):
        upper_halfplane_check(2.0, [0.1 + 0j], MediumConfig(n_i=2.0))
