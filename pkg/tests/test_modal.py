import doctest
import math

import numpy as np
import pytest

from quasires import modal
from quasires.modal import (MediumConfig, ModalField, determinant_table, evaluate_field,
                            jacobi_anger_order, modal_coefficients, modal_determinant,
                            term_scale, truncation_order)

K_QR1 = 0.992772133752486


def test_doctests():
    assert doctest.testmod(modal).failed == 0


@pytest.mark.parametrize("kw", [dict(n_i=0.0), dict(n_i=-1.0), dict(n_i=2.0, z=-3.0),
                                dict(n_i=2.0, z=1.5 + 1.5j), dict(n_i=float("nan"))])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        MediumConfig(**kw)


def test_vacuum_has_no_scattering():
    cfg = MediumConfig(n_i=1.0, theta_inc=0.3)
    for k in (0.5, 3.0, 17.0):
        for m in range(0, 30, 3):
            s = modal_coefficients(m, k, cfg)
            assert abs(s.b_m) <= 1e-13
            assert abs(s.a_m - s.c_m) <= 1e-13


def test_matching_conditions():
    rng = np.random.default_rng(3)
    for _ in range(20):
        cfg = MediumConfig(n_i=float(rng.choice([0.5, 2.0, 100.0])),
                           z=complex(rng.uniform(-0.1, 0.1), rng.uniform(0, 0.05)))
        k = rng.uniform(0.5, 10.0)
        for m in (0, 1, 5, 12):
            assert max(modal_coefficients(m, k, cfg).matching_residuals()) < 1e-12


def _cauchy(f, x0, r=1e-2, n=32):
    t = 2 * np.pi * np.arange(n) / n
    return np.mean([f(x0 + r * np.exp(1j * s)) * np.exp(-1j * s) for s in t], axis=0) / r


@pytest.mark.parametrize("n_i,z", [(100.0, 0.0), (2.0, 0.05 + 0.01j), (0.5, -0.1)])
def test_determinant_derivatives(n_i, z):
    k, M = 2.3, 20
    D, dk, dz = determinant_table(k, n_i, [z], M, True)
    ek = _cauchy(lambda kk: determinant_table(kk, n_i, [z], M), k)
    ez = _cauchy(lambda zz: determinant_table(k, n_i, [zz], M), z)
    sc = term_scale(k, n_i, z, M)
    # a Cauchy estimate has roundoff ~ eps * |D| / r, so compare on the term scale
    assert np.all(np.abs(ek - dk) <= 1e-9 * sc)
    assert np.all(np.abs(ez - dz) <= 1e-9 * sc)


def test_determinant_agrees_with_table():
    cfg = MediumConfig(n_i=100.0)
    D = determinant_table(K_QR1, 100.0, [0.0], 10)
    sc = term_scale(K_QR1, 100.0, 0.0, 10)
    assert abs(modal_determinant(7, K_QR1, cfg) - D[7]) <= 1e-14 * sc[7]


def test_quasi_resonance_makes_small_determinant():
    cfg = MediumConfig(n_i=100.0)
    rel = abs(modal_determinant(7, K_QR1, cfg)) / term_scale(K_QR1, 100.0, 0.0, 7)[7]
    assert rel < 1e-8


def test_truncation_converges():
    cfg = MediumConfig(n_i=100.0, theta_inc=0.4)
    k = 3.0
    M = truncation_order(k, cfg)
    r = np.full(64, 1.0)
    t = np.linspace(0, 2 * np.pi, 64)
    a = ModalField(k, cfg, M=M).interior(r, t)[0]
    b = ModalField(k, cfg, M=M + 20).interior(r, t)[0]
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))


def test_incident_is_plane_wave():
    th = 0.5235987755982988
    f = ModalField(2.5, MediumConfig(n_i=4.0, theta_inc=th))
    r = np.linspace(0.0, 3.0, 50)
    t = np.linspace(-3, 3, 50)
    u, ur, _ = f.incident(r, t, jacobi_anger_order(2.5 * 3.0))
    x, y = r * np.cos(t), r * np.sin(t)
    ref = np.exp(1j * 2.5 * (x * np.cos(th) + y * np.sin(th)))
    assert np.max(np.abs(u - ref)) < 1e-13
    dref = 1j * 2.5 * np.cos(t - th) * ref
    assert np.max(np.abs(ur - dref)) < 1e-12


def test_jacobi_anger_order_bound():
    from quasires.special import jy
    for x in (0.1, 5.0, 60.0):
        M = jacobi_anger_order(x)
        assert abs(jy([x], M)[0][0, M]) < 1e-16


def test_continuity_across_interface():
    rng = np.random.default_rng(11)
    t = 2 * np.pi * np.arange(360) / 360
    r = np.ones(360)
    for _ in range(5):
        cfg = MediumConfig(n_i=rng.uniform(0.5, 100), z=complex(rng.uniform(-0.1, 0.1), 0.01),
                           theta_inc=rng.uniform(0, 2 * np.pi))
        f = ModalField(rng.uniform(0.5, 10), cfg)
        a, b = f.interior(r, t), f.exterior(r, t)
        for i in range(3):
            assert np.max(np.abs(a[i] - b[i])) <= 1e-10 * np.max(np.abs(b[i]))


@pytest.mark.parametrize("kind", ["total", "scattered", "interior", "incident"])
def test_field_grid_jobs_invariant(kind):
    cfg = MediumConfig(n_i=100.0, theta_inc=0.5235987755982988)
    a = evaluate_field(K_QR1, cfg, extent=1.5, resolution=70, kind=kind, jobs=1)
    b = evaluate_field(K_QR1, cfg, extent=1.5, resolution=70, kind=kind, jobs=4)
    assert a.values.tobytes() == b.values.tobytes()


def test_field_grid_kinds():
    cfg = MediumConfig(n_i=2.0)
    x = np.linspace(-2, 2, 41)
    inside = np.hypot(x[None, :], x[::-1, None]) <= 1.0
    sc = evaluate_field(1.7, cfg, extent=2.0, resolution=41, kind="scattered").values
    it = evaluate_field(1.7, cfg, extent=2.0, resolution=41, kind="interior").values
    tot = evaluate_field(1.7, cfg, extent=2.0, resolution=41, kind="total").values
    inc = evaluate_field(1.7, cfg, extent=2.0, resolution=41, kind="incident").values
    assert np.all(sc[inside] == 0) and np.all(it[~inside] == 0)
    assert np.allclose(tot, np.where(inside, it, sc + inc), rtol=0, atol=1e-13)


def test_field_validation():
    cfg = MediumConfig(n_i=2.0)
    with pytest.raises(ValueError):
        evaluate_field(1.0, cfg, kind="nope")
    with pytest.raises(ValueError):
        evaluate_field(1.0, cfg, resolution=5000)


def test_vacuum_scattered_field_is_zero():
    g = evaluate_field(1.0, MediumConfig(n_i=1.0), extent=2.0, resolution=30, kind="scattered")
    assert np.all(g.values == 0)


def test_bad_wavenumber():
    with pytest.raises(ValueError):
        modal_determinant(0, -1.0, MediumConfig(n_i=2.0))
    with pytest.raises(ValueError):
        ModalField(math.inf, MediumConfig(n_i=2.0))
