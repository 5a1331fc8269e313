import math
from types import SimpleNamespace

import numpy as np
import pytest

from quasires import identities
from quasires.identities import (MorawetzParams, QuadratureBudgetError, QuadReport,
                                 _morawetz_sides, dtn_positivity, flux_balance,
                                 morawetz_residual, radiation_boundary_functional)
from quasires.modal import MediumConfig

K_QR1 = 0.992772133752486
K_QR2 = 2.19476917403094


def test_report_fields():
    r = QuadReport(2.0, 2.5, 0.1)
    assert r.residual == 0.5 and r.relative == 0.2 and r.verdict == "FAIL"
    assert QuadReport(0.1, 0.2, 0.1).relative == pytest.approx(0.1)
    assert set(r.as_dict()) >= {"lhs", "rhs", "residual", "relative", "verdict"}


class _Constant:
    """v = c on the unit disk."""

    def __init__(self, c):
        self.c = c
        self.M = 0
        self.field = SimpleNamespace(nbar=1.0)

    def __call__(self, r, t):
        r = np.asarray(r)
        return np.full(r.shape, self.c), np.zeros(r.shape, complex), np.zeros(r.shape, complex)


@pytest.mark.parametrize("alpha,beta", [(0.5, 2.0), (1.3, -0.7)])
def test_constant_field_identity(alpha, beta):
    n, c = 3.0, 0.7 - 0.2j
    cfg = SimpleNamespace(n_i=0.0, z=0.0)
    p = MorawetzParams(alpha, beta, 0.5, n, "disk")
    lhs, rhs, _ = _morawetz_sides(_Constant(c), 2.0, cfg, p, 64, 256)
    assert lhs == pytest.approx(2 * math.pi * n * abs(c) ** 2, rel=1e-13)
    assert rhs == pytest.approx(lhs, rel=1e-13)


@pytest.mark.parametrize("domain,n_const", [("disk", 100.0), ("annulus", 1.0)])
def test_morawetz_at_quasi_resonance(domain, n_const):
    p = MorawetzParams(0.5, 2.0, 1 / K_QR1, n_const, domain, 2.0)
    rep = morawetz_residual(K_QR1, MediumConfig(n_i=100.0), p)
    assert rep.passed and rep.relative <= 1e-8


def test_morawetz_needs_real_z():
    with pytest.raises(ValueError):
        morawetz_residual(1.0, MediumConfig(n_i=2.0, z=0.01j), MorawetzParams(0.5, 1, 1, 2.0))


@pytest.mark.parametrize("kw", [dict(domain="ball"), dict(n_r=8), dict(h=0.0),
                                dict(domain="annulus", R=1.0)])
def test_morawetz_params_validation(kw):
    base = dict(alpha=0.5, beta=1.0, h=1.0, n_const=1.0)
    base.update(kw)
    with pytest.raises(ValueError):
        MorawetzParams(**base)


def test_doubling_budget(monkeypatch):
    monkeypatch.setattr(identities, "DOUBLING_TOL", -1.0)
    with pytest.raises(QuadratureBudgetError):
        morawetz_residual(1.0, MediumConfig(n_i=2.0), MorawetzParams(0.5, 1.0, 1.0, 2.0))


def test_radiation_values():
    cfg = MediumConfig(n_i=100.0)
    reps = [radiation_boundary_functional(K_QR2, cfg, R) for R in (1.5, 2.0, 4.0)]
    assert all(r.passed and r.lhs <= 0 for r in reps)
    assert abs(reps[2].lhs) < abs(reps[1].lhs)


def test_radiation_zero_field():
    rep = radiation_boundary_functional(1.0, MediumConfig(n_i=1.0), 2.0)
    assert rep.passed and abs(rep.lhs) < 1e-25


def test_dtn_examples():
    assert dtn_positivity([0], [1.0]).rhs == pytest.approx(2 / math.pi)
    r = dtn_positivity([50], [3.0])
    assert r.rhs == pytest.approx(2 / (3 * math.pi)) and r.passed
    assert dtn_positivity(range(101), np.geomspace(0.5, 50, 40)).passed
    with pytest.raises(ValueError):
        dtn_positivity([0], [0.0])


def test_flux_absorbing_and_real():
    rep = flux_balance(1.0, MediumConfig(n_i=100.0, z=0.01j))
    assert rep.passed and rep.lhs <= 0
    rep = flux_balance(1.0, MediumConfig(n_i=100.0, z=0.0))
    assert rep.passed and rep.rhs == 0
    rep = flux_balance(1.0, MediumConfig(n_i=100.0, z=-0.02j))
    assert rep.passed and rep.lhs >= 0
