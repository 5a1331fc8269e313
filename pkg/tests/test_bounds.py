import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasires.bounds import (BoundOverflowError, ScmpInput, empirical_vs_certified,
                             exponent_forms, exponent_plan, instantiation_threshold,
                             scmp_certificate)
from quasires.modal import MediumConfig
from quasires.probe import sweep_z

K_QR1 = 0.992772133752486


def test_certificate_examples():
    h, L = 0.1, 1.0
    for C in (0.5, 2.0, 4.0):
        c = scmp_certificate(ScmpInput(0.0, 1.0, 0.5 * h ** (1.5 * L), L, C), h)
        assert c.valid
    c = scmp_certificate(ScmpInput(0.0, 1.0, 0.5 * h ** 1.5, L, 4.5), h)
    assert not c.valid
    c = scmp_certificate(ScmpInput(3.0, 0.25, 0.5, 1.0, 0.0), 0.1)
    assert c.bound_value == pytest.approx(2 * math.e, rel=1e-15)
    assert c.interval == (2.75, 3.25)


@pytest.mark.parametrize("kw", [dict(delta=1.0), dict(delta=0.0), dict(a=0.0), dict(b=0.5),
                                dict(L=0.0), dict(C=-1.0)])
def test_input_validation(kw):
    base = dict(w=0.0, a=1.0, delta=0.5, L=1.0, C=1.0, b=1.0)
    base.update(kw)
    with pytest.raises(ValueError):
        ScmpInput(**base)


def test_log_space_large_exponents():
    h = 1e-3
    c = scmp_certificate(ScmpInput(0.0, h ** 20, h ** 30, 20.0, 1.0), h)
    assert c.valid is False and math.isfinite(c.log_margin)
    with pytest.raises(BoundOverflowError):
        scmp_certificate(ScmpInput(0.0, 1.0, 0.5, 1.0, 2e6), 0.1)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-6, 1e3), st.floats(1e-12, 0.99), st.floats(0.1, 10), st.floats(0, 100),
       st.floats(1e-4, 0.9), st.floats(0.1, 0.99), st.floats(1.0, 10.0))
def test_certificate_monotone(a, delta, L, C, h, shrink, grow):
    base = scmp_certificate(ScmpInput(0, a, delta, L, C), h)
    if base.valid:
        assert scmp_certificate(ScmpInput(0, a, delta * shrink, L, C), h).valid
        assert scmp_certificate(ScmpInput(0, a * grow, delta, L, C), h).valid


def test_reference_exponents():
    assert str(exponent_forms(2, 0, "penetrable")["final_exponent"]) == "14.5 + eps"
    assert str(exponent_forms(2, 0, "smooth")["final_exponent"]) == "7.5 + eps"
    f = exponent_forms(2, 0, "penetrable")["final_exponent"]
    assert (f.const, f.eps, f.eps_prime) == (Fraction(29, 2), 1, 0)
    assert exponent_plan(3, 1, 0.25, 0.5, "penetrable").final_exponent == 18.25
    assert exponent_plan(2, 0, 0.25, 0.5, "smooth").final_exponent == 7.75


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 12), st.fractions(0, 10, max_denominator=8),
       st.fractions(Fraction(1, 64), 2, max_denominator=64),
       st.fractions(Fraction(1, 64), 2, max_denominator=64),
       st.sampled_from(["smooth", "penetrable"]))
def test_plan_closed_forms(d, N, eps, epsp, case):
    f = exponent_forms(d, N, case)
    ev = {k: v.const + v.eps * eps + v.eps_prime * epsp for k, v in f.items()}
    M = d + 1 + eps if case == "smooth" else Fraction(d + 2)
    assert ev["M"] == M
    assert ev["a_exponent"] == M + N
    assert ev["delta_exponent"] == Fraction(5, 2) * M + N + Fraction(3, 2) * epsp
    assert ev["L"] == M + epsp
    if case == "smooth":
        assert ev["final_exponent"] == Fraction(5, 2) * (d + 1) + N + eps
        assert ev["chained_exponent"] == ev["delta_exponent"]
    else:
        assert ev["final_exponent"] == 2 + Fraction(5, 2) * (d + 3) + N + eps
        assert ev["chained_exponent"] == 2 + ev["delta_exponent"]
    plan = exponent_plan(d, float(N), float(eps), float(epsp), case)
    assert plan.final_exponent == pytest.approx(float(ev["final_exponent"]), rel=1e-15)


@pytest.mark.parametrize("args", [(0, 0, 0.1, 0.1, "smooth"), (2, -1, 0.1, 0.1, "smooth"),
                                  (2, 0, 0.0, 0.1, "smooth"), (2, 0, 0.1, 0.1, "rough")])
def test_plan_validation(args):
    with pytest.raises(ValueError):
        exponent_plan(*args)


def test_instantiation_threshold():
    plan = exponent_plan(2, 0, 0.1, 0.1, "penetrable")
    C, C1, C2, dt = 4.0, 3.0, 1.0, 0.1
    h0, margin = instantiation_threshold(plan, C, C1, C2, dt)
    assert margin > 0
    for h in (0.5 * h0, 1e-3 * h0):
        a = C1 * dt * h ** plan.a_exponent
        delta = C2 * dt * h ** plan.delta_exponent
        assert scmp_certificate(ScmpInput(0, a, delta, plan.L, C), h).valid
    assert instantiation_threshold(plan, C, 1.0, 1.0, dt)[0] == 0.0


class _Sweep:
    def __init__(self, amp, rho=0.05, k=1.0, flagged=None):
        self.amp = np.asarray(amp, float)
        self.flagged = np.zeros(self.amp.size, bool) if flagged is None else flagged
        self.k, self.rho = k, rho
        self.spacing = 2 * rho / self.amp.size


def test_empirical_constant_sweep():
    plan = exponent_plan(2, 0, 0.1, 0.1, "penetrable")
    rep = empirical_vs_certified(_Sweep(np.ones(101), k=2.0), plan, 1e-4)
    assert rep.excluded_measure == 0 and rep.feasible and not rep.degenerate
    assert rep.C2 == pytest.approx(1e-4 * 2.0 ** -plan.final_exponent, rel=1e-12)


def test_empirical_vacuum_sweep():
    # n_i = 1 with z swept is not constant, but stays close to 1
    plan = exponent_plan(2, 0, 0.1, 0.1, "penetrable")
    sw = sweep_z(2.0, 0.05, 101, MediumConfig(n_i=1.0))
    assert sw.value_at(0.0) == pytest.approx(1.0, abs=1e-12)
    rep = empirical_vs_certified(sw, plan, 1e-4)
    assert rep.feasible and rep.level < 1.1


def test_empirical_quasi_resonance():
    plan = exponent_plan(2, 0, 0.1, 0.1, "penetrable")
    sw = sweep_z(K_QR1, 0.05, 201, MediumConfig(n_i=100.0))
    rep = empirical_vs_certified(sw, plan, 0.01)
    assert rep.feasible and rep.excluded_measure <= 0.01
    assert rep.level < sw.value_at(0.0)


def test_empirical_exclude_everything():
    plan = exponent_plan(2, 0, 0.1, 0.1, "penetrable")
    sw = _Sweep(np.linspace(1, 5, 101))
    rep = empirical_vs_certified(sw, plan, 2 * sw.rho)
    assert rep.degenerate and rep.C2 == 0


def test_empirical_infeasible_when_sentinels_exceed_budget():
    plan = exponent_plan(2, 0, 0.1, 0.1, "penetrable")
    amp = np.ones(101)
    flag = np.zeros(101, bool)
    flag[40:60] = True
    amp[flag] = np.inf
    rep = empirical_vs_certified(_Sweep(amp, flagged=flag), plan, 1e-3)
    assert not rep.feasible


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1.0, 1e6), min_size=101, max_size=101),
       st.floats(1e-4, 0.05), st.floats(1.0, 4.0))
def test_level_nonincreasing_in_delta_tilde(amp, dt, factor):
    plan = exponent_plan(2, 0, 0.1, 0.1, "penetrable")
    sw = _Sweep(amp)
    a = empirical_vs_certified(sw, plan, dt)
    b = empirical_vs_certified(sw, plan, dt * factor)
    assert b.level <= a.level
    assert b.C2 / (dt * factor) <= a.C2 / dt * (1 + 1e-12)
