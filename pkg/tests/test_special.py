import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasires import _bessel_py, special
from quasires.special import DomainError, cyl_all, cyl_j, cyl_y, derivatives, jy

import oracle


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


@pytest.fixture(scope="module")
def seeded_oracle():
    m, w = oracle.seeded_points()
    keep = np.array([special.in_domain(int(mm), ww) for mm, ww in zip(m, w)])
    m, w = m[keep], w[keep]
    ref = np.array([oracle.bessel_jy(int(mm), ww) for mm, ww in zip(m, w)])
    return m, w, ref


def _table_values(kernel, m, w):
    J, Y = kernel.jy_batch(np.asarray(w, dtype=complex), int(m.max()), True, "auto")
    i = np.arange(w.size)
    return J[i, m], Y[i, m]


@pytest.mark.parametrize("kernel", ["active", "python"])
def test_oracle_cross_validation(seeded_oracle, kernel):
    m, w, ref = seeded_oracle
    assert m.size >= 900
    mod = special._kernel if kernel == "active" else _bessel_py
    J, Y = _table_values(mod, m, w)
    # relative to the size of the J/Y pair; J alone can sit near a zero
    errJ = np.abs(J - ref[:, 0]) / np.maximum(np.abs(ref[:, 0]), 1e-300)
    errY = np.abs(Y - ref[:, 1]) / np.abs(ref[:, 1])
    big = np.abs(ref[:, 0]) > 1e-12 * np.abs(ref[:, 1])
    assert errY.max() <= 1e-10
    assert errJ[big].max() <= 1e-10


def test_compiled_matches_fallback():
    if special.BACKEND != "compiled":
        pytest.skip("extension not built")
    w = special.wronskian_lattice()
    J1, Y1 = special._kernel.jy_batch(w, 150, True, "auto")
    J2, Y2 = _bessel_py.jy_batch(w, 150, True, "auto")
    ok = np.isfinite(Y1) & np.isfinite(Y2)
    # scale by the pair: J or Y alone may sit at a real zero
    size = np.abs(J1[ok]) + np.abs(Y1[ok])
    assert np.max(np.abs(J1[ok] - J2[ok]) / size) < 1e-12
    assert np.max(np.abs(Y1[ok] - Y2[ok]) / size) < 1e-12


def test_pure_python_env_switch():
    code = "from quasires import special; print(special.BACKEND, special.cyl_j(0, 1.0).real)"
    env = dict(os.environ, QUASIRES_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out[0] == "python"
    assert abs(float(out[1]) - 0.7651976865579666) < 1e-15


def test_wronskian_lattice():
    r = special.wronskian_residuals(special.wronskian_lattice(), 200)
    assert np.nanmax(r) <= 1e-10
    assert np.isfinite(r).sum() > 30000


def test_wronskian_examples():
    v = cyl_all(0, 1.0)
    assert _rel(cyl_j(1, 1.0) * v.y - v.j * cyl_y(1, 1.0), 2 / math.pi) < 1e-14
    for m, x in [(0, 1.0), (50, 3.0)]:
        v = cyl_all(m, x)
        assert _rel((v.h1p * np.conj(v.h1)).imag, 2 / (math.pi * x)) < 1e-10


def test_known_values():
    assert _rel(cyl_j(0, 1.0), 0.7651976865579666) < 1e-15
    assert _rel(cyl_y(0, 1.0), 0.08825696421567696) < 1e-12
    assert _rel(cyl_j(2, 10.0), 0.2546303136851206) < 1e-12


def test_cylvalue_fields():
    v = cyl_all(3, 2.0 + 0.5j)
    assert v.h1 == v.j + 1j * v.y
    assert v.h1p == v.jp + 1j * v.yp
    J, Y = oracle.bessel_jy(2, 2.0 + 0.5j), oracle.bessel_jy(4, 2.0 + 0.5j)
    assert _rel(v.jp, 0.5 * (J[0] - Y[0])) < 1e-12


@pytest.mark.parametrize("m,w", [(-1, 1.0), (1001, 1.0), (0, 2e4), (0, 1 + 60j),
                                 (0, complex("nan"))])
def test_domain_errors(m, w):
    with pytest.raises(DomainError):
        cyl_j(m, w)


@pytest.mark.parametrize("w", [0.0, -2.0])
def test_y_singular_and_branch_cut(w):
    with pytest.raises(DomainError):
        cyl_y(0, w)
    assert np.isfinite(cyl_j(0, w))


def test_unrepresentable_rejected():
    with pytest.raises(DomainError):
        cyl_y(400, 0.1)


def test_derivatives_shape():
    C = np.arange(12.0).reshape(2, 6)
    D = derivatives(C)
    assert D.shape == (2, 5)
    assert D[0, 0] == -C[0, 1]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 80), st.floats(0.2, 60.0), st.floats(-1.0, 1.0))
def test_three_term_recurrence(m, a, b):
    w = complex(a, b * min(a, 15.0))
    J, Y = jy([w], m + 1)
    for C in (J[0], Y[0]):
        lhs = C[m - 1] + C[m + 1]
        rhs = 2 * m / w * C[m]
        assert abs(lhs - rhs) <= 1e-11 * (abs(C[m - 1]) + abs(C[m + 1]) + abs(rhs))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 60), st.floats(0.1, 200.0))
def test_conjugate_symmetry(m, x):
    w = complex(x, 0.3 * x / (1 + x))
    a, b = cyl_j(m, w), cyl_j(m, w.conjugate())
    assert abs(a - b.conjugate()) <= 1e-14 * max(abs(a), 1e-300)
