"""Maximum-principle bound arithmetic and exponent bookkeeping.

Exponents are affine in the small parameters ``eps`` and ``eps'`` and are
kept symbolically as :class:`Exponent` (exact rationals) so that closed forms
can be compared exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

LOG_OVERFLOW = 1e6
MARGIN_SLACK = 1e-12  # log-space rounding at the boundary


class BoundOverflowError(OverflowError):
    """A log-space magnitude exceeded ``1e6``."""


# ------------------------------------------------------------ certificate ---

@dataclass(frozen=True)
class ScmpInput:
    """Data of the maximum-principle rectangle at one ``h``.

    ``delta`` must lie in ``(0, 1)`` and ``b >= 1``; ``C`` may be zero.
    """

    w: float
    a: float
    delta: float
    L: float
    C: float
    b: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.L > 0:
            raise ValueError("L must be positive")
        if not self.C >= 0:
            raise ValueError("C must be nonnegative")
        if not self.b >= 1:
            raise ValueError("b must be >= 1")


@dataclass(frozen=True)
class BoundCertificate:
    valid: bool
    interval: tuple
    bound_value: float
    log_bound: float
    log_margin: float


def _guard(x):
    if not abs(x) <= LOG_OVERFLOW:
        raise BoundOverflowError(f"log magnitude {x:.3e} exceeds {LOG_OVERFLOW:.0e}")
    return x


def scmp_certificate(inp: ScmpInput, h: float) -> BoundCertificate:
    """Check ``a² >= C h^(-3L) delta²`` and evaluate ``b delta^-1 e^(C+1)``.

    Everything is compared in log space; ``log_margin`` is
    ``log(a²) - log(C h^(-3L) delta²)`` (``inf`` when ``C = 0``).
    """
    if not h > 0:
        raise ValueError("h must be positive")
    lhs = 2.0 * math.log(inp.a)
    if inp.C == 0:
        margin = math.inf
    else:
        rhs = _guard(math.log(inp.C) - 3.0 * inp.L * math.log(h) + 2.0 * math.log(inp.delta))
        margin = lhs - rhs
    log_bound = _guard(math.log(inp.b) - math.log(inp.delta) + inp.C + 1.0)
    value = math.exp(log_bound) if log_bound < 709.0 else math.inf
    return BoundCertificate(valid=bool(margin >= -MARGIN_SLACK), interval=(inp.w - inp.a, inp.w + inp.a),
                            bound_value=value, log_bound=log_bound, log_margin=margin)


# -------------------------------------------------------------- exponents ---

@dataclass(frozen=True)
class Exponent:
    """``const + e1 * eps + e2 * eps'`` with rational coefficients."""

    const: Fraction
    eps: Fraction = Fraction(0)
    eps_prime: Fraction = Fraction(0)

    def __add__(self, other):
        o = other if isinstance(other, Exponent) else Exponent(Fraction(other))
        return Exponent(self.const + o.const, self.eps + o.eps, self.eps_prime + o.eps_prime)

    __radd__ = __add__

    def scale(self, c):
        c = Fraction(c)
        return Exponent(self.const * c, self.eps * c, self.eps_prime * c)

    def value(self, eps, eps_prime):
        return float(self.const) + float(self.eps) * eps + float(self.eps_prime) * eps_prime

    def __str__(self):
        parts = [_fmt(self.const)]
        for c, name in ((self.eps, "eps"), (self.eps_prime, "eps'")):
            if c:
                parts.append(f"{'+' if c > 0 else '-'} {_fmt(abs(c)) + '*' if abs(c) != 1 else ''}{name}")
        return " ".join(parts)


def _fmt(q):
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{float(q):g}"


EPS = Exponent(Fraction(0), Fraction(1))
EPS_PRIME = Exponent(Fraction(0), Fraction(0), Fraction(1))


@dataclass(frozen=True)
class ExponentPlan:
    """Exponents of the excluded-set argument.

    ``a = C' delta~ h^(M+N)``, ``delta(h) = C'' delta~ h^(5M/2+N+3eps'/2)`` and
    ``L = M + eps'``.  ``final`` is the exponent of ``k`` in the resolvent
    bound in its usual stated form (``3eps'/2`` absorbed into
    ``eps``); ``chained`` is what the chain of inequalities gives literally.
    """

    d: int
    N: float
    eps: float
    eps_prime: float
    case: str
    M: float
    a_exponent: float
    delta_exponent: float
    final_exponent: float
    chained_exponent: float
    L: float
    symbolic: dict

    def as_dict(self):
        out = {k: getattr(self, k) for k in (
            "d", "N", "eps", "eps_prime", "case", "M", "a_exponent", "delta_exponent",
            "final_exponent", "chained_exponent", "L")}
        out["symbolic"] = dict(self.symbolic)
        return out


CASES = ("smooth", "penetrable")


def exponent_forms(d, N, case):
    """Symbolic exponents as :class:`Exponent` values (exact rationals)."""
    if case not in CASES:
        raise ValueError(f"case must be one of {CASES}")
    d = Fraction(d)
    N = Fraction(N)
    if case == "smooth":
        M = Exponent(d + 1) + EPS
        final = Exponent(Fraction(5, 2) * (d + 1) + N) + EPS
        extra = Fraction(0)
    else:
        # pole count k^(d+2); the stated bound carries 2 + 5(d+3)/2
        M = Exponent(d + 2)
        final = Exponent(2 + Fraction(5, 2) * (d + 3) + N) + EPS
        extra = Fraction(2)
    a_exp = M + N
    delta_exp = M.scale(Fraction(5, 2)) + N + EPS_PRIME.scale(Fraction(3, 2))
    chained = delta_exp + extra
    L = M + EPS_PRIME
    return {"M": M, "a_exponent": a_exp, "delta_exponent": delta_exp, "final_exponent": final,
            "chained_exponent": chained, "L": L}


def exponent_plan(d, N, eps, eps_prime, case) -> ExponentPlan:
    """Fill the exponent bookkeeping for dimension ``d``.

    Examples
    --------
    >>> exponent_plan(2, 0, 0.1, 0.1, "penetrable").final_exponent
    14.6
    """
    if int(d) != d or d < 1:
        raise ValueError("d must be a positive integer")
    if not N >= 0:
        raise ValueError("N must be nonnegative")
    if not (eps > 0 and eps_prime > 0):
        raise ValueError("eps and eps_prime must be positive")
    forms = exponent_forms(int(d), Fraction(N).limit_denominator(10**12) if not isinstance(N, int) else N,
                           case)
    ev = {k: v.value(eps, eps_prime) for k, v in forms.items()}
    return ExponentPlan(d=int(d), N=float(N), eps=float(eps), eps_prime=float(eps_prime), case=case,
                        M=ev["M"], a_exponent=ev["a_exponent"], delta_exponent=ev["delta_exponent"],
                        final_exponent=ev["final_exponent"], chained_exponent=ev["chained_exponent"],
                        L=ev["L"], symbolic={k: str(v) for k, v in forms.items()})


def instantiation_threshold(plan: ExponentPlan, C, C1, C2, delta_tilde):
    """Largest ``h0`` with the rectangle conditions met for every ``h < h0``.

    With ``a = C1 delta~ h^(M+N)``, ``delta = C2 delta~ h^(delta_exponent)`` and
    ``L = M + eps'``, the powers of ``h`` in ``a² >= C h^(-3L) delta²`` cancel,
    so that condition holds for all ``h`` iff ``C1² >= C C2²`` (otherwise for
    none).  ``delta < 1`` then requires ``h < (C2 delta~)^(-1/delta_exponent)``.
    Returns ``(h0, log_margin)``; ``h0`` is ``0`` when the first condition fails.
    """
    cancel = 2 * plan.a_exponent - (-3 * plan.L + 2 * plan.delta_exponent)
    if abs(cancel) > 1e-12:
        raise ValueError("h-powers do not cancel for this plan")
    if C == 0:
        margin = math.inf
    else:
        margin = 2 * math.log(C1) - (math.log(C) + 2 * math.log(C2))
    if margin < 0:
        return 0.0, margin
    log_h0 = -math.log(C2 * delta_tilde) / plan.delta_exponent
    return (math.exp(log_h0) if log_h0 < 709 else math.inf), margin


# ------------------------------------------------------------- empirical ---

@dataclass(frozen=True)
class EmpiricalReport:
    C2: float
    level: float
    excluded_measure: float
    allowed_measure: float
    excluded_count: int
    feasible: bool
    degenerate: bool


def empirical_vs_certified(sweep, plan: ExponentPlan, delta_tilde: float) -> EmpiricalReport:
    """Smallest ``C2`` with ``amp <= (C2/delta~) k^final`` off an allowed exclusion.

    Up to ``floor(delta~ k^-N / spacing)`` samples may be excluded, the largest
    first (sentinels always).  ``C2 = delta~ * level / k^final`` where ``level``
    is the largest remaining amplification.
    """
    if not delta_tilde > 0:
        raise ValueError("delta_tilde must be positive")
    k = sweep.k
    allowed = delta_tilde * k ** (-plan.N)
    amp = np.asarray(sweep.amp, dtype=float)
    bad = np.asarray(sweep.flagged, dtype=bool) | ~np.isfinite(amp)
    budget = int(math.floor(allowed / sweep.spacing + 1e-9))
    feasible = int(bad.sum()) <= budget
    order = np.argsort(-np.where(bad, np.inf, amp), kind="stable")
    n_ex = min(budget, amp.size)
    rest = order[n_ex:]
    if rest.size == 0:
        level = 0.0
    else:
        level = float(amp[rest].max())
    degenerate = rest.size == 0
    C2 = delta_tilde * level / k**plan.final_exponent
    return EmpiricalReport(C2=C2, level=level, excluded_measure=n_ex * sweep.spacing,
                           allowed_measure=allowed, excluded_count=n_ex,
                           feasible=bool(feasible), degenerate=bool(degenerate))
