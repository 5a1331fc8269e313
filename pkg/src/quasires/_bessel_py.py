"""Pure-numpy cylinder-function kernel.

Vectorised over arguments; recurrences over the order run as Python loops.
This is the fallback used when the compiled ``_bessel`` extension is missing,
and it implements the same algorithm:

* J_0..J_{M+1} by Miller backward recurrence, normalised with the
  generating-function identity ``exp(-/+ i w) = J_0 + 2 sum (-/+ i)^n J_n``
  (sign chosen so the sum does not cancel);
* seeds H_0, H_1 for the Hankel function that is recessive in ``w``
  (H^(1) for ``Im w >= 0``, H^(2) otherwise) from one of

  - the Neumann series for Y_0, Y_1 (accumulated during the Miller pass),
    used for ``|w| < 1``;
  - the continued fraction for H'/H plus the J/H Wronskian, ``1 <= |w| < 20``;
  - the large-argument Hankel expansion, ``|w| >= 20``;

* forward recurrence of that Hankel function, and Y from ``H - J``.
"""
import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061
RESCALE = 1e200
TINY = 1e-30
NEUMANN_MAX_ABS = 1.0
ASYMPTOTIC_MIN_ABS = 20.0
SEED_METHODS = ("neumann", "cf", "asymptotic")
# magnitude bins for batching; the upper edge of a bin sets its start order
BIN_EDGES = np.concatenate(([0.0], np.geomspace(0.5, 1e4, 30)))


def envj(n, x):
    """-log10 of the rough envelope of J_n(x), meaningful for n > x."""
    return 0.5 * math.log10(6.28 * n) - n * math.log10(1.36 * x / n)


def start_order(M, x):
    """Backward-recurrence start order for orders up to ``M + 1`` at ``|w| = x``."""
    n0 = M + 15 + int(math.ceil(x))
    if x < 1e-300:
        return n0
    need = 12.0 + max(0.0, envj(M + 1, x) if M + 1 > x else 0.0)
    n = max(M + 2, int(x) + 2)
    while envj(n, x) < need:
        n += 1 + n // 64
    return max(n, n0)


def seed_method(w):
    a = abs(w)
    if a < NEUMANN_MAX_ABS:
        return "neumann"
    if a < ASYMPTOTIC_MIN_ABS:
        return "cf"
    return "asymptotic"


def _miller(w, M, x, extra=0):
    """Normalised J_0..J_{M+1} plus the Neumann-series Y_0, Y_1.

    ``x`` is an upper bound on ``|w|`` used to pick the start order; it is
    taken from fixed magnitude bins so results do not depend on how the
    arguments were batched.
    """
    npts = w.size
    N = start_order(M, x) + extra
    up = w.imag >= 0
    s = np.where(up, -1j, 1j)
    phases = [np.ones(npts, complex), s, s * s, s * s * s]

    J = np.zeros((npts, M + 2), dtype=complex)
    f_next = np.zeros(npts, complex)
    f_cur = np.full(npts, TINY, complex)
    S = 2.0 * phases[N % 4] * f_cur
    sy0 = np.zeros(npts, complex)
    sy1 = np.zeros(npts, complex)
    if N <= M + 1:
        J[:, N] = f_cur
    two_over_w = 2.0 / w
    for n in range(N, 0, -1):
        f_prev = n * two_over_w * f_cur - f_next
        big = np.abs(f_prev) > RESCALE
        if big.any():
            scale = np.where(big, 1.0 / RESCALE, 1.0)
            f_prev = f_prev * scale
            f_cur = f_cur * scale
            S = S * scale
            sy0 = sy0 * scale
            sy1 = sy1 * scale
            J *= scale[:, None]
        m = n - 1
        if m <= M + 1:
            J[:, m] = f_prev
        if m == 0:
            S = S + f_prev
        else:
            S = S + 2.0 * phases[m % 4] * f_prev
            if m % 2 == 0:
                k = m // 2
                sy0 = sy0 + ((-1) ** k / k) * f_prev
            elif m >= 3:
                k = (m - 1) // 2
                sy1 = sy1 + ((-1) ** k * (2 * k + 1) / (k * (k + 1))) * f_prev
        f_next, f_cur = f_cur, f_prev

    c = np.exp(s * w) / S
    J *= c[:, None]
    lg = np.log(w / 2.0) + EULER_GAMMA
    y0 = (2.0 / np.pi) * lg * J[:, 0] - (4.0 / np.pi) * sy0 * c
    y1 = -(2.0 / np.pi) / w * J[:, 0] + (2.0 / np.pi) * (lg - 1.0) * J[:, 1] - (2.0 / np.pi) * sy1 * c
    return J, y0, y1


def hankel_log_derivative(w, tol=1e-16, maxit=20000):
    """``H0'/H0 = -H1/H0`` for the recessive Hankel kind, by continued fraction.

    For ``Im w >= 0`` this is the H^(1) ratio; below the axis the H^(2) ratio
    via ``H2(w) = conj(H1(conj w))``.
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    lower = w.imag < 0
    v = np.where(lower, np.conj(w), w)
    tiny = 1e-300
    f = np.full(v.shape, tiny, complex)
    C = f.copy()
    D = np.zeros(v.shape, complex)
    done = np.zeros(v.shape, dtype=bool)
    for k in range(1, maxit):
        a = (k - 0.5) ** 2
        b = 2.0 * (v + 1j * k)
        D = b + a * D
        D = np.where(D == 0, tiny, D)
        C = b + a / C
        C = np.where(C == 0, tiny, C)
        D = 1.0 / D
        delta = C * D
        f = np.where(done, f, f * delta)
        done |= np.abs(delta - 1.0) < tol
        if done.all():
            break
    g = 1j - 0.5 / v + (1j / v) * f
    return np.where(lower, np.conj(g), g)


def _hankel_asymptotic(w):
    """Recessive-kind H_0, H_1 by the large-argument expansion."""
    up = w.imag >= 0
    sgn = np.where(up, 1.0, -1.0)
    out = []
    for nu in (0, 1):
        mu = 4.0 * nu * nu
        acc = np.ones_like(w)
        term = np.ones_like(w)
        prev = np.full(w.shape, np.inf)
        live = np.ones(w.shape, dtype=bool)
        for k in range(1, 400):
            term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * w) * (1j * sgn)
            mag = np.abs(term)
            live &= (mag < prev) & (mag > 1e-18 * np.abs(acc))
            if not live.any():
                break
            acc = np.where(live, acc + term, acc)
            prev = mag
        phase = w - nu * np.pi / 2 - np.pi / 4
        out.append(np.sqrt(2.0 / (np.pi * w)) * np.exp(1j * sgn * phase) * acc)
    return out[0], out[1]


def _hankel_seeds(w, J, y0, y1, methods):
    up = w.imag >= 0
    sgn = np.where(up, 1.0, -1.0)
    h0 = np.empty(w.size, complex)
    h1 = np.empty(w.size, complex)
    sel = methods == "neumann"
    if sel.any():
        h0[sel] = J[sel, 0] + 1j * sgn[sel] * y0[sel]
        h1[sel] = J[sel, 1] + 1j * sgn[sel] * y1[sel]
    sel = methods == "cf"
    if sel.any():
        g = hankel_log_derivative(w[sel])
        h0[sel] = sgn[sel] * 2j / (np.pi * w[sel] * (g * J[sel, 0] + J[sel, 1]))
        h1[sel] = -g * h0[sel]
    sel = methods == "asymptotic"
    if sel.any():
        h0[sel], h1[sel] = _hankel_asymptotic(w[sel])
    return h0, h1


def _y_from_hankel(w, J, h0, h1, M):
    up = w.imag >= 0
    sgn = np.where(up, 1.0, -1.0)
    H = np.empty_like(J)
    H[:, 0] = h0
    H[:, 1] = h1
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(1, M + 1):
            H[:, m + 1] = (2.0 * m / w) * H[:, m] - H[:, m - 1]
        # H = J + i*sgn*Y
        return (H - J) * (-1j * sgn)[:, None]


def _wronskian_bad(J, Y, w, M):
    lhs = J[:, M + 1] * Y[:, M] - J[:, M] * Y[:, M + 1]
    scale = 1.0 + np.abs(J[:, M + 1] * Y[:, M]) + np.abs(J[:, M] * Y[:, M + 1])
    with np.errstate(invalid="ignore"):
        bad = np.abs(lhs - 2.0 / (np.pi * w)) > 1e-11 * scale
    return bad & np.isfinite(scale)


def _group(w, M, want_y, method, x, extra=0):
    J, y0, y1 = _miller(w, M, x, extra)
    if not want_y:
        return J, None
    if method == "auto":
        methods = np.array([seed_method(v) for v in w])
    else:
        methods = np.full(w.size, method)
    h0, h1 = _hankel_seeds(w, J, y0, y1, methods)
    return J, _y_from_hankel(w, J, h0, h1, M)


def jy_batch(w, M, want_y=True, method="auto"):
    """J_m(w) and optionally Y_m(w) for m = 0..M+1 at every point of ``w``.

    Returns ``(J, Y)`` of shape ``(len(w), M + 2)``; ``Y`` is ``None`` when
    ``want_y`` is false.  ``w == 0`` gives ``J = [1, 0, ...]`` and ``Y = nan``.
    Arguments are not range-checked here.  ``method`` forces the Hankel seed
    route (one of ``SEED_METHODS``) instead of choosing by ``|w|``.
    """
    w = np.ascontiguousarray(w, dtype=complex).ravel()
    J = np.empty((w.size, M + 2), dtype=complex)
    Y = np.empty((w.size, M + 2), dtype=complex) if want_y else None
    zero = w == 0
    idx = np.flatnonzero(~zero)
    if idx.size:
        # group by magnitude so each group gets a suitable start order
        mags = np.abs(w[idx])
        groups = np.digitize(mags, BIN_EDGES)
        for g in np.unique(groups):
            sel = idx[groups == g]
            x = BIN_EDGES[g] if g < BIN_EDGES.size else float(mags.max())
            Jg, Yg = _group(w[sel], M, want_y, method, x)
            if want_y:
                extra = 0
                bad = _wronskian_bad(Jg, Yg, w[sel], M)
                while bad.any() and extra <= 4 * (M + 64):
                    extra = 2 * extra + M + 16
                    pos = np.flatnonzero(bad)
                    Jb, Yb = _group(w[sel[pos]], M, True, method, x, extra)
                    Jg[pos], Yg[pos] = Jb, Yb
                    bad[:] = False
                    bad[pos] = _wronskian_bad(Jb, Yb, w[sel[pos]], M)
                Y[sel] = Yg
            J[sel] = Jg
    if zero.any():
        J[zero] = 0.0
        J[zero, 0] = 1.0
        if want_y:
            Y[zero] = np.nan
    return J, Y
