# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled cylinder-function kernel.

Same algorithm as ``_bessel_py`` (Miller backward recurrence for J, recessive
Hankel seeds from Neumann series / continued fraction / asymptotic expansion,
forward recurrence for H, Y from H - J), evaluated one argument at a time in C
with the GIL released.
"""
import numpy as np

from libc.math cimport ceil, fabs, log10, sqrt, M_PI, INFINITY, NAN, isfinite
from libc.stdlib cimport malloc, free

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double complex clog(double complex)
    double complex csqrt(double complex)
    double cabs(double complex)
    double complex conj(double complex)

cdef double EULER_GAMMA = 0.57721566490153286061
cdef double RESCALE = 1e200
cdef double TINY = 1e-30
cdef double NEUMANN_MAX_ABS = 1.0
cdef double ASYMPTOTIC_MIN_ABS = 20.0

cdef enum:
    SEED_AUTO = 0
    SEED_NEUMANN = 1
    SEED_CF = 2
    SEED_ASYMPTOTIC = 3

_METHODS = {"auto": SEED_AUTO, "neumann": SEED_NEUMANN, "cf": SEED_CF,
            "asymptotic": SEED_ASYMPTOTIC}


cdef inline double envj(double n, double x) noexcept nogil:
    return 0.5 * log10(6.28 * n) - n * log10(1.36 * x / n)


cdef int start_order(int M, double x) noexcept nogil:
    cdef int n0 = M + 15 + <int>ceil(x)
    cdef double need
    cdef int n
    if x < 1e-300:
        return n0
    need = 12.0
    if M + 1 > x:
        if envj(M + 1, x) > 0.0:
            need += envj(M + 1, x)
    n = M + 2
    if <int>x + 2 > n:
        n = <int>x + 2
    while envj(n, x) < need:
        n += 1 + n // 64
    return n if n > n0 else n0


cdef inline double l1(double complex z) noexcept nogil:
    return fabs(z.real) + fabs(z.imag)


cdef void miller(double complex w, int M, int extra, bint series, double complex* J,
                 double complex* y0, double complex* y1) noexcept nogil:
    cdef int N = start_order(M, cabs(w)) + extra
    cdef double complex s = -1j if w.imag >= 0 else 1j
    cdef double complex ph[4]
    ph[0] = 1.0
    ph[1] = s
    ph[2] = s * s
    ph[3] = s * s * s
    cdef double complex f_next = 0.0, f_cur = TINY, f_prev
    cdef double complex S = 2.0 * ph[N & 3] * f_cur
    cdef double complex sy0 = 0.0, sy1 = 0.0, c, lg
    cdef double complex two_over_w = 2.0 / w
    cdef int n, m, k, j
    for j in range(M + 2):
        J[j] = 0.0
    if N <= M + 1:
        J[N] = f_cur
    for n in range(N, 0, -1):
        f_prev = n * two_over_w * f_cur - f_next
        # cheap norm; only the order of magnitude matters here
        if l1(f_prev) > RESCALE:
            f_prev = f_prev / RESCALE
            f_cur = f_cur / RESCALE
            S = S / RESCALE
            sy0 = sy0 / RESCALE
            sy1 = sy1 / RESCALE
            for j in range(n, M + 2):
                J[j] = J[j] / RESCALE
        m = n - 1
        if m <= M + 1:
            J[m] = f_prev
        if m == 0:
            S = S + f_prev
        else:
            S = S + 2.0 * ph[m & 3] * f_prev
            if not series:
                pass
            elif m % 2 == 0:
                k = m // 2
                if k % 2 == 0:
                    sy0 = sy0 + f_prev / k
                else:
                    sy0 = sy0 - f_prev / k
            elif m >= 3:
                k = (m - 1) // 2
                if k % 2 == 0:
                    sy1 = sy1 + (2.0 * k + 1.0) / (k * (k + 1.0)) * f_prev
                else:
                    sy1 = sy1 - (2.0 * k + 1.0) / (k * (k + 1.0)) * f_prev
        f_next = f_cur
        f_cur = f_prev
    c = cexp(s * w) / S
    for j in range(M + 2):
        J[j] = J[j] * c
    if not series:
        return
    lg = clog(w / 2.0) + EULER_GAMMA
    y0[0] = (2.0 / M_PI) * lg * J[0] - (4.0 / M_PI) * sy0 * c
    y1[0] = -(2.0 / M_PI) / w * J[0] + (2.0 / M_PI) * (lg - 1.0) * J[1] - (2.0 / M_PI) * sy1 * c


cdef double complex cf_log_derivative(double complex w) noexcept nogil:
    cdef bint lower = w.imag < 0
    cdef double complex v = conj(w) if lower else w
    cdef double tiny = 1e-300
    cdef double complex f = tiny, C = tiny, D = 0.0, b, delta, g
    cdef double a
    cdef int k
    for k in range(1, 20000):
        a = (k - 0.5) * (k - 0.5)
        b = 2.0 * (v + 1j * k)
        D = b + a * D
        if D == 0:
            D = tiny
        C = b + a / C
        if C == 0:
            C = tiny
        D = 1.0 / D
        delta = C * D
        f = f * delta
        if cabs(delta - 1.0) < 1e-16:
            break
    g = 1j - 0.5 / v + (1j / v) * f
    return conj(g) if lower else g


cdef void hankel_asymptotic(double complex w, double complex* h0,
                            double complex* h1) noexcept nogil:
    cdef double sgn = 1.0 if w.imag >= 0 else -1.0
    cdef double complex acc, term, isg = 1j * sgn
    cdef double prev, mag, mu
    cdef int nu, k
    for nu in range(2):
        mu = 4.0 * nu * nu
        acc = 1.0
        term = 1.0
        prev = INFINITY
        for k in range(1, 400):
            term = term * (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * 8.0 * w) * isg
            mag = cabs(term)
            if mag >= prev or mag <= 1e-18 * cabs(acc):
                break
            acc = acc + term
            prev = mag
        term = csqrt(2.0 / (M_PI * w)) * cexp(isg * (w - nu * M_PI / 2 - M_PI / 4)) * acc
        if nu == 0:
            h0[0] = term
        else:
            h1[0] = term


cdef int seed_for(double complex w, int method) noexcept nogil:
    cdef double a
    if method != SEED_AUTO:
        return method
    a = cabs(w)
    if a < NEUMANN_MAX_ABS:
        return SEED_NEUMANN
    if a < ASYMPTOTIC_MIN_ABS:
        return SEED_CF
    return SEED_ASYMPTOTIC


cdef void jy_point(double complex w, int M, bint want_y, int method, int extra,
                   double complex* J, double complex* Y) noexcept nogil:
    cdef double complex y0, y1, h0, h1, g, isg, hm, hp
    cdef double sgn
    cdef int m, route
    route = seed_for(w, method)
    # the Neumann sums for Y_0, Y_1 are only needed on that route
    miller(w, M, extra, want_y and route == SEED_NEUMANN, J, &y0, &y1)
    if not want_y:
        return
    sgn = 1.0 if w.imag >= 0 else -1.0
    isg = 1j * sgn
    if route == SEED_NEUMANN:
        h0 = J[0] + isg * y0
        h1 = J[1] + isg * y1
    elif route == SEED_CF:
        g = cf_log_derivative(w)
        h0 = sgn * 2j / (M_PI * w * (g * J[0] + J[1]))
        h1 = -g * h0
    else:
        hankel_asymptotic(w, &h0, &h1)
    Y[0] = (h0 - J[0]) * (-isg)
    Y[1] = (h1 - J[1]) * (-isg)
    hm = h0
    hp = h1
    for m in range(1, M + 1):
        h0 = (2.0 * m / w) * hp - hm
        hm = hp
        hp = h0
        Y[m + 1] = (hp - J[m + 1]) * (-isg)


cdef bint wronskian_bad(double complex w, int M, double complex* J,
                        double complex* Y) noexcept nogil:
    cdef double complex lhs = J[M + 1] * Y[M] - J[M] * Y[M + 1]
    cdef double scale = 1.0 + cabs(J[M + 1] * Y[M]) + cabs(J[M] * Y[M + 1])
    if not isfinite(scale):
        return False
    return cabs(lhs - 2.0 / (M_PI * w)) > 1e-11 * scale


cdef void jy_checked(double complex w, int M, bint want_y, int method,
                     double complex* J, double complex* Y) noexcept nogil:
    cdef int extra = 0
    cdef int j
    if w == 0:
        for j in range(M + 2):
            J[j] = 0.0
            if want_y:
                Y[j] = NAN
        J[0] = 1.0
        return
    jy_point(w, M, want_y, method, 0, J, Y)
    if not want_y:
        return
    while wronskian_bad(w, M, J, Y) and extra <= 4 * (M + 64):
        extra = 2 * extra + M + 16
        jy_point(w, M, want_y, method, extra, J, Y)


def jy_batch(w, int M, bint want_y=True, method="auto"):
    """J_m(w) and optionally Y_m(w) for m = 0..M+1 at every point of ``w``.

    Mirrors ``quasires._bessel_py.jy_batch``.
    """
    cdef double complex[::1] wv = np.ascontiguousarray(w, dtype=complex).ravel()
    cdef Py_ssize_t n = wv.shape[0], i
    cdef int meth = _METHODS[method]
    J = np.empty((n, M + 2), dtype=complex)
    cdef double complex[:, ::1] Jv = J
    cdef double complex[:, ::1] Yv
    cdef double complex* scratch
    if want_y:
        Y = np.empty((n, M + 2), dtype=complex)
        Yv = Y
    else:
        Y = None
        scratch = <double complex*> malloc((M + 2) * sizeof(double complex))
    with nogil:
        for i in range(n):
            if want_y:
                jy_checked(wv[i], M, True, meth, &Jv[i, 0], &Yv[i, 0])
            else:
                jy_checked(wv[i], M, False, meth, &Jv[i, 0], scratch)
    if not want_y:
        free(scratch)
    return J, Y
