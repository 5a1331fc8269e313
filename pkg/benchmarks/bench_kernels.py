"""Compiled kernel against the numpy fallback on representative workloads.

Run ``python3 benchmarks/bench_kernels.py``; ``--quick`` shrinks the sizes.
"""
import argparse
import time

import numpy as np

from quasires import _bessel_py

try:
    from quasires import _bessel
except ImportError:  # extension not built
    _bessel = None


def workloads(scale):
    rng = np.random.default_rng(0)
    n = int(20000 * scale)
    return {
        # interior field: complex argument nbar*k*r, moderate order
        "interior J, M=60": (10.0 * np.sqrt(100 + 0.01j) * rng.uniform(0, 1, n), 60, False),
        # exterior Hankel on a grid
        "exterior J+Y, M=60": (rng.uniform(1.0, 9.0, n).astype(complex), 60, True),
        # z-plane contour samples: one argument per point, high order
        "contour J, M=180": (16 * np.sqrt(100 + 0.5 * np.exp(1j * rng.uniform(0, 6.3, n // 4))),
                             180, False),
        # small-argument / large-order corner
        "small |w| J+Y, M=30": (rng.uniform(0.05, 1.0, n) * np.exp(1j * rng.uniform(-2, 2, n)),
                                30, True),
    }


def best_of(fn, repeat):
    t = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        t.append(time.perf_counter() - t0)
    return min(t)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--quick", action="store_true")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    scale = 0.1 if args.quick else 1.0
    print(f"{'workload':24s} {'points':>7s} {'python s':>9s} {'compiled s':>11s} "
          f"{'speedup':>8s} {'max rel diff':>13s}")
    for name, (w, M, want_y) in workloads(scale).items():
        w = np.ascontiguousarray(w, dtype=complex)
        tp = best_of(lambda: _bessel_py.jy_batch(w, M, want_y, "auto"), args.repeat)
        if _bessel is None:
            print(f"{name:24s} {w.size:7d} {tp:9.3f} {'n/a':>11s}")
            continue
        tc = best_of(lambda: _bessel.jy_batch(w, M, want_y, "auto"), args.repeat)
        Jp, Yp = _bessel_py.jy_batch(w, M, want_y, "auto")
        Jc, Yc = _bessel.jy_batch(w, M, want_y, "auto")
        size = np.abs(Jp) + (np.abs(Yp) if want_y else 0)
        ok = np.isfinite(size) & (size > 0)
        diff = np.abs(Jp - Jc) + (np.abs(Yp - Yc) if want_y else 0)
        print(f"{name:24s} {w.size:7d} {tp:9.3f} {tc:11.3f} {tp / tc:8.1f} "
              f"{np.max(diff[ok] / size[ok]):13.1e}")


if __name__ == "__main__":
    main()
