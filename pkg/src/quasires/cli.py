"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numeric
failure.  Every file written gets a sidecar ``<file>.manifest.json``.
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BoundOverflowError, exponent_plan
from .identities import (MorawetzParams, QuadratureBudgetError, QuadReport, dtn_positivity,
                         flux_balance, morawetz_residual, radiation_boundary_functional)
from .modal import FIELD_KINDS, CapExceededError, MediumConfig, NearSingularError, evaluate_field
from .probe import ProbeSpec, sweep_z
from .search import (RefinementBudgetError, ZeroOnContourError, find_quasi_resonances,
                     find_z_poles)
from . import serialize, special
from .special import DomainError

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

NUMERIC_ERRORS = (DomainError, NearSingularError, CapExceededError, ZeroOnContourError,
                  RefinementBudgetError, QuadratureBudgetError, BoundOverflowError,
                  ArithmeticError)

INC_ANGLE = math.pi / 6
K_QR1 = 0.992772133752486
K_QR2 = 2.19476917403094
SUITES = ("wronskian", "morawetz", "radiation", "dtn", "flux")


class NumericFailure(RuntimeError):
    """Raised by a command whose result is incomplete."""


# ---------------------------------------------------------------- output ---

def _write(path, data: bytes):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(data)


def _manifest(args, outputs, derived, t0, seed=None):
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "jobs", "command") and v is not None}
    params = {k: (str(v) if isinstance(v, complex) else v) for k, v in params.items()}
    return {
        "command": args.command,
        "parameters": params,
        "version": __version__,
        "backend": special.BACKEND,
        "seed": seed,
        "outputs": [str(p) for p in outputs],
        "derived": derived,
        "runtime": {"jobs": int(args.jobs), "duration_s": time.perf_counter() - t0},
    }


def _emit(args, files, derived=None, t0=0.0, seed=None):
    """Write data files, then one manifest per file."""
    for path, data in files:
        _write(path, data)
    man = _manifest(args, [p for p, _ in files], derived or {}, t0, seed)
    serialize.validate(man, "manifest")
    text = serialize.json_text(man).encode("utf-8")
    for path, _ in files:
        _write(f"{path}.manifest.json", text)


def _stdout(data: bytes):
    sys.stdout.buffer.write(data)
    sys.stdout.flush()


# -------------------------------------------------------------- commands ---

def cmd_resonances(args):
    if not 0 < args.kmin < args.kmax:
        raise UsageError("need 0 < --kmin < --kmax")
    cfg = MediumConfig(n_i=args.ni)
    mmax = args.mmax
    if mmax is None:
        mmax = int(math.ceil(math.sqrt(args.ni) * args.kmax)) + 10
    t0 = time.perf_counter()
    res = find_quasi_resonances(cfg, args.kmin, args.kmax, mmax, step=args.step)
    # residual relative to the size of the two terms of D_m
    rows = [(q.k_qr, q.width, q.m_dom, q.residual / q.scale) for q in res]
    data = serialize.csv_bytes(["k_qr", "width", "m_dom", "residual"], rows)
    derived = {"m_max": mmax, "rejected": len(res.failures)}
    if args.out:
        _emit(args, [(args.out, data)], derived, t0)
    else:
        _stdout(data)
    return EXIT_OK


def cmd_field(args):
    if not (args.out_pgm or args.out_csv):
        raise UsageError("give --out-pgm and/or --out-csv")
    if not 2 <= args.res <= 4096:
        raise UsageError("--res must lie in 2..4096")
    t0 = time.perf_counter()
    cfg = MediumConfig(n_i=args.ni, z=args.z, theta_inc=args.angle)
    grid = evaluate_field(args.k, cfg, extent=args.extent, resolution=args.res, kind=args.kind,
                          jobs=args.jobs)
    mag = np.abs(grid.values)
    white = serialize.pgm_scale(mag)
    files = []
    if args.out_pgm:
        files.append((args.out_pgm, serialize.pgm_bytes(mag, white)))
    if args.out_csv:
        header = [f"col_{j}" for j in range(args.res)]
        files.append((args.out_csv, serialize.csv_bytes(header, mag.tolist())))
    derived = {"p99": white, "max_abs": float(mag.max()), "modes": grid.modes}
    _emit(args, files, derived, t0)
    return EXIT_OK


def cmd_sweep_z(args):
    if args.samples < 101 or args.samples % 2 == 0:
        raise UsageError("--samples must be odd and >= 101")
    t0 = time.perf_counter()
    spec = ProbeSpec(probe_radius=args.probe_radius, nodes=args.nodes)
    sw = sweep_z(args.k, args.rho, args.samples, MediumConfig(n_i=args.ni), spec, jobs=args.jobs)
    data = serialize.csv_bytes(["z", "amp"], zip(sw.z.tolist(), sw.amp.tolist()))
    derived = {"modes": sw.modes, "flagged": int(np.count_nonzero(sw.flagged)),
               "amp_at_zero": sw.value_at(0.0), "median_amp": float(np.median(sw.amp))}
    if args.out:
        _emit(args, [(args.out, data)], derived, t0)
    else:
        _stdout(data)
    return EXIT_OK


def poles_document(ps) -> dict:
    def cert(c):
        return {"m": c.m, "winding": c.winding, "radius": c.radius, "min_ratio": c.min_ratio,
                "nudged": c.nudged}

    return {
        "k": ps.k, "rho": ps.rho, "n_i": ps.n_i, "mode_cutoff": ps.mode_cutoff,
        "poles": [{"re": p.z.real, "im": p.z.imag, "m": p.m, "multiplicity": p.multiplicity,
                   "residual": p.residual} for p in ps.poles],
        "total_count": ps.total_count,
        "total_with_multiplicity": ps.total_with_multiplicity,
        "certificates": [cert(c) for c in ps.certificates],
        "tail_certificates": [cert(c) for c in ps.tail_certificates],
        "failures": [str(f) for f in ps.failures],
    }


def cmd_poles(args):
    t0 = time.perf_counter()
    ps = find_z_poles(args.k, args.rho, MediumConfig(n_i=args.ni), jobs=args.jobs)
    doc = poles_document(ps)
    serialize.validate(doc, "poles")
    data = serialize.json_text(doc).encode("utf-8")
    if args.out:
        _emit(args, [(args.out, data)], {"failures": len(ps.failures)}, t0)
    else:
        _stdout(data)
    if ps.failures:
        raise NumericFailure(f"{len(ps.failures)} mode(s) not fully located")
    return EXIT_OK


def default_fixtures():
    """The fixed configurations run by ``verify``; ``(suite, fixture, thunk)``."""
    out = []
    out.append(("wronskian", {"m_max": 200, "lattice": "default"}, _wronskian_report))
    for dom, n_const in (("disk", 100.0), ("annulus", 1.0)):
        fx = {"k": K_QR1, "n_i": 100.0, "z": 0.0, "alpha": 0.5, "beta": 2.0, "domain": dom,
              "R": 2.0, "n_r": 64, "n_theta": 256}
        out.append(("morawetz", fx, lambda fx=fx, n_const=n_const: morawetz_residual(
            fx["k"], MediumConfig(n_i=fx["n_i"]),
            MorawetzParams(fx["alpha"], fx["beta"], 1.0 / fx["k"], n_const, fx["domain"], fx["R"],
                           fx["n_r"], fx["n_theta"]))))
    for R in (1.5, 2.0, 4.0):
        fx = {"k": K_QR2, "n_i": 100.0, "z": 0.0, "R": R}
        out.append(("radiation", fx, lambda fx=fx: radiation_boundary_functional(
            fx["k"], MediumConfig(n_i=fx["n_i"]), fx["R"])))
    fx = {"m_max": 100, "x_min": 0.5, "x_max": 50.0, "x_count": 40}
    out.append(("dtn", fx, lambda: dtn_positivity(range(101), np.geomspace(0.5, 50.0, 40))))
    for z in (0.01j, 0.0):
        fx = {"k": 1.0, "n_i": 100.0, "z": str(complex(z)), "R": 2.0}
        out.append(("flux", fx, lambda z=z: flux_balance(1.0, MediumConfig(n_i=100.0, z=z), R=2.0)))
    return out


def _wronskian_report():
    r = special.wronskian_residuals(special.wronskian_lattice(), 200)
    return QuadReport(float(np.nanmax(r)), 0.0, 1e-10, 1.0, "wronskian")


def cmd_verify(args):
    t0 = time.perf_counter()
    chosen = SUITES if args.suite == "all" else (args.suite,)
    suites = {s: [] for s in chosen}
    for suite, fx, thunk in default_fixtures():
        if suite not in suites:
            continue
        rep = thunk()
        if args.tolerance is not None:
            rep = dataclasses.replace(rep, tolerance=args.tolerance)
        d = rep.as_dict()
        d["fixture"] = fx
        suites[suite].append(d)
        if not args.json:
            print(f"{d['verdict']} {d['name']} relative={d['relative']:.3e} "
                  f"tolerance={d['tolerance']:.1e}", file=sys.stderr)
    passed = all(d["verdict"] == "PASS" for v in suites.values() for d in v)
    doc = {"passed": passed, "suites": suites}
    serialize.validate(doc, "verify")
    data = serialize.json_text(doc).encode("utf-8")
    if args.out:
        _emit(args, [(args.out, data)], {"passed": passed}, t0)
    if args.json:
        _stdout(data)
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_bound(args):
    t0 = time.perf_counter()
    plan = exponent_plan(args.d, args.N, args.eps, args.eps_prime, args.case)
    doc = plan.as_dict()
    serialize.validate(doc, "bound")
    data = serialize.json_text(doc).encode("utf-8")
    if args.out:
        _emit(args, [(args.out, data)], {}, t0)
    else:
        _stdout(data)
    return EXIT_OK


# ---------------------------------------------------------------- parser ---

class UsageError(ValueError):
    pass


def _positive(s):
    v = float(s)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"{s!r} is not a positive number")
    return v


def _complex(s):
    try:
        return complex(s.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{s!r} is not a complex number") from None


def build_parser():
    p = argparse.ArgumentParser(prog="quasires",
                                description="Quasi-resonances of a penetrable unit disk.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=1, help="worker threads (output is identical)")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("resonances", parents=[common], help="near-real resonances in k")
    s.add_argument("--ni", type=_positive, required=True, help="interior index n_i")
    s.add_argument("--kmin", type=_positive, required=True)
    s.add_argument("--kmax", type=_positive, required=True)
    s.add_argument("--mmax", type=int, default=None,
                   help="highest mode (default ceil(sqrt(ni) kmax) + 10)")
    s.add_argument("--step", type=_positive, default=1e-3, help="scan spacing in k")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.set_defaults(func=cmd_resonances)

    s = sub.add_parser("field", parents=[common], help="field magnitude heatmap",
                       epilog="Angles are in radians; the default pi/6 = 0.5235987755982988 is "
                              "a 30 degree incidence.")
    s.add_argument("--ni", type=_positive, required=True)
    s.add_argument("--z", type=_complex, default=0j, help="index perturbation (complex allowed)")
    s.add_argument("--k", type=_positive, required=True)
    s.add_argument("--angle", type=float, default=INC_ANGLE,
                   help="incidence angle in radians (default pi/6)")
    s.add_argument("--extent", type=_positive, default=3.0, help="half-width of the square")
    s.add_argument("--res", type=int, default=256, help="pixels per side (<= 4096)")
    s.add_argument("--kind", choices=FIELD_KINDS, default="total")
    s.add_argument("--out-pgm")
    s.add_argument("--out-csv")
    s.set_defaults(func=cmd_field)

    s = sub.add_parser("sweep-z", parents=[common], help="amplification over real z")
    s.add_argument("--ni", type=_positive, required=True)
    s.add_argument("--k", type=_positive, required=True)
    s.add_argument("--rho", type=_positive, required=True)
    s.add_argument("--samples", type=int, default=2001, help="odd, >= 101")
    s.add_argument("--probe-radius", type=float, default=1.0)
    s.add_argument("--nodes", type=int, default=64)
    s.add_argument("--out", help="CSV path (default stdout)")
    s.set_defaults(func=cmd_sweep_z)

    s = sub.add_parser("poles", parents=[common], help="poles in |z| < rho with certificates")
    s.add_argument("--ni", type=_positive, required=True)
    s.add_argument("--k", type=_positive, required=True)
    s.add_argument("--rho", type=_positive, required=True)
    s.add_argument("--out", help="JSON path (default stdout)")
    s.set_defaults(func=cmd_poles)

    s = sub.add_parser("verify", parents=[common], help="identity checks on fixed fixtures")
    s.add_argument("--suite", choices=SUITES + ("all",), default="all")
    s.add_argument("--tolerance", type=float, default=None,
                   help="override every check's tolerance")
    s.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    s.add_argument("--out", help="also write the JSON report here")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("bound", parents=[common], help="exponent plan")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--N", type=float, default=0.0)
    s.add_argument("--eps", type=_positive, default=0.1)
    s.add_argument("--eps-prime", type=_positive, default=0.1)
    s.add_argument("--case", choices=("smooth", "penetrable"), default="penetrable")
    s.add_argument("--out", help="JSON path (default stdout)")
    s.set_defaults(func=cmd_bound)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on bad flags
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    if getattr(args, "tolerance", None) is not None and args.tolerance < 0:
        parser.error("--tolerance must be >= 0")
    try:
        return args.func(args)
    except NumericFailure as e:
        print(f"quasires: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except NUMERIC_ERRORS as e:
        print(f"quasires: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError) as e:
        print(f"quasires: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
