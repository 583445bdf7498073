"""Command line front end.

Exit codes: 0 ok, 1 usage, 2 invalid curve, 3 IO/parse failure,
4 analysis refusal (resonant / not elliptic), 5 numeric failure.

All reports are deterministic: multi-start seeds derive from --seed
(default from BILLIARDS_SEED, else 0) and numbers are printed with 17
significant digits.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from . import diameters as diameters_mod
from . import dynamics, normalform, perturbations, reportio
from .errors import (BilliardError, ContinuumFlag, Degenerate, Inadmissible,
                     MarginUnreachable, NonConvex, NotClosed, NotDiffeo,
                     NotElliptic, NotFound, NotResonant, ResamplingFailure,
                     Resonant, SeriesSolveFailure, SolveFailure)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID_CURVE = 2
EXIT_IO = 3
EXIT_REFUSED = 4
EXIT_NUMERIC = 5

_INVALID_CURVE = (NonConvex, NotClosed, ResamplingFailure, Inadmissible, NotDiffeo)
_REFUSED = (NotElliptic, Resonant, NotResonant)
_NUMERIC = (SolveFailure, NotFound, SeriesSolveFailure, MarginUnreachable, Degenerate)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _load_spec(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(EXIT_IO, f"cannot read spec: {exc}")


def _fail(code, message):
    print(reportio.dumps({"error": message}))
    sys.exit(code)


def _curve(spec):
    try:
        return reportio.curve_from_spec(spec)
    except _INVALID_CURVE as exc:
        _fail(EXIT_INVALID_CURVE, f"invalid curve: {exc}")
    except (KeyError, ValueError, TypeError) as exc:
        _fail(EXIT_IO, f"malformed spec: {exc}")


def cmd_validate(args):
    spec = _load_spec(args.spec)
    try:
        curve = reportio.curve_from_spec(spec)
    except _INVALID_CURVE as exc:
        print(reportio.dumps({
            "valid": False,
            "reason": f"{type(exc).__name__}: {exc}",
            "fingerprint": reportio.fingerprint(spec),
        }))
        return EXIT_INVALID_CURVE
    except (KeyError, ValueError, TypeError) as exc:
        _fail(EXIT_IO, f"malformed spec: {exc}")
    lo, _ = curve.min_radius()
    print(reportio.dumps({
        "valid": True,
        "fingerprint": reportio.fingerprint(spec),
        "closure_residual": curve.closure_residual(),
        "convexity_margin": lo,
        "total_arclength": curve.total_arclength,
        "profile_degree": curve.profile.degree,
    }))
    return EXIT_OK


def cmd_diameters(args):
    spec = _load_spec(args.spec)
    curve = _curve(spec)
    tolerances = {
        "classification_tol": args.tol,
        "resonance_tol": args.resonance_tol,
        "scan_grid": args.grid,
    }
    try:
        diams = diameters_mod.find_diameters(curve, grid=args.grid, tol=args.tol)
        report = reportio.diameters_report(spec, diams, tolerances)
    except ContinuumFlag:
        report = reportio.diameters_report(spec, [], tolerances, continuum=True)
    print(reportio.dumps(report))
    return EXIT_OK


def cmd_tau1(args):
    spec = _load_spec(args.spec)
    curve = _curve(spec)
    try:
        diams = diameters_mod.find_diameters(curve)
    except ContinuumFlag:
        _fail(EXIT_REFUSED, "circle-like curve has no isolated diameters")
    if not 0 <= args.diameter_index < len(diams):
        _fail(EXIT_USAGE, f"diameter index out of range (found {len(diams)})")
    diam = diams[args.diameter_index]
    try:
        result, coeffs, _ = normalform.twist_pipeline(
            curve, diam, fd_steps=tuple(args.fd_steps), seed=args.seed)
    except _REFUSED as exc:
        _fail(EXIT_REFUSED, f"{type(exc).__name__}: {exc}")
    except _NUMERIC as exc:
        _fail(EXIT_NUMERIC, f"{type(exc).__name__}: {exc}")
    print(reportio.dumps({
        "fingerprint": reportio.fingerprint(spec),
        "diameter_index": args.diameter_index,
        "phi0": diam.phi0,
        "gamma": result.gamma,
        "c20": [coeffs.c20.real, coeffs.c20.imag],
        "c21": [coeffs.c21.real, coeffs.c21.imag],
        "tau1": result.tau1,
        "residuals": {
            "oracle": result.oracle_residual,
            "phase_invariance": result.phase_residual,
            "imag": result.imag_residual,
            "reconstruction": coeffs.recon_residual,
        },
    }))
    return EXIT_OK


def cmd_portrait(args):
    spec = _load_spec(args.spec)
    curve = _curve(spec)
    try:
        cols, rows = (int(v) for v in args.grid.lower().split("x"))
    except ValueError:
        _fail(EXIT_USAGE, "grid must look like 20x20")
    if cols < 1 or rows < 1 or args.iters < 0:
        _fail(EXIT_USAGE, "grid and iteration counts must be positive")
    pmax = args.pmax
    phis = TWO_PI * (np.arange(cols) + 0.5) / cols
    ps = -pmax + 2.0 * pmax * (np.arange(rows) + 0.5) / rows
    phi0, p0 = np.meshgrid(phis, ps, indexing="ij")
    theta0 = np.arcsin(p0.ravel())
    try:
        phi, theta = dynamics.iterate_batch(curve, phi0.ravel(), theta0, args.iters)
    except _NUMERIC as exc:
        _fail(EXIT_NUMERIC, f"{type(exc).__name__}: {exc}")
    lines = reportio.portrait_csv_lines(curve, phi, theta)
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if args.plot:
        from . import plotting
        plotting.save_portrait(phi, theta, args.plot)
    print(reportio.dumps({
        "fingerprint": reportio.fingerprint(spec),
        "orbits": cols * rows,
        "steps": args.iters,
        "rows": len(lines) - 1,
        "out": args.out,
        "plot": args.plot,
    }))
    return EXIT_OK


def cmd_periodic(args):
    spec = _load_spec(args.spec)
    curve = _curve(spec)
    if args.period < 2:
        _fail(EXIT_USAGE, "period must be at least 2 (no fixed points)")
    if not (1 <= args.winding < args.period) or math.gcd(args.period, args.winding) != 1:
        _fail(EXIT_USAGE, "winding must be coprime with period and in [1, period)")
    try:
        orbit = dynamics.find_periodic_orbit(curve, args.period, args.winding,
                                             starts=args.starts, seed=args.seed)
    except _NUMERIC as exc:
        _fail(EXIT_NUMERIC, f"{type(exc).__name__}: {exc}")
    states = []
    for k in range(args.period):
        states.append({
            "phi": float(orbit.phis[k]),
            "theta": float(orbit.thetas[k]),
            "s": float(orbit.s[k]),
            "p": float(orbit.p[k]),
            "x": float(orbit.points[k, 0]),
            "y": float(orbit.points[k, 1]),
        })
    if args.plot:
        from . import plotting
        plotting.save_curve_with_orbit(curve, orbit.points, args.plot)
    print(reportio.dumps({
        "fingerprint": reportio.fingerprint(spec),
        "period": orbit.period,
        "winding": orbit.winding,
        "trace": orbit.trace,
        "class": orbit.stability,
        "residual": orbit.residual,
        "states": states,
        "plot": args.plot,
    }))
    return EXIT_OK


def cmd_perturb(args):
    spec = _load_spec(args.spec)
    curve = _curve(spec)
    if args.mode == "break-resonance":
        if args.margin < 0:
            _fail(EXIT_USAGE, "margin must be >= 0")
        try:
            diams = diameters_mod.find_diameters(curve)
        except ContinuumFlag:
            _fail(EXIT_REFUSED, "circle-like curve has no isolated diameters")
        elliptic = [d for d in diams if d.stability.kind == "elliptic"]
        if not elliptic:
            _fail(EXIT_REFUSED, "curve has no elliptic diameter")
        diam = elliptic[args.diameter_index] if args.diameter_index < len(elliptic) else None
        if diam is None:
            _fail(EXIT_USAGE, "diameter index out of range")
        try:
            field = perturbations.break_resonance(curve, diam, args.margin)
            perturbed = perturbations.apply(curve, field)
            after = perturbations._nearest_diameter(
                diameters_mod.find_diameters(perturbed.curve), diam.phi0)
        except _REFUSED as exc:
            _fail(EXIT_REFUSED, f"{type(exc).__name__}: {exc}")
        except (_NUMERIC + _INVALID_CURVE) as exc:
            _fail(EXIT_NUMERIC, f"{type(exc).__name__}: {exc}")
        print(reportio.dumps({
            "fingerprint": reportio.fingerprint(spec),
            "mode": "break-resonance",
            "margin": args.margin,
            "field": {"coeffs": reportio.field_coeffs(field)},
            "certificate": {
                "c2_norm": field.c2_norm(),
                "before": reportio.diameter_record(diam),
                "after": reportio.diameter_record(after),
            },
        }))
        return EXIT_OK

    # twist mode
    try:
        cert = perturbations.ensure_twist(curve, margin=args.margin)
    except _REFUSED as exc:
        _fail(EXIT_REFUSED, f"{type(exc).__name__}: {exc}")
    except (_NUMERIC + _INVALID_CURVE) as exc:
        _fail(EXIT_NUMERIC, f"{type(exc).__name__}: {exc}")
    print(reportio.dumps({
        "fingerprint": reportio.fingerprint(spec),
        "mode": "twist",
        "case": cert.case,
        "stages": [{"kind": kind, "coeffs": reportio.field_coeffs(f)}
                   for kind, f in cert.stages],
        "certificate": {
            "diameter": reportio.diameter_record(cert.diameter),
            "gamma": cert.gamma,
            "resonance_distance": cert.resonance_dist,
            "tau1": cert.tau1,
            "tau1_tol": cert.tau1_tol,
        },
    }))
    return EXIT_OK


TWO_PI = 2.0 * math.pi


def build_parser():
    parser = _Parser(prog="billiards",
                     description="Convex-billiard diameters, stability and twist toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    default_seed = int(os.environ.get("BILLIARDS_SEED", "0"))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a curve spec file")
    p.add_argument("spec")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("diameters", help="locate and classify all diameters")
    p.add_argument("spec")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--resonance-tol", type=float, default=1e-6)
    p.add_argument("--grid", type=int, default=512)
    p.set_defaults(func=cmd_diameters)

    p = sub.add_parser("tau1", help="twist coefficient of an elliptic diameter")
    p.add_argument("spec")
    p.add_argument("--diameter-index", type=int, default=0)
    p.add_argument("--fd-steps", type=float, nargs=2, default=[4e-3, 2e-3])
    p.add_argument("--seed", type=int, default=default_seed)
    p.set_defaults(func=cmd_tau1)

    p = sub.add_parser("portrait", help="phase portrait CSV (and optional figure)")
    p.add_argument("spec")
    p.add_argument("--grid", default="20x20")
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", default=None)
    p.add_argument("--pmax", type=float, default=0.95)
    p.set_defaults(func=cmd_portrait)

    p = sub.add_parser("periodic", help="find a periodic orbit and classify it")
    p.add_argument("spec")
    p.add_argument("--period", type=int, required=True)
    p.add_argument("--winding", type=int, default=1)
    p.add_argument("--starts", type=int, default=32)
    p.add_argument("--seed", type=int, default=default_seed)
    p.add_argument("--plot", default=None)
    p.set_defaults(func=cmd_periodic)

    p = sub.add_parser("perturb", help="construct certified normal perturbations")
    p.add_argument("spec")
    p.add_argument("mode", choices=["break-resonance", "twist"])
    p.add_argument("--margin", type=float, default=1e-3)
    p.add_argument("--diameter-index", type=int, default=0)
    p.set_defaults(func=cmd_perturb)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BilliardError as exc:
        _fail(EXIT_NUMERIC, f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
