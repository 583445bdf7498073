"""Curve-spec files, deterministic report serialization and CSV dumps.

All numbers are emitted with 17 significant digits so double-precision
values round-trip exactly and identical inputs produce byte-identical
reports; dictionary keys are sorted for the same reason.
"""

import hashlib
import math

import numpy as np

from . import __version__
from .curves import build_from_curvature, build_from_parametric, ellipse_spec, fig2_spec
from .diameters import is_resonant, resonance_distance
from .trigpoly import TrigPoly

TWO_PI = 2.0 * math.pi


def format_float(x):
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        raise ValueError("non-finite number in report")
    return "%.17g" % x


def dumps(obj, indent=0):
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for key in sorted(obj):
            items.append(f'{inner}"{key}": {dumps(obj[key], indent + 1)}')
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{dumps(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot serialize {type(obj)!r}")


def fingerprint(spec):
    return hashlib.sha256(dumps(spec).encode()).hexdigest()


def curve_from_spec(spec):
    """Build a ConvexCurve from a parsed spec dictionary."""
    kind = spec.get("type")
    if kind == "curvature":
        coeffs = spec["coeffs"]
        poly = TrigPoly(coeffs.get("a0", 0.0), coeffs.get("ak", ()), coeffs.get("bk", ()))
        basepoint = spec.get("basepoint", (0.0, 0.0))
        return build_from_curvature(poly, basepoint)
    if kind == "parametric":
        builtin = spec["builtin"]
        params = spec.get("params", {})
        if builtin == "ellipse":
            pspec = ellipse_spec(float(params["a"]), float(params["b"]))
        elif builtin == "fig2":
            pspec = fig2_spec()
        else:
            raise ValueError(f"unknown builtin curve {builtin!r}")
        return build_from_parametric(pspec)
    raise ValueError(f"unknown spec type {kind!r}")


def field_coeffs(field):
    poly = field.poly
    return {
        "a0": float(poly.a0),
        "ak": [float(v) for v in poly.ak],
        "bk": [float(v) for v in poly.bk],
    }


def diameter_record(d, resonance_tol=1e-6):
    rec = {
        "phi0": d.phi0,
        "L0": d.L0,
        "R0": d.R0,
        "Rpi": d.Rpi,
        "lpp": d.lpp,
        "class": d.stability.kind,
    }
    if d.gamma is not None:
        flag, j = is_resonant(d.gamma, resonance_tol)
        rec["gamma"] = d.gamma
        rec["resonant"] = flag
        rec["resonance_distance"] = resonance_distance(d.gamma)
        if flag:
            rec["j"] = j
    return rec


def diameters_report(spec, diams, tolerances, continuum=False):
    return {
        "fingerprint": fingerprint(spec),
        "version": __version__,
        "tolerances": tolerances,
        "continuum": continuum,
        "diameters": [diameter_record(d, tolerances.get("resonance_tol", 1e-6))
                      for d in diams],
    }


ORBIT_HEADER = "step,phi,theta,s,p,x,y"
PORTRAIT_HEADER = "orbit_id,step,phi,theta,s,p,x,y"


def orbit_csv_lines(orbit):
    lines = [ORBIT_HEADER]
    for k in range(len(orbit.phi)):
        lines.append(",".join([
            str(k),
            format_float(orbit.phi[k] % TWO_PI),
            format_float(orbit.theta[k]),
            format_float(orbit.s[k]),
            format_float(orbit.p[k]),
            format_float(orbit.points[k, 0]),
            format_float(orbit.points[k, 1]),
        ]))
    return lines


def portrait_csv_lines(curve, phi, theta):
    """Rows for a batch portrait; phi/theta have shape (steps+1, n_orbits)."""
    lines = [PORTRAIT_HEADER]
    nsteps, norb = phi.shape
    phi_mod = phi % TWO_PI
    s = curve.arclength(phi_mod)
    p = np.sin(theta)
    pts = curve.position(phi_mod)
    for orbit_id in range(norb):
        for step in range(nsteps):
            lines.append(",".join([
                str(orbit_id),
                str(step),
                format_float(phi_mod[step, orbit_id]),
                format_float(theta[step, orbit_id]),
                format_float(s[step, orbit_id]),
                format_float(p[step, orbit_id]),
                format_float(pts[step, orbit_id, 0]),
                format_float(pts[step, orbit_id, 1]),
            ]))
    return lines
