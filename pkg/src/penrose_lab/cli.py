"""Command-line front end: ``penrose-lab <command> [options]``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from . import asymptotics, mass, perturbation, reflection, reilly
from .geometry import Ellipticity, ellipticity_classify, shape_data
from .graphs import DomainError
from .quadrature import THREADS_ENV
from .report import Check, Report, check_above, check_below, check_close, check_true, emit_report
from .schwarzschild import SchwarzschildGraph, SchwarzschildProfile, horizon_radius, profile_jet

COMMANDS = ("schwarzschild", "mass", "verify-reilly", "reflect-check", "fit-asymptotics", "penrose", "perturb", "suite")

DEFAULTS: Dict[str, Any] = {
    "n": 3,
    "mass": 0.5,
    "r": None,
    "radii": None,
    "quad_order": None,
    "tol": None,
    "h": 1e-3,
    "amplitudes": [0.0, 0.005, 0.01, 0.02],
    "bump_radius": 1.0,
    "bump_distance": 3.0,
    "axis_ratio": 1.5,
    "format": "json",
    "output": None,
    "timing": False,
    "threads": None,
}

TOLERANCES = {
    "schwarzschild": 1e-10,
    "mass": 5e-3,
    "verify-reilly": 1e-3,
    "reflect-check": 1e-6,
    "fit-asymptotics": 1e-3,
    "penrose": 1e-6,
    "perturb": 1e-2,
}


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


CONVERTERS = {
    "n": int,
    "mass": float,
    "r": float,
    "radii": _floats,
    "quad_order": int,
    "tol": float,
    "h": float,
    "amplitudes": _floats,
    "bump_radius": float,
    "bump_distance": float,
    "axis_ratio": float,
    "format": str,
    "output": str,
    "timing": _bool,
    "threads": int,
}


class UsageError(Exception):
    pass


@dataclass
class Invocation:
    command: str
    params: Dict[str, Any] = field(default_factory=dict)


def _common(p):
    p.add_argument("--n", type=int, default=None, help="dimension of the graph domain (default 3)")
    p.add_argument("--mass", type=float, default=None, help="Schwarzschild mass parameter (default 0.5)")
    p.add_argument("--quad-order", dest="quad_order", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--output", "-o", default=None, help="output path (default stdout)")
    p.add_argument("--config", default=None, help="flat key=value file; flags override it")
    p.add_argument("--timing", action="store_const", const=True, default=None)
    p.add_argument("--threads", type=int, default=None, help=f"worker count (or env {THREADS_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="penrose-lab", description="Numerical checks for Schwarzschild graphs.")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        _common(p)
        if name == "schwarzschild":
            p.add_argument("--r", type=float, default=None, help="evaluation radius (default 2 r_m)")
        if name in ("mass", "suite"):
            p.add_argument("--radii", type=_floats, default=None, help="comma-separated flux radii")
        if name in ("reflect-check", "suite"):
            p.add_argument("--h", type=float, default=None, help="chart grid step")
        if name in ("penrose", "suite"):
            p.add_argument("--axis-ratio", dest="axis_ratio", type=float, default=None)
        if name in ("perturb", "suite"):
            p.add_argument("--amplitudes", type=_floats, default=None)
            p.add_argument("--bump-radius", dest="bump_radius", type=float, default=None)
            p.add_argument("--bump-distance", dest="bump_distance", type=float, default=None,
                           help="bump center distance in units of r_m")
    return parser


def read_config(path: str) -> Dict[str, Any]:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in CONVERTERS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = CONVERTERS[key](val)
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: bad value for {key}") from exc
    return out


def parse_invocation(argv: List[str]) -> Invocation:
    """Validate arguments; argparse exits with status 2 on usage errors."""
    if not argv:
        return Invocation("suite", dict(DEFAULTS))
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.error("a command is required")
    params = dict(DEFAULTS)
    given = {k: v for k, v in vars(ns).items() if v is not None and k not in ("command", "config")}
    if ns.config:
        try:
            params.update(read_config(ns.config))
        except OSError as exc:
            parser.error(f"cannot read config: {exc}")
        except UsageError as exc:
            parser.error(str(exc))
    params.update(given)
    if params["n"] < 3:
        parser.error("--n must be at least 3")
    if not params["mass"] > 0:
        parser.error("--mass must be positive")
    if params["quad_order"] is not None and params["quad_order"] < 4:
        parser.error("--quad-order must be at least 4")
    return Invocation(ns.command, params)


# ------------------------------------------------------------- commands


def _run_schwarzschild(P, tol):
    n, m = P["n"], P["mass"]
    prof = SchwarzschildProfile(n, m)
    r = P["r"] if P["r"] is not None else 2.0 * prof.r_m
    pj = profile_jet(prof, r)
    g = SchwarzschildGraph(n, m)
    x = np.zeros(n)
    x[0] = r
    sd = shape_data(g.jet(x))
    ell = ellipticity_classify(sd)
    rot2 = pj.du**2 * (r ** (n - 2) - 2 * m) - 2 * m
    results = {
        "r_m": prof.r_m, "r": r, "u": pj.u, "du": pj.du, "d2u": pj.d2u,
        "principal_curvatures": sd.eigenvalues.tolist(),
        "S": sd.sym_funcs[1:].tolist(),
        "newton_eigenvalues": ell.newton_eigenvalues.tolist(),
        "ellipticity": ell.classification.value,
    }
    checks = [
        check_below("rot2_residual", abs(rot2), 1e-12),
        check_below("scalar_flat_S2", abs(sd.S(2)), tol),
        check_true("elliptic_positive", ell.classification is Ellipticity.POSITIVE, ell.classification.value),
    ]
    return results, checks


def _run_mass(P, tol):
    n, m = P["n"], P["mass"]
    g = SchwarzschildGraph(n, m)
    r_m = g.horizon_radius
    radii = P["radii"]
    rep = mass.mass_formula_terms(g, mass.HorizonShape.round_sphere(r_m), quad_order=P["quad_order"], radii=radii)
    results = rep.to_dict()
    checks = [check_close("adm_vs_m", m, rep.adm, tol, relative=True)]
    for r, v in rep.flux_by_radius:
        checks.append(check_close(f"flux_law_r={r:g}", m / (1 - 2 * m * r ** (2 - n)), v, 1e-3, relative=True))
    checks.append(check_below("bulk_abs", abs(rep.bulk), 1e-8))
    checks.append(check_below("massform_relative_residual", abs(rep.residual_massform) / rep.adm, 1e-2))
    return results, checks


def _run_reilly(P, tol):
    n, m = P["n"], P["mass"]
    g = SchwarzschildGraph(n, m)
    r_m = g.horizon_radius
    fluxes = []
    checks = []
    for f in (1.5, 2.0, 5.0, 10.0):
        rec = reilly.normalized_boundary_flux(g, f * r_m, P["quad_order"])
        fluxes.append([rec.r, rec.normalized_flux])
        checks.append(check_close(f"flux_r={f:g}r_m", m, rec.normalized_flux, tol, relative=True))
    hf = reilly.horizon_flux(r_m, n)
    checks.append(check_close("horizon_flux", mass.penrose_rhs(mass.sphere_area(n) * r_m ** (n - 1), n), hf, 1e-12, relative=True))
    x = np.full(n, 2.0 * r_m / math.sqrt(n))
    res, order = reilly.residual_order(g, x, 0.05 * np.linalg.norm(x))
    checks.append(check_above("divergence_order", order, 1.9))
    results = {"fluxes": fluxes, "horizon_flux": hf, "divergence_residuals": res, "divergence_order": order}
    return results, checks


def _run_reflect(P, tol):
    n, m, h = P["n"], P["mass"], P["h"]
    prof = SchwarzschildProfile(n, m)
    r_m = prof.r_m
    chart = reflection.build_doubled_chart(prof, 6.0 * h, h)
    match = reflection.second_derivative_matching(chart)
    terms = reflection.decomposition_terms(chart)
    conv = reflection.matching_convergence(prof)
    results = {
        "D": terms.D, "E": terms.E, "F": terms.F, "u_nn": terms.u_nn, "residual": terms.residual,
        "sum_alpha": terms.sum_alpha, "u_nn_upper": match.upper, "u_nn_lower": match.lower,
        "jump": match.jump, "mixed_jumps": match.mixed_jumps.tolist(),
        "convergence": conv,
    }
    checks = [
        check_below("jump", match.jump, tol),
        check_below("mixed_jumps", float(np.max(match.mixed_jumps)), tol),
        check_close("u_nn_upper", (n - 2) / (2 * r_m), match.upper, max(1e-6, 10.0 * h * h), relative=True),
        check_above("matching_order", conv["order"], 1.9),
        check_below("identity_residual", abs(terms.residual), 1e-8),
        check_close("D", -(n - 1) / r_m, terms.D, 1e-12),
        check_close("E", (n - 1) * (n - 2) / (2 * r_m**2), terms.E, 1e-12),
        check_close("F", 0.0, terms.F, 1e-12),
        check_true("sum_alpha_nonzero", not terms.hazard, terms.sum_alpha),
    ]
    return results, checks


def _run_fit(P, tol):
    n, m = P["n"], P["mass"]
    prof = SchwarzschildProfile(n, m)
    fit = asymptotics.fit_expansion(*asymptotics.profile_tail_samples(prof), n)
    mhat = asymptotics.mass_from_tail(fit)
    results = {"fit": fit.to_dict(), "mass_from_tail": mhat}
    checks = [
        check_close("leading_coefficient", asymptotics.expected_leading_coefficient(n, m), fit.a, tol, relative=True),
        check_close("mass_from_tail", m, mhat, 5e-3, relative=True),
    ]
    return results, checks


def _run_penrose(P, tol):
    n, m = P["n"], P["mass"]
    g = SchwarzschildGraph(n, m)
    r_m = g.horizon_radius
    pc = mass.penrose_check(g, mass.HorizonShape.round_sphere(r_m), quad_order=P["quad_order"])
    lhs, rhs = mass.aleksandrov_fenchel(mass.HorizonShape.sphere_of_revolution(r_m), n)
    e_lhs, e_rhs = mass.aleksandrov_fenchel(mass.HorizonShape.spheroid(1.0, P["axis_ratio"]), n)
    results = {"penrose": pc.to_dict(), "af_round": [lhs, rhs], "af_spheroid": [e_lhs, e_rhs]}
    checks = [
        check_close("slack", 0.0, pc.slack, tol),
        check_close("af_round_equality", rhs, lhs, 1e-6, relative=True),
        check_close("af_equals_mass", m, pc.af_lhs, 1e-12, relative=True),
    ]
    if P["axis_ratio"] != 1.0:
        checks.append(check_above("af_spheroid_gap", e_lhs - e_rhs, 0.0))
    return results, checks


def _run_perturb(P, tol):
    n, m = P["n"], P["mass"]
    base = SchwarzschildGraph(n, m)
    r_m = base.horizon_radius
    center = np.zeros(n)
    center[0] = P["bump_distance"] * r_m
    rad = P["bump_radius"] * r_m
    amps = sorted(set(P["amplitudes"]) | {0.0})
    rows = perturbation.penrose_slack_sweep(base, center, rad, amps)
    thr = perturbation.ellipticity_threshold(base, center, rad, hi=0.1 * r_m)
    small = [a for a in amps if 0 < a < thr]
    persist = [
        perturbation.ellipticity_persistence(perturbation.bump_perturb(base, perturbation.BumpSpec(tuple(center), rad, a)))
        for a in small
    ]
    results = {
        "columns": perturbation.SWEEP_COLUMNS,
        "rows": [r.as_list() for r in rows],
        "ellipticity_threshold": thr,
        "persistence": [[a, p.min_abs_s3, p.worst.value] for a, p in zip(small, persist)],
    }
    checks = [check_close("slack_at_zero", 0.0, rows[0].slack, 1e-6)]
    for row in rows:
        checks.append(check_close(f"mass_crosscheck_a={row.amplitude:g}", row.adm, row.adm_massform, tol, relative=True))
        if row.min_rg >= 0:
            checks.append(check_above(f"slack_nonneg_a={row.amplitude:g}", row.slack, -1e-6))
        checks.append(check_below(f"slack_continuity_a={row.amplitude:g}", abs(row.slack - rows[0].slack), 1e-6 + row.amplitude))
    for a, p in zip(small, persist):
        checks.append(check_true(f"elliptic_a={a:g}", p.worst is not Ellipticity.DEGENERATE, p.worst.value))
    return results, checks


RUNNERS = {
    "schwarzschild": _run_schwarzschild,
    "mass": _run_mass,
    "verify-reilly": _run_reilly,
    "reflect-check": _run_reflect,
    "fit-asymptotics": _run_fit,
    "penrose": _run_penrose,
    "perturb": _run_perturb,
}

CAPTURED = (DomainError, ValueError, RuntimeError, ArithmeticError)


def _run_one(command, P, timing):
    tol = P["tol"] if P["tol"] is not None and command != "suite" else TOLERANCES[command]
    t0 = time.perf_counter()
    try:
        results, checks = RUNNERS[command](P, tol)
    except CAPTURED as exc:
        results, checks = {"error": f"{type(exc).__name__}: {exc}"}, [Check("error", None, str(exc), None, False)]
    timing[command] = time.perf_counter() - t0
    return results, checks


def run(inv: Invocation) -> Report:
    P = inv.params
    if P.get("threads"):
        os.environ[THREADS_ENV] = str(P["threads"])
    inputs = {k: P[k] for k in ("n", "mass", "quad_order", "tol")}
    report = Report(inv.command, inputs)
    if inv.command == "suite":
        for cmd in RUNNERS:
            results, checks = _run_one(cmd, P, report.timing)
            report.results[cmd] = results
            for c in checks:
                c.name = f"{cmd}:{c.name}"
            report.checks.extend(checks)
    else:
        report.results, report.checks = _run_one(inv.command, P, report.timing)
    return report


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        inv = parse_invocation(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    report = run(inv)
    try:
        emit_report(report, inv.params["format"], inv.params["output"], bool(inv.params["timing"]))
    except OSError as exc:
        print(f"penrose-lab: cannot write report: {exc}", file=sys.stderr)
        return 3
    if not inv.params["timing"]:
        total = sum(report.timing.values())
        print(f"penrose-lab: {inv.command} {'passed' if report.passed else 'FAILED'} in {total:.2f}s", file=sys.stderr)
    return 0 if report.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
