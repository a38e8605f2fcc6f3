"""End-to-end acceptance criteria, one test each, with a PASS/FAIL line per criterion."""
import math
import time

import numpy as np
import pytest

from penrose_lab import asymptotics as asy
from penrose_lab import mass, reflection, reilly
from penrose_lab.geometry import batch_s2, equivalence_violations, sample_s2_zero_operators
from penrose_lab.graphs import HemisphereGraph
from penrose_lab.perturbation import BumpSpec, bump_perturb
from penrose_lab.quadrature import sphere_area
from penrose_lab.schwarzschild import SchwarzschildGraph, SchwarzschildProfile, solve_radial_scalar_flat


@pytest.fixture
def verdict(capsys):
    def report(k, ok, detail, elapsed, limit):
        ok = bool(ok) and elapsed < limit
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {detail} ({elapsed:.2f}s, limit {limit:g}s)")
        assert ok, detail

    return report


def random_directions(rng, count, n):
    d = rng.normal(size=(count, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def test_01_scalar_flatness(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = {}
    ok = True
    for n in range(3, 8):
        g = SchwarzschildGraph(n, 0.5)
        r = g.horizon_radius * rng.uniform(1.01, 100.0, size=1000)
        grad, hess, _ = g.derivatives(r[:, None] * random_directions(rng, 1000, n))
        worst[n] = float(np.max(np.abs(batch_s2(grad, hess)[1])))
        ok &= worst[n] < (1e-10 if n <= 4 else 1e-8)
    detail = "max|S_2| " + ", ".join(f"n={n}: {v:.1e}" for n, v in worst.items())
    verdict(1, ok, detail, time.perf_counter() - t0, 5)


def test_02_adm_mass(verdict):
    t0 = time.perf_counter()
    errs = {}
    for n in (3, 4, 5):
        for m in (0.5, 1.0):
            errs[(n, m)] = abs(mass.adm_mass(SchwarzschildGraph(n, m)).adm - m) / m
    g = SchwarzschildGraph(3, 0.5)
    flux_err = max(abs(mass.adm_flux_at_radius(g, r) / (0.5 / (1 - 1 / r)) - 1) for r in (10.0, 100.0))
    ok = max(errs.values()) < 5e-3 and flux_err < 1e-3
    detail = f"max rel mass error {max(errs.values()):.1e}, flux law error {flux_err:.1e}"
    verdict(2, ok, detail, time.perf_counter() - t0, 30)


def test_03_mass_formula(verdict):
    t0 = time.perf_counter()
    g = SchwarzschildGraph(3, 0.5)
    horizon = mass.HorizonShape.round_sphere(1.0)
    rep = mass.mass_formula_terms(g, horizon)
    bump = mass.mass_formula_terms(bump_perturb(g, BumpSpec((3.0, 0.0, 0.0), 1.0, 0.02)), horizon)
    r1 = abs(rep.residual_massform) / rep.adm
    r2 = abs(bump.residual_massform) / bump.adm
    ok = r1 < 1e-2 and abs(rep.bulk) < 1e-8 and r2 < 1e-2
    detail = f"Schwarzschild residual {r1:.1e} (bulk {rep.bulk:.1e}), bump residual {r2:.1e}"
    verdict(3, ok, detail, time.perf_counter() - t0, 120)


def test_04_flux_constancy(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    exact = True
    for n in (3, 4, 5):
        m = 0.5
        g = SchwarzschildGraph(n, m)
        r_m = g.horizon_radius
        for f in (1.5, 2.0, 5.0, 10.0):
            worst = max(worst, abs(reilly.normalized_boundary_flux(g, f * r_m).normalized_flux / m - 1))
        hf = reilly.horizon_flux(r_m, n)
        rhs = mass.penrose_rhs(sphere_area(n) * r_m ** (n - 1), n)
        exact &= math.isclose(hf, rhs, rel_tol=1e-15) and math.isclose(hf, 0.5 * r_m ** (n - 2), rel_tol=0)
    ok = worst < 1e-3 and exact
    verdict(4, ok, f"max rel flux error {worst:.1e}, horizon value exact: {exact}", time.perf_counter() - t0, 30)


def test_05_reilly_identity(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    schw = SchwarzschildGraph(3, 0.5)
    hemi = HemisphereGraph(3, 1.0)
    orders = []
    for _ in range(20):
        x = rng.uniform(1.5, 8.0) * random_directions(rng, 1, 3)[0]
        orders.append(reilly.residual_order(schw, x, 1e-2 * np.linalg.norm(x))[1])
        y = rng.uniform(0.1, 0.6) * random_directions(rng, 1, 3)[0]
        orders.append(reilly.residual_order(hemi, y, 2e-2)[1])
    apex = reilly.divergence(hemi, [0.0, 0.0, 0.0], h=1e-3)
    rhs = reilly.reilly_rhs(hemi, [0.0, 0.0, 0.0])
    ok = min(orders) >= 1.9 and abs(apex - 6.0) < 1e-6 and abs(rhs - 6.0) < 1e-12
    detail = f"min order {min(orders):.2f} over {len(orders)} points, apex divergence {apex:.9f}"
    verdict(5, ok, detail, time.perf_counter() - t0, 10)


def test_06_reflection(verdict):
    t0 = time.perf_counter()
    prof = SchwarzschildProfile(3, 0.5)
    chart = reflection.build_doubled_chart(prof, h=1e-3)
    match = reflection.second_derivative_matching(chart)
    conv = reflection.matching_convergence(prof)
    terms = reflection.decomposition_terms(chart)
    worst_res = 0.0
    for n in (3, 4, 5):
        c = reflection.build_doubled_chart(SchwarzschildProfile(n, 0.5), half_width=0.1, h=1e-2)
        for y in np.random.default_rng(n).uniform(-0.1, 0.1, size=(10, n)):
            worst_res = max(worst_res, abs(reflection.decomposition_from_jet(*c.jet(y)).residual))
    ok = (
        match.jump < 1e-6
        and conv["order"] >= 1.9
        and worst_res < 1e-8
        and abs(terms.D + 2) < 1e-12 and abs(terms.E - 1) < 1e-12 and abs(terms.F) < 1e-12
        and abs(terms.sum_alpha + 2) < 1e-12
    )
    detail = (
        f"jump {match.jump:.1e}, order {conv['order']}, identity residual {worst_res:.1e}, "
        f"D={terms.D:.12g} E={terms.E:.12g} F={terms.F:.3g} sum_alpha={terms.sum_alpha:.12g}"
    )
    verdict(6, ok, detail, time.perf_counter() - t0, 10)


def test_07_ellipticity(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    total, degenerate = 0, 0
    for n in range(3, 8):
        v = equivalence_violations(sample_s2_zero_operators(n, 10_000, rng), guard=1e-12)
        total += v["s3_vs_rank"] + v["rank_vs_definite"] + v["s3_vs_definite"]
        degenerate += v["degenerate"]
    detail = f"{total} violations over 5 x 10^4 samples ({degenerate} rank-one)"
    verdict(7, total == 0 and degenerate > 0, detail, time.perf_counter() - t0, 10)


def test_08_asymptotics(verdict):
    t0 = time.perf_counter()
    errs, mass_errs, spread = [], [], []
    for n in (3, 4, 6):
        ratios = []
        for m in (0.25, 0.5, 1.0):
            fit = asy.fit_expansion(*asy.profile_tail_samples(SchwarzschildProfile(n, m)), n)
            errs.append(abs(fit.a / asy.expected_leading_coefficient(n, m) - 1))
            mass_errs.append(abs(asy.mass_from_tail(fit) / m - 1))
            ratios.append(fit.a**2 / m)
        spread.append(max(ratios) / min(ratios) - 1)
    # closed forms for the leading coefficient
    ok_closed = all(
        math.isclose(asy.expected_leading_coefficient(n, m), v, rel_tol=1e-14)
        for n, m, v in [(3, 0.5, math.sqrt(4.0)), (4, 0.5, 1.0), (6, 0.5, -1.0), (3, 1.0, math.sqrt(8.0))]
    )
    ok = max(errs) < 1e-3 and max(mass_errs) < 5e-3 and max(spread) < 5e-3 and ok_closed
    detail = f"a error {max(errs):.1e}, mass error {max(mass_errs):.1e}, a^2/m spread {max(spread):.1e}"
    verdict(8, ok, detail, time.perf_counter() - t0, 10)


def test_09_penrose_af(verdict):
    t0 = time.perf_counter()
    pc = mass.penrose_check(SchwarzschildGraph(3, 0.5), mass.HorizonShape.round_sphere(1.0))
    af_err = 0.0
    for n in (3, 4, 5, 6):
        for radius in (0.5, 1.0, 2.0):
            lhs, rhs = mass.aleksandrov_fenchel(mass.HorizonShape.sphere_of_revolution(radius), n)
            af_err = max(af_err, abs(lhs / rhs - 1))
    lhs, rhs = mass.aleksandrov_fenchel(mass.HorizonShape.spheroid(1.0, 1.5), 3)
    ok = abs(pc.slack) < 1e-6 and af_err < 1e-6 and lhs - rhs > 0
    detail = f"slack {pc.slack:.1e}, round AF error {af_err:.1e}, ellipsoid gap {lhs - rhs:.3e}"
    verdict(9, ok, detail, time.perf_counter() - t0, 30)


def test_10_radial_uniqueness(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(3, 8):
        p = SchwarzschildProfile(n, 0.5)
        r0 = 1.5 * p.r_m
        t = solve_radial_scalar_flat(n, r0, float(p.u(r0)), float(p.du(r0)), (r0, 50 * p.r_m), num=200)
        worst = max(worst, float(np.max(np.abs(t.u - np.asarray(p.u(t.r_values))))))
    verdict(10, worst < 1e-6, f"sup-norm profile error {worst:.1e}", time.perf_counter() - t0, 5)


def test_11_decay(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(3, 8):
        m = 0.5
        g = SchwarzschildGraph(n, m)
        rows, growing = asy.decay_check(g, [1e3 * g.horizon_radius])
        lim = asy.decay_limits(n, m)
        got = (rows[0].grad, rows[0].hess, rows[0].third)
        worst = max(worst, max(abs(a / b - 1) for a, b in zip(got, lim)))
    g3 = asy.decay_check(SchwarzschildGraph(3, 0.5), [1e3])[0][0].grad
    ok = worst < 1e-2 and abs(g3 / math.sqrt(1.0) - 1) < 1e-2
    verdict(11, ok, f"max rel decay error {worst:.1e}", time.perf_counter() - t0, 5)
