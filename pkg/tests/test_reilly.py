import numpy as np
import pytest
import sympy as sp

from penrose_lab import reilly
from penrose_lab.graphs import FlatGraph, GraphFunction, HemisphereGraph
from penrose_lab.perturbation import BumpSpec, bump_perturb
from penrose_lab.reilly import StencilError
from penrose_lab.schwarzschild import SchwarzschildGraph


class SympyGraph(GraphFunction):
    """Graph of an explicit sympy expression; derivatives by lambdify."""

    def __init__(self, expr, symbols):
        self.dim = len(symbols)
        self.inner_radius = -1.0
        self.expr = expr
        self.symbols = symbols
        self._grad = sp.lambdify([symbols], [expr.diff(s) for s in symbols])
        self._hess = sp.lambdify([symbols], [[expr.diff(a, b) for b in symbols] for a in symbols])

    def value(self, points):
        f = sp.lambdify([self.symbols], self.expr)
        return np.array([f(p) for p in np.atleast_2d(points)])

    def derivatives(self, points, third=False):
        pts = self._check(points)
        grad = np.array([self._grad(p) for p in pts], dtype=float)
        hess = np.array([self._hess(p) for p in pts], dtype=float)
        return grad, hess, None


def sympy_divergence(expr, xs, point):
    """div_M G(A)X and 2 S_2 Theta evaluated symbolically at a point."""
    n = len(xs)
    p = sp.Matrix([expr.diff(s) for s in xs])
    H = sp.hessian(expr, xs)
    W = sp.sqrt(1 + (p.T * p)[0])
    g_inv = sp.eye(n) - p * p.T / W**2
    A = g_inv * H / W
    S1 = A.trace()
    S2 = (S1**2 - (A * A).trace()) / 2
    X = p / W**2
    Y = (S1 * sp.eye(n) - A) * X
    div = sum((W * Y[i]).diff(xs[i]) for i in range(n)) / W
    subs = dict(zip(xs, point))
    return float(div.subs(subs).evalf(30)), float((2 * S2 / W).subs(subs).evalf(30))


@pytest.fixture(scope="module")
def poly_graph():
    xs = sp.symbols("x0:3")
    expr = 0.3 * xs[0] ** 2 + 0.1 * xs[0] * xs[1] - 0.2 * xs[1] ** 2 + 0.05 * xs[2] ** 3 + 0.1 * xs[0] * xs[2] ** 2
    return expr, xs, SympyGraph(expr, xs)


def test_identity_symbolic_and_numeric(poly_graph):
    expr, xs, g = poly_graph
    for point in ([0.4, -0.3, 0.7], [1.1, 0.2, -0.5]):
        div, rhs = sympy_divergence(expr, xs, point)
        assert div == pytest.approx(rhs, abs=1e-20)
        assert abs(rhs) > 1e-2
        assert reilly.divergence(g, point) == pytest.approx(div, abs=1e-8)
        assert reilly.reilly_rhs(g, point) == pytest.approx(rhs, rel=1e-12)


def test_flat_residual():
    g = FlatGraph(3)
    assert reilly.divergence_residual(g, [1.0, 2.0, 3.0]) == 0.0


def test_hemisphere_apex():
    g = HemisphereGraph(3, 1.0)
    assert reilly.reilly_rhs(g, [0.0, 0.0, 0.0]) == pytest.approx(6.0, abs=1e-12)
    assert reilly.divergence(g, [0.0, 0.0, 0.0], h=1e-3) == pytest.approx(6.0, abs=1e-6)


def test_schwarzschild_order():
    g = SchwarzschildGraph(3, 0.5)
    res, order = reilly.residual_order(g, [2.0, 0.0, 0.0], 2e-2)
    assert order >= 1.9
    assert res[-1] < 1e-5


def test_bump_order():
    base = SchwarzschildGraph(3, 0.5)
    g = bump_perturb(base, BumpSpec((4.0, 0.0, 0.0), 1.5, 0.05))
    point = [4.3, 0.4, -0.2]
    assert abs(reilly.reilly_rhs(g, point)) > 1e-3
    res, order = reilly.residual_order(g, point, 4e-2)
    assert order >= 1.9


@pytest.mark.parametrize("n", [3, 4, 5])
def test_random_points_order(n):
    rng = np.random.default_rng(n)
    g = SchwarzschildGraph(n, 0.5)
    for _ in range(5):
        d = rng.normal(size=n)
        x = rng.uniform(1.5, 8.0) * g.horizon_radius * d / np.linalg.norm(d)
        res, order = reilly.residual_order(g, x, 1e-2 * np.linalg.norm(x))
        assert order >= 1.9 or res[-1] < 1e-11


def test_stencil_error():
    g = SchwarzschildGraph(3, 0.5)
    with pytest.raises(StencilError):
        reilly.divergence(g, [1.0005, 0.0, 0.0], h=1e-2)


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("m", [0.5, 1.0])
def test_flux_radius_independence(n, m):
    g = SchwarzschildGraph(n, m)
    for f in (1.001, 1.5, 2.0, 5.0, 10.0):
        rec = reilly.normalized_boundary_flux(g, f * g.horizon_radius)
        assert rec.normalized_flux == pytest.approx(m, rel=1e-12)


def test_flux_examples():
    g = SchwarzschildGraph(3, 0.5)
    assert reilly.normalized_boundary_flux(g, 2.0).normalized_flux == pytest.approx(0.5, abs=1e-12)
    assert reilly.normalized_boundary_flux(g, 10.0).normalized_flux == pytest.approx(0.5, abs=1e-12)
    assert reilly.normalized_boundary_flux(FlatGraph(3), 3.0).normalized_flux == 0.0
    assert reilly.flux_balance(g, 2.0, 10.0) == pytest.approx(0.0, abs=1e-12)
    assert reilly.flux_balance(FlatGraph(3), 1.0, 2.0) == 0.0
    with pytest.raises(ValueError):
        reilly.flux_balance(g, 3.0, 2.0)


def test_horizon_flux():
    assert reilly.horizon_flux(1.0, 3) == 0.5
    assert reilly.horizon_flux(1.0, 5) == 0.5
    assert reilly.horizon_flux(0.0, 4) == 0.0
    for n in (3, 4, 6):
        m = 0.8
        r_m = (2 * m) ** (1 / (n - 2))
        assert reilly.horizon_flux(r_m, n) == pytest.approx(m)


def test_flux_balance_bump():
    base = SchwarzschildGraph(3, 0.5)
    g = bump_perturb(base, BumpSpec((4.0, 0.0, 0.0), 1.5, 0.05))
    # the slice |x| = 4 cuts the bump, so the annulus holds part of its source
    bal = reilly.flux_balance(g, 2.0, 4.0)
    src = reilly.annulus_source(g, 2.0, 4.0)
    assert abs(src) > 1e-6
    assert bal == pytest.approx(src, rel=1e-2)
    # an annulus containing the whole support sees zero net source
    assert reilly.flux_balance(g, 2.0, 6.0) == pytest.approx(0.0, abs=1e-9)


def test_flux_csv():
    recs = [reilly.FluxRecord(2.0, 0.5, 8), reilly.FluxRecord(10.0, 0.5, 8)]
    lines = reilly.flux_records_csv(recs).splitlines()
    assert lines[0] == "r,flux,quad_order"
    assert lines[1] == "2,0.5,8"


def test_hemisphere_stencil_is_exact():
    # W G(A)X is linear in x on a round hemisphere, so central differences are exact
    g = HemisphereGraph(3, 1.0)
    res, order = reilly.residual_order(g, [0.2, -0.1, 0.3], 2e-2)
    assert max(res) < 1e-12 and order == float("inf")
