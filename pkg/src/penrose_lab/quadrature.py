"""Tensor Gauss-Legendre rules on spheres, polar caps and spherical shells."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np
from scipy.special import roots_gegenbauer

THREADS_ENV = "PENROSE_LAB_THREADS"


def sphere_area(n: int) -> float:
    """Area omega_{n-1} of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@lru_cache(maxsize=64)
def gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


@lru_cache(maxsize=64)
def gauss_gegenbauer(order: int, alpha: float):
    """Nodes/weights for the weight (1 - t^2)^(alpha - 1/2) on [-1, 1]."""
    if alpha == 0.5:
        return gauss_legendre(order)
    return roots_gegenbauer(order, alpha)


def gl_interval(a: float, b: float, order: int):
    x, w = gauss_legendre(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _hyperspherical(n: int, order: int, theta_max: float):
    """Unit vectors and weights; the first polar angle runs over [0, theta_max]."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    nphi = 2 * order
    phi = 2.0 * math.pi * np.arange(nphi) / nphi
    wphi = np.full(nphi, 2.0 * math.pi / nphi)
    # start from S^1 and prepend polar angles
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    wts = wphi
    for k in range(n - 2):
        dim_below = pts.shape[1]  # current sphere is S^{dim_below-1}
        top = theta_max if k == n - 3 else math.pi
        if top == math.pi:
            # Gegenbauer in cos(theta) absorbs the sin^(d-1) weight exactly
            c, wt = gauss_gegenbauer(order, 0.5 * (dim_below - 1))
            s = np.sqrt(1.0 - c * c)
        else:
            th, wt = gl_interval(0.0, top, order)
            wt = wt * np.sin(th) ** (dim_below - 1)
            c, s = np.cos(th), np.sin(th)
        new = np.empty((c.size * pts.shape[0], dim_below + 1))
        new[:, 0] = np.repeat(c, pts.shape[0])
        new[:, 1:] = np.repeat(s, pts.shape[0])[:, None] * np.tile(pts, (c.size, 1))
        wts = np.repeat(wt, wts.size) * np.tile(wts, c.size)
        pts = new
    return pts, wts


@lru_cache(maxsize=32)
def _sphere_rule_cached(n: int, order: int):
    pts, wts = _hyperspherical(n, order, math.pi)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def sphere_rule(n: int, order: int):
    """Nodes (N, n) on S^{n-1} and weights summing to omega_{n-1}."""
    if n < 2 or order < 1:
        raise ValueError("need n >= 2 and order >= 1")
    return _sphere_rule_cached(n, order)


def _householder_to(axis):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    e1 = np.zeros_like(axis)
    e1[0] = 1.0
    v = e1 - axis
    nv = np.linalg.norm(v)
    if nv < 1e-15:
        return np.eye(axis.size)
    v /= nv
    return np.eye(axis.size) - 2.0 * np.outer(v, v)


def cap_rule(n: int, order: int, axis, theta_max: float):
    """Rule on the polar cap {angle(x, axis) <= theta_max} of S^{n-1}."""
    if n == 2:
        th, w = gl_interval(-theta_max, theta_max, order)
        pts = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        pts, w = _hyperspherical(n, order, theta_max)
    H = _householder_to(axis)
    return pts @ H.T, w


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def evaluate_chunked(func, points, chunk: int = 4096):
    """Apply func to row-chunks of points, in parallel if requested; results keep row order."""
    N = points.shape[0]
    if N <= chunk:
        return func(points)
    pieces = [points[i : i + chunk] for i in range(0, N, chunk)]
    workers = worker_count()
    if workers == 1:
        out = [func(p) for p in pieces]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(func, pieces))
    return np.concatenate(out)


def sphere_integral(func, n: int, r: float, order: int, center=None) -> float:
    """Integral over the Euclidean sphere |x - center| = r of func(points) dS."""
    u, w = sphere_rule(n, order)
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    vals = evaluate_chunked(func, c + r * u)
    return float(np.dot(vals, w) * r ** (n - 1))


def shell_integral(func, n: int, r1: float, r2: float, radial_order: int, angular_order: int) -> float:
    """Integral of func over the annulus r1 < |x| < r2 in R^n."""
    rs, wr = gl_interval(r1, r2, radial_order)
    u, w = sphere_rule(n, angular_order)
    pts = (rs[:, None, None] * u[None, :, :]).reshape(-1, n)
    vals = evaluate_chunked(func, pts).reshape(rs.size, u.shape[0])
    return float(np.dot(vals @ w, wr * rs ** (n - 1)))


def ball_shell_cap(r: float, center_norm: float, radius: float) -> float:
    """Half-angle of the cap cut from the sphere |x| = r by the ball B(c, radius)."""
    c = (r * r + center_norm**2 - radius**2) / (2.0 * r * center_norm)
    return math.acos(min(1.0, max(-1.0, c)))


def ball_sphere_integral(func, n: int, r: float, center, radius: float, order: int) -> float:
    """Integral of func over the part of |x| = r inside the ball B(center, radius)."""
    cn = float(np.linalg.norm(center))
    if abs(r - cn) >= radius:
        return 0.0
    th = ball_shell_cap(r, cn, radius)
    u, w = cap_rule(n, order, center, th)
    vals = evaluate_chunked(func, r * u)
    return float(np.dot(vals, w) * r ** (n - 1))


def ball_shell_integral(func, n: int, r1: float, r2: float, center, radius: float, radial_order: int, angular_order: int) -> float:
    """Integral of func over {r1 < |x| < r2} intersected with B(center, radius)."""
    cn = float(np.linalg.norm(center))
    lo, hi = max(r1, cn - radius), min(r2, cn + radius)
    if hi <= lo:
        return 0.0
    rs, wr = gl_interval(lo, hi, radial_order)
    total = 0.0
    for r, wgt in zip(rs, wr):
        total += wgt * ball_sphere_integral(func, n, r, center, radius, angular_order)
    return total


_LOCAL_ORDER = {2: 64, 3: 48, 4: 20, 5: 12}
_SHELL_ORDER = {2: 32, 3: 16, 4: 12, 5: 8}


def default_local_order(n: int) -> int:
    """Cap-rule order for perturbation balls; keeps node counts bounded as n grows."""
    return _LOCAL_ORDER.get(n, 8)


def default_shell_order(n: int) -> int:
    return _SHELL_ORDER.get(n, 6)


def _local_support(graph):
    sup = getattr(graph, "local_support", None)
    base = getattr(graph, "base", None)
    if sup is None or base is None:
        return None
    return base, np.asarray(sup[0], dtype=float), float(sup[1])


def graph_sphere_integral(graph, integrand, r: float, order: int, local_order=None) -> float:
    """Integrate integrand(graph, points) over |x| = r.

    Graphs that differ from a base graph only on a ball (``local_support``) are
    integrated as base integral plus a cap correction, so the quadrature never
    straddles the edge of the perturbation.
    """
    loc = _local_support(graph)
    local_order = local_order or default_local_order(graph.dim)
    if loc is None:
        return sphere_integral(lambda pts: integrand(graph, pts), graph.dim, r, order)
    base, c, rad = loc
    total = graph_sphere_integral(base, integrand, r, order, local_order)
    total += ball_sphere_integral(
        lambda pts: integrand(graph, pts) - integrand(base, pts), graph.dim, r, c, rad, local_order
    )
    return total


@lru_cache(maxsize=16)
def _base_shell_integral(base, integrand, r1, r2, radial_order, angular_order, local_order):
    # perturbation sweeps share one base graph; its shell integral is reused
    return graph_shell_integral(base, integrand, r1, r2, radial_order, angular_order, local_order)


def graph_shell_integral(
    graph, integrand, r1: float, r2: float, radial_order: int, angular_order=None, local_order=None
) -> float:
    """Integrate integrand(graph, points) over r1 < |x| < r2 (same splitting as above)."""
    loc = _local_support(graph)
    local_order = local_order or default_local_order(graph.dim)
    angular_order = angular_order or default_shell_order(graph.dim)
    if loc is None:
        return shell_integral(lambda pts: integrand(graph, pts), graph.dim, r1, r2, radial_order, angular_order)
    base, c, rad = loc
    total = _base_shell_integral(base, integrand, r1, r2, radial_order, angular_order, local_order)
    total += ball_shell_integral(
        lambda pts: integrand(graph, pts) - integrand(base, pts),
        graph.dim, r1, r2, c, rad, local_order, local_order,
    )
    return total
