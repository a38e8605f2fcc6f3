"""The divergence identity div_M G(A)X = 2 S_2 Theta and its flux consequences."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .geometry import batch_geometry, newton_field_batch
from .graphs import DomainError
from .mass import _check_radius, c_n
from .quadrature import default_shell_order, graph_shell_integral, graph_sphere_integral


ROUNDOFF_FLOOR = 1e-11


class StencilError(DomainError):
    pass


def _weighted_newton_field(graph, pts):
    """sqrt(det g) times the coordinate components of G(A)X; sqrt(det g) = W."""
    grad, hess, _ = graph.derivatives(pts)
    W, A, S = batch_geometry(grad, hess)
    _, GX = newton_field_batch(grad, A, S)
    return W[:, None] * GX


def _divergence(graph, x, h):
    n = x.size
    offsets = np.vstack([np.eye(n) * h, -np.eye(n) * h])
    try:
        Y = _weighted_newton_field(graph, x[None] + offsets)
    except DomainError as exc:
        raise StencilError(f"stencil of width {h} leaves the domain at {x}") from exc
    d = (np.diag(Y[:n]) - np.diag(Y[n:])) / (2.0 * h)
    grad, _, _ = graph.derivatives(x[None])
    W = math.sqrt(1.0 + float(grad[0] @ grad[0]))
    return float(d.sum()) / W


def divergence(graph, point, h=None, richardson: bool = True) -> float:
    """Intrinsic divergence of G(A)X at a point by centered differences."""
    x = np.asarray(point, dtype=float)
    if h is None:
        h = 1e-4 * max(float(np.linalg.norm(x)), 1.0)
    if not richardson:
        return _divergence(graph, x, h)
    return (4.0 * _divergence(graph, x, 0.5 * h) - _divergence(graph, x, h)) / 3.0


def reilly_rhs(graph, point) -> float:
    """2 S_2 Theta at a point."""
    grad, hess, _ = graph.derivatives(np.asarray(point, dtype=float)[None])
    W, _, S = batch_geometry(grad, hess)
    return float(2.0 * S[0, 2] / W[0])


def divergence_residual(graph, point, h=None, richardson: bool = False) -> float:
    return abs(divergence(graph, point, h, richardson) - reilly_rhs(graph, point))


def residual_order(graph, point, h0: float, levels: int = 3):
    """Residuals at h0, h0/2, ... and the observed order from the last pair.

    Residuals at roundoff level give an infinite observed order (the stencil is exact).
    """
    res = [divergence_residual(graph, point, h0 / 2**k) for k in range(levels)]
    floor = ROUNDOFF_FLOOR * max(abs(reilly_rhs(graph, point)), 1.0)
    if res[-1] <= floor:
        return res, math.inf
    return res, math.log2(res[-2] / res[-1])


# ---------------------------------------------------------------- fluxes


@dataclass(frozen=True)
class FluxRecord:
    r: float
    normalized_flux: float
    quad_order: int


def _flux_integrand(graph, pts):
    grad, hess, _ = graph.derivatives(pts)
    W, A, S = batch_geometry(grad, hess)
    _, GX = newton_field_batch(grad, A, S)
    xhat = pts / np.linalg.norm(pts, axis=1)[:, None]
    p_rad = np.einsum("ki,ki->k", grad, xhat)
    # |g^{-1} xhat|_g = sqrt(xhat^T g^{-1} xhat)
    conormal_norm = np.sqrt(1.0 - p_rad**2 / W**2)
    gx_dot_nu = np.einsum("ki,ki->k", GX, xhat) / conormal_norm
    p_tan2 = np.einsum("ki,ki->k", grad, grad) - p_rad**2
    return gx_dot_nu * np.sqrt(1.0 + p_tan2)


def normalized_boundary_flux(graph, r: float, quad_order=None, local_order=None) -> FluxRecord:
    """c_n times the flux of G(A)X through the slice |x| = r, in the induced metric."""
    _check_radius(graph, r)
    quad_order = quad_order or default_shell_order(graph.dim)
    val = c_n(graph.dim) * graph_sphere_integral(graph, _flux_integrand, r, quad_order, local_order)
    return FluxRecord(float(r), val, quad_order)


def horizon_flux(r_m: float, n: int) -> float:
    """Normalized flux of G(A)X through a round horizon: (1/2) r_m^{n-2}."""
    return 0.5 * r_m ** (n - 2)


def flux_balance(graph, r1: float, r2: float, quad_order=None, local_order=None) -> float:
    if not r1 < r2:
        raise ValueError("need r1 < r2")
    f1 = normalized_boundary_flux(graph, r1, quad_order, local_order).normalized_flux
    f2 = normalized_boundary_flux(graph, r2, quad_order, local_order).normalized_flux
    return f2 - f1


def _div_density(graph, pts):
    grad, hess, _ = graph.derivatives(pts)
    W, _, S = batch_geometry(grad, hess)
    # 2 S_2 Theta times the area element W
    return 2.0 * S[:, 2] / W * W


def annulus_source(graph, r1: float, r2: float, radial_order: int = 48, angular_order=None, local_order=None) -> float:
    """c_n times the integral of 2 S_2 Theta dM over r1 < |x| < r2."""
    return c_n(graph.dim) * graph_shell_integral(graph, _div_density, r1, r2, radial_order, angular_order, local_order)


def flux_records_csv(records: Sequence[FluxRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "flux", "quad_order"])
    for rec in records:
        w.writerow([format(rec.r, ".17g"), format(rec.normalized_flux, ".17g"), rec.quad_order])
    return buf.getvalue()
