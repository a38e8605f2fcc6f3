"""ADM mass, the bulk-plus-horizon mass formula, and the Penrose/AF comparison.

Normalization: the flux constant is c_n = 1 / (2 (n-1) omega_{n-1}). With this
choice the Schwarzschild graph of parameter m has mass m and the round horizon
term equals (1/2) r_m^{n-2}.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .geometry import batch_s2
from .graphs import DomainError
from .quadrature import default_shell_order, gl_interval, graph_shell_integral, graph_sphere_integral, sphere_area, sphere_rule

DEFAULT_RADII_FACTORS = (10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 640.0, 1280.0)


NORMALIZATION_NOTE = "c_n = 1/(2(n-1) omega_{n-1}); the unhalved constant gives 2m for Schwarzschild"


class GeometryError(ValueError):
    pass


class ExtrapolationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class MassConstants:
    n: int

    @property
    def omega(self) -> float:
        return sphere_area(self.n)

    @property
    def c_n(self) -> float:
        return 1.0 / (2.0 * (self.n - 1) * self.omega)


def c_n(n: int) -> float:
    return MassConstants(n).c_n


def radial_scale(graph) -> float:
    r = getattr(graph, "horizon_radius", 0.0)
    return r if r > 0 else 1.0


# ---------------------------------------------------------------- horizons


@dataclass(frozen=True)
class HorizonShape:
    """Inner boundary inside the hyperplane P = R^n.

    ``profile`` maps t in [0, pi] to (rho, z, rho', z', rho'', z'') for a
    hypersurface of revolution about the last axis of P.
    """

    kind: str
    radius: float = 0.0
    profile: Optional[Callable] = None

    @classmethod
    def round_sphere(cls, radius: float) -> "HorizonShape":
        if not radius > 0:
            raise GeometryError("horizon radius must be positive")
        return cls("round_sphere", radius=float(radius))

    @classmethod
    def revolution(cls, profile: Callable) -> "HorizonShape":
        return cls("surface_of_revolution", profile=profile)

    @classmethod
    def spheroid(cls, a: float, c: float) -> "HorizonShape":
        """Semi-axes a (equatorial, repeated) and c (axis of revolution)."""

        def prof(t):
            s, co = np.sin(t), np.cos(t)
            return a * s, c * co, a * co, -c * s, -a * s, -c * co

        return cls("surface_of_revolution", profile=prof)

    @classmethod
    def sphere_of_revolution(cls, radius: float) -> "HorizonShape":
        return cls.spheroid(radius, radius)

    def _nodes(self, order):
        t, w = gl_interval(0.0, math.pi, order)
        rho, z, d_rho, dz, d2rho, d2z = self.profile(t)
        sigma = np.hypot(d_rho, dz)
        k_mer = -(d_rho * d2z - dz * d2rho) / sigma**3
        k_par = -dz / (rho * sigma)
        return w, rho, sigma, k_mer, k_par

    def principal_curvatures(self, n: int, order: int = 128):
        """(meridian, parallel) curvatures at the quadrature nodes, inward normal."""
        if self.kind == "round_sphere":
            return np.array([1.0 / self.radius]), np.array([1.0 / self.radius])
        _, _, _, k_mer, k_par = self._nodes(order)
        return k_mer, k_par

    def area(self, n: int, order: int = 128) -> float:
        if self.kind == "round_sphere":
            return sphere_area(n) * self.radius ** (n - 1)
        w, rho, sigma, _, _ = self._nodes(order)
        return sphere_area(n - 1) * float(np.dot(w, rho ** (n - 2) * sigma))

    def s1_integral(self, n: int, order: int = 128) -> float:
        """Integral over the horizon of the sum of its principal curvatures."""
        if self.kind == "round_sphere":
            return (n - 1) * sphere_area(n) * self.radius ** (n - 2)
        w, rho, sigma, k_mer, k_par = self._nodes(order)
        s1 = k_mer + (n - 2) * k_par
        return sphere_area(n - 1) * float(np.dot(w, s1 * rho ** (n - 2) * sigma))

    def is_convex(self, n: int, order: int = 128, tol: float = 1e-12) -> bool:
        k_mer, k_par = self.principal_curvatures(n, order)
        return bool(np.all(k_mer > -tol) and np.all(k_par > -tol))


def penrose_rhs(area: float, n: int) -> float:
    return 0.5 * (area / sphere_area(n)) ** ((n - 2) / (n - 1))


# ----------------------------------------------------------------- fluxes


def _adm_integrand(graph, pts):
    grad, hess, _ = graph.derivatives(pts)
    lap = np.einsum("kii->k", hess)
    hp = np.einsum("kij,kj->ki", hess, grad)
    vec = grad * lap[:, None] - hp
    nu = pts / np.linalg.norm(pts, axis=1)[:, None]
    return np.einsum("ki,ki->k", vec, nu)


def _check_radius(graph, r):
    if not r > getattr(graph, "inner_radius", 0.0):
        raise DomainError(f"radius {r} is inside the excluded region of the graph")


def adm_flux_at_radius(graph, r: float, quad_order=None) -> float:
    """c_n times the coordinate-sphere flux sum_ij (g_ij,j - g_jj,i) nu_i at radius r."""
    quad_order = quad_order or default_shell_order(graph.dim)
    if quad_order < 4:
        raise ValueError("quad_order must be at least 4")
    _check_radius(graph, r)
    return c_n(graph.dim) * graph_sphere_integral(graph, _adm_integrand, r, quad_order)


@dataclass
class AdmResult:
    adm: float
    fit_residual: float
    coefficients: np.ndarray
    flux_by_radius: List[Tuple[float, float]]
    quad_order: int
    warning: str = ""


def adm_mass(graph, radii=None, quad_order=None, degree: int = 5, rtol_fit: float = 1e-6) -> AdmResult:
    """Extrapolate flux(r) = m + sum_k c_k r^{-k(n-2)} to r = infinity by least squares."""
    n = graph.dim
    if radii is None:
        radii = [f * radial_scale(graph) for f in DEFAULT_RADII_FACTORS]
    radii = np.asarray(radii, dtype=float)
    if radii.size < 3 or np.any(np.diff(radii) <= 0):
        raise ValueError("need at least three increasing radii")
    quad_order = quad_order or default_shell_order(n)
    flux = np.array([adm_flux_at_radius(graph, r, quad_order) for r in radii])
    deg = min(degree, radii.size - 1)
    x = radii ** (-(n - 2.0))
    V = np.vander(x, deg + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, flux, rcond=None)
    resid = float(np.max(np.abs(V @ coef - flux)))
    msg = ""
    scale = max(float(np.max(np.abs(flux))), 1e-300)
    if resid > rtol_fit * scale and resid > 1e-13:
        msg = f"extrapolation fit residual {resid:.3e} exceeds {rtol_fit:g} relative"
        warnings.warn(msg, ExtrapolationWarning)
    return AdmResult(float(coef[0]), resid, coef, list(zip(radii.tolist(), flux.tolist())), quad_order, msg)


# ------------------------------------------------------------ bulk term


def _theta_rg_area(graph, pts):
    grad, hess, _ = graph.derivatives(pts)
    W, s2 = batch_s2(grad, hess)
    # Theta * R_g * (area element W) with Theta = 1/W and R_g = 2 S_2
    return (1.0 / W) * (2.0 * s2) * W


def bulk_integral(graph, r_in: float, R: float, radial_order: int = 48, angular_order=None, local_order=None) -> float:
    """c_n times the integral of Theta R_g over the part of the graph with r_in < |x| < R."""
    total = graph_shell_integral(graph, _theta_rg_area, r_in, R, radial_order, angular_order, local_order)
    return c_n(graph.dim) * total


def bulk_tail_bound(graph, R: float, order: int = 16) -> float:
    """Heuristic bound for the bulk integral beyond R assuming |R_g| = O(r^{-(n+1)})."""
    n = graph.dim
    u, _ = sphere_rule(n, order)
    peak = float(np.max(np.abs(_theta_rg_area(graph, R * u))))
    return c_n(n) * sphere_area(n) * peak * R**n


# --------------------------------------------------------- mass formula


@dataclass
class MassReport:
    flux_by_radius: List[Tuple[float, float]]
    adm: float
    bulk: float
    horizon: float
    penrose_rhs: float
    slack: float
    residual_massform: float
    quad_order: int = 0
    tail_bound: float = 0.0
    fit_residual: float = 0.0
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "adm": self.adm,
            "bulk": self.bulk,
            "horizon": self.horizon,
            "penrose_rhs": self.penrose_rhs,
            "slack": self.slack,
            "residual": self.residual_massform,
            "flux_by_radius": [[r, v] for r, v in self.flux_by_radius],
            "quad_order": self.quad_order,
            "tail_bound": self.tail_bound,
            "fit_residual": self.fit_residual,
            "warnings": list(self.warnings),
            "normalization": NORMALIZATION_NOTE,
        }

    def flux_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "flux", "quad_order"])
        for r, v in self.flux_by_radius:
            w.writerow([format(r, ".17g"), format(v, ".17g"), self.quad_order])
        return buf.getvalue()


def _check_horizon(graph, horizon: Optional[HorizonShape]):
    r_h = getattr(graph, "horizon_radius", 0.0)
    if horizon is None:
        if r_h > 0:
            raise GeometryError("graph has a horizon but none was supplied")
        return
    if horizon.kind != "round_sphere":
        raise GeometryError("graph boundary is a round sphere; horizon shape does not match")
    if r_h <= 0 or abs(horizon.radius - r_h) > 1e-12 * r_h:
        raise GeometryError(f"horizon radius {horizon.radius} does not match graph boundary {r_h}")


def mass_formula_terms(
    graph,
    horizon: Optional[HorizonShape],
    R: Optional[float] = None,
    quad_order=None,
    radii=None,
    radial_order: int = 48,
    local_order=None,
) -> MassReport:
    """Compare the ADM flux mass with bulk (Theta R_g) plus horizon (S_1) terms."""
    _check_horizon(graph, horizon)
    n = graph.dim
    scale = radial_scale(graph)
    R = 20.0 * scale if R is None else float(R)
    quad_order = quad_order or default_shell_order(n)
    adm = adm_mass(graph, radii, quad_order)
    r_in = max(getattr(graph, "horizon_radius", 0.0), 0.0)
    bulk = bulk_integral(graph, r_in, R, radial_order, None, local_order)
    tail = bulk_tail_bound(graph, R, quad_order)
    if horizon is None:
        hor, rhs = 0.0, 0.0
    else:
        hor = c_n(n) * horizon.s1_integral(n)
        rhs = penrose_rhs(horizon.area(n), n)
    warns = [adm.warning] if adm.warning else []
    return MassReport(
        flux_by_radius=adm.flux_by_radius,
        adm=adm.adm,
        bulk=bulk,
        horizon=hor,
        penrose_rhs=rhs,
        slack=adm.adm - rhs,
        residual_massform=adm.adm - (bulk + hor),
        quad_order=quad_order,
        tail_bound=tail,
        fit_residual=adm.fit_residual,
        warnings=warns,
    )


@dataclass
class PenroseCheck:
    adm: float
    penrose_rhs: float
    slack: float
    af_lhs: Optional[float]
    af_rhs: Optional[float]
    convex: bool

    def to_dict(self) -> dict:
        return {
            "adm": self.adm,
            "penrose_rhs": self.penrose_rhs,
            "slack": self.slack,
            "af_lhs": self.af_lhs,
            "af_rhs": self.af_rhs,
            "convex": self.convex,
        }


def aleksandrov_fenchel(horizon: HorizonShape, n: int) -> Tuple[float, float]:
    """(c_n * integral of S_1, (1/2)(|Gamma|/omega_{n-1})^{(n-2)/(n-1)})."""
    return c_n(n) * horizon.s1_integral(n), penrose_rhs(horizon.area(n), n)


def penrose_check(graph, horizon: HorizonShape, adm: Optional[float] = None, quad_order=None) -> PenroseCheck:
    n = graph.dim
    if adm is None:
        adm = adm_mass(graph, quad_order=quad_order).adm
    rhs = penrose_rhs(horizon.area(n), n)
    convex = horizon.is_convex(n)
    if convex:
        af_lhs, af_rhs = aleksandrov_fenchel(horizon, n)
    else:
        af_lhs = af_rhs = None
    return PenroseCheck(adm, rhs, adm - rhs, af_lhs, af_rhs, convex)
