"""Compactly supported bump perturbations of Schwarzschild graphs."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .geometry import CLASSIFY_TOL, Ellipticity, batch_geometry, batch_s2, principal_curvatures_batch
from .graphs import GraphFunction
from .mass import HorizonShape, mass_formula_terms
from .quadrature import gl_interval, sphere_rule, worker_count

# max over s of |d^2/ds^2 (1 - s^2)^4|, attained at s = 0
BUMP_C2_CONSTANT = 8.0
EXCLUSION_FACTOR = 1.1


class BumpSpecError(ValueError):
    pass


@dataclass(frozen=True)
class BumpSpec:
    center: tuple
    radius: float
    amplitude: float

    def validate(self, horizon_radius: float, n: int):
        c = np.asarray(self.center, dtype=float)
        if c.shape != (n,):
            raise BumpSpecError(f"bump center must lie in R^{n}")
        if not self.radius > 0:
            raise BumpSpecError("bump radius must be positive")
        if np.linalg.norm(c) - self.radius <= EXCLUSION_FACTOR * horizon_radius:
            raise BumpSpecError("bump support reaches the near-horizon exclusion zone")

    @property
    def c2_norm(self) -> float:
        return abs(self.amplitude) * BUMP_C2_CONSTANT / self.radius**2


def bump_derivatives(points, spec: BumpSpec, third: bool = False):
    """Value and derivatives of amplitude * (1 - |x-c|^2/rho^2)^4 (zero outside the ball)."""
    pts = np.atleast_2d(points)
    N, n = pts.shape
    rho = spec.radius
    z = (pts - np.asarray(spec.center, dtype=float)) / rho
    q = np.einsum("ki,ki->k", z, z)
    inside = q < 1.0
    s = np.where(inside, 1.0 - q, 0.0)
    a = spec.amplitude
    phi = a * s**4
    d1 = a * -4.0 * s**3
    d2 = a * 12.0 * s**2
    d3 = a * -24.0 * s
    grad = (2.0 / rho) * z * d1[:, None]
    eye = np.eye(n)
    zz = z[:, :, None] * z[:, None, :]
    hess = (4.0 / rho**2) * zz * d2[:, None, None] + (2.0 / rho**2) * eye * d1[:, None, None]
    if not third:
        return phi, grad, hess, None
    dz = eye[None, :, :, None] * z[:, None, None, :]
    sym = dz + np.swapaxes(dz, 2, 3) + np.moveaxis(dz, 3, 1)
    zzz = zz[:, :, :, None] * z[:, None, None, :]
    t3 = (8.0 / rho**3) * zzz * d3[:, None, None, None] + (4.0 / rho**3) * sym * d2[:, None, None, None]
    return phi, grad, hess, t3


class BumpPerturbedGraph(GraphFunction):
    """f + bump; identical to the base graph outside the support ball."""

    def __init__(self, base: GraphFunction, spec: BumpSpec):
        self.base = base
        self.spec = spec
        self.dim = base.dim
        self.inner_radius = base.inner_radius
        self.outer_radius = base.outer_radius
        self.horizon_radius = getattr(base, "horizon_radius", 0.0)
        spec.validate(self.horizon_radius, self.dim)
        self.local_support = (np.asarray(spec.center, dtype=float), float(spec.radius))

    def value(self, points):
        pts = self._check(points)
        return self.base.value(pts) + bump_derivatives(pts, self.spec)[0]

    def derivatives(self, points, third=False):
        pts = self._check(points)
        g, h, t = self.base.derivatives(pts, third=third)
        _, bg, bh, bt = bump_derivatives(pts, self.spec, third=third)
        return g + bg, h + bh, (None if t is None else t + bt)


def bump_perturb(graph: GraphFunction, spec: BumpSpec) -> BumpPerturbedGraph:
    return BumpPerturbedGraph(graph, spec)


# ------------------------------------------------------------ experiments


def _sample_order(n: int) -> int:
    # keeps the sample count near 10^4 to 10^5 in every dimension
    return {2: 16, 3: 8, 4: 6, 5: 4}.get(n, 3)


def sample_points(graph, r_lo: float, r_hi: float, n_radial: int = 24, angular_order: Optional[int] = None) -> np.ndarray:
    """Radial x angular sample set, densified on the perturbation ball if any."""
    n = graph.dim
    angular_order = angular_order or _sample_order(n)
    rs = np.geomspace(r_lo, r_hi, n_radial)
    u, _ = sphere_rule(n, angular_order)
    pts = (rs[:, None, None] * u[None]).reshape(-1, n)
    sup = getattr(graph, "local_support", None)
    if sup is not None:
        pts = np.vstack([pts, ball_samples(sup[0], sup[1], n)])
    return pts


def ball_samples(center, radius, n: int, n_radial: int = 10, angular_order: Optional[int] = None) -> np.ndarray:
    angular_order = angular_order or _sample_order(n)
    rs, _ = gl_interval(0.0, radius, n_radial)
    u, _ = sphere_rule(n, angular_order)
    return np.asarray(center, dtype=float) + (rs[:, None, None] * u[None]).reshape(-1, n)


@dataclass
class PersistenceResult:
    min_abs_s3: float
    worst: Ellipticity
    witness: Optional[np.ndarray]
    n_samples: int


_RANK = {Ellipticity.POSITIVE: 0, Ellipticity.NEGATIVE: 0, Ellipticity.DEGENERATE: 1}


def ellipticity_persistence(graph, samples=None, tol: float = CLASSIFY_TOL) -> PersistenceResult:
    """Minimum |S_3| and worst Newton-tensor classification over the samples."""
    if samples is None:
        r_h = getattr(graph, "horizon_radius", 1.0) or 1.0
        samples = sample_points(graph, EXCLUSION_FACTOR * r_h, 20.0 * r_h)
    samples = np.asarray(samples, dtype=float)
    grad, hess, _ = graph.derivatives(samples)
    W, A, S = batch_geometry(grad, hess)
    eigs = principal_curvatures_batch(grad, hess)
    g_eigs = S[:, 1, None] - eigs
    pos = np.all(g_eigs > tol, axis=1)
    neg = np.all(g_eigs < -tol, axis=1)
    s3 = np.abs(S[:, 3]) if graph.dim >= 3 else np.zeros(len(samples))
    degenerate = ~(pos | neg)
    if np.any(degenerate):
        idx = int(np.argmax(degenerate))
        return PersistenceResult(float(s3.min()), Ellipticity.DEGENERATE, samples[idx], len(samples))
    worst = Ellipticity.POSITIVE if np.all(pos) else (Ellipticity.NEGATIVE if np.all(neg) else Ellipticity.DEGENERATE)
    return PersistenceResult(float(s3.min()), worst, None, len(samples))


def ellipticity_threshold(base, center, radius: float, lo: float = 0.0, hi: float = 1.0, iters: int = 30) -> float:
    """Bisect for the smallest amplitude at which some sample turns degenerate."""

    def elliptic(a):
        g = bump_perturb(base, BumpSpec(tuple(center), radius, a))
        return ellipticity_persistence(g).worst != Ellipticity.DEGENERATE

    if not elliptic(lo):
        return lo
    while elliptic(hi):
        hi *= 2.0
        if hi > 1e6:
            return np.inf
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if elliptic(mid):
            lo = mid
        else:
            hi = mid
    return hi


@dataclass
class SweepRow:
    amplitude: float
    adm: float
    adm_massform: float
    slack: float
    min_rg: float
    c2_norm: float

    def as_list(self):
        return [self.amplitude, self.adm, self.adm_massform, self.slack, self.min_rg, self.c2_norm]


SWEEP_COLUMNS = ["amplitude", "adm", "adm_massform", "slack", "min_rg", "c2_norm"]


def min_scalar_curvature(graph, samples) -> float:
    grad, hess, _ = graph.derivatives(samples)
    _, s2 = batch_s2(grad, hess)
    return float(np.min(2.0 * s2))


def penrose_slack_sweep(base, center, radius: float, amplitudes: Sequence[float]) -> List[SweepRow]:
    """ADM mass, mass-formula mass, Penrose slack and min R_g for each bump amplitude."""
    horizon = HorizonShape.round_sphere(base.horizon_radius)

    def row(a):
        spec = BumpSpec(tuple(center), radius, float(a))
        g = bump_perturb(base, spec)
        rep = mass_formula_terms(g, horizon)
        samples = ball_samples(spec.center, spec.radius, g.dim)
        return SweepRow(float(a), rep.adm, rep.bulk + rep.horizon, rep.slack, min_scalar_curvature(g, samples), spec.c2_norm)

    workers = worker_count()
    if workers == 1 or len(amplitudes) < 2:
        return [row(a) for a in amplitudes]
    # rows are independent; map keeps the input order
    with ThreadPoolExecutor(max_workers=min(workers, len(amplitudes))) as ex:
        return list(ex.map(row, amplitudes))
