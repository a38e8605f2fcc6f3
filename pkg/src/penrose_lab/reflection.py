"""Local chart of the doubled Schwarzschild hypersurface at a horizon point.

At p = (r_m e_1, 0) the tangent space of the doubled hypersurface is spanned by
e_2..e_n (indices alpha = 1..n-1) and the vertical e_{n+1} (index n); the chart
height is measured along e_1. Points of the doubled surface are (rho(t) omega, t)
so the chart is u(y) = sqrt(rho(y_n)^2 - |y_alpha|^2) - r_m.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import elementary_symmetric
from .schwarzschild import SchwarzschildProfile

D_HAZARD = 1e-8


class ChartError(ValueError):
    pass


@dataclass
class HorizonChart:
    n: int
    half_width: float
    h: float
    axis: np.ndarray  # grid coordinates along each chart axis
    u_values: np.ndarray  # shape (len(axis),) * n, index order (y_1..y_{n-1}, y_n)
    profile: Optional[SchwarzschildProfile] = None
    base_point: Optional[np.ndarray] = None
    frame: Optional[np.ndarray] = None  # columns: alpha directions, vertical, height

    @property
    def center_index(self) -> int:
        return (self.axis.size - 1) // 2

    def height(self, y) -> np.ndarray:
        """Closed-form chart height at chart points y of shape (..., n)."""
        if self.profile is None:
            raise ChartError("chart has no generating profile")
        y = np.asarray(y, dtype=float)
        rho = self.profile.rho(y[..., -1])
        q = rho**2 - np.sum(y[..., :-1] ** 2, axis=-1)
        if np.any(q <= 0):
            raise ChartError("chart point outside the graph neighborhood")
        return np.sqrt(q) - self.profile.r_m

    def jet(self, y):
        """Closed-form (grad, hess) of the chart height at one point."""
        if self.profile is None:
            raise ChartError("chart has no generating profile")
        y = np.asarray(y, dtype=float)
        n = self.n
        if y.shape != (n,):
            raise ChartError(f"chart point must have shape ({n},), got {y.shape}")
        p = self.profile
        t = y[-1]
        rho, d1, d2 = float(p.rho(t)), float(p.drho(t)), float(p.d2rho(t))
        Q = rho**2 - float(np.sum(y[:-1] ** 2))
        g = math.sqrt(Q)
        dQ = np.empty(n)
        dQ[:-1] = -2.0 * y[:-1]
        dQ[-1] = 2.0 * rho * d1
        ddQ = np.zeros((n, n))
        ddQ[np.arange(n - 1), np.arange(n - 1)] = -2.0
        ddQ[-1, -1] = 2.0 * (d1 * d1 + rho * d2)
        grad = dQ / (2.0 * g)
        hess = ddQ / (2.0 * g) - np.outer(dQ, dQ) / (4.0 * g**3)
        return grad, hess

    def fd_jet(self, index):
        """Centered second-order (grad, hess) from grid values at an interior index."""
        idx = tuple(int(i) for i in index)
        n, h, U = self.n, self.h, self.u_values
        if any(i < 1 or i > self.axis.size - 2 for i in idx):
            raise ChartError(f"grid index {idx} has no centered stencil")

        def at(shift):
            return U[tuple(i + s for i, s in zip(idx, shift))]

        e = np.eye(n, dtype=int)
        grad = np.array([(at(e[i]) - at(-e[i])) / (2 * h) for i in range(n)])
        hess = np.empty((n, n))
        for i in range(n):
            hess[i, i] = (at(e[i]) - 2.0 * U[idx] + at(-e[i])) / h**2
            for j in range(i + 1, n):
                v = (at(e[i] + e[j]) - at(e[i] - e[j]) - at(-e[i] + e[j]) + at(-e[i] - e[j])) / (4 * h * h)
                hess[i, j] = hess[j, i] = v
        return grad, hess

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"y{i + 1}" for i in range(self.n)] + ["u"])
        for idx in np.ndindex(self.u_values.shape):
            w.writerow([format(float(self.axis[i]), ".17g") for i in idx] + [format(float(self.u_values[idx]), ".17g")])
        return buf.getvalue()

    @classmethod
    def from_values(cls, u_values, h: float) -> "HorizonChart":
        U = np.asarray(u_values, dtype=float)
        k = (U.shape[0] - 1) // 2
        return cls(U.ndim, k * h, h, h * np.arange(-k, k + 1), U)


def build_doubled_chart(profile: SchwarzschildProfile, half_width: Optional[float] = None, h: float = 1e-3, point=None) -> HorizonChart:
    """Grid of the doubled-chart height around a horizon point (default r_m e_1)."""
    n, r_m = profile.n, profile.r_m
    if half_width is None:
        half_width = 6.0 * h
    if not half_width < 0.5 * r_m:
        raise ChartError("half_width must be below r_m / 2")
    k = int(round(half_width / h))
    if k < 3:
        raise ChartError("need at least three grid steps on each side")
    axis = h * np.arange(-k, k + 1)
    rho = np.asarray(profile.rho(axis), dtype=float)
    if not np.all(np.isfinite(rho)):
        bad = int(np.argmax(~np.isfinite(rho)))
        raise ChartError(f"profile inversion failed at grid index {bad}")
    grids = np.meshgrid(*([axis] * (n - 1)), indexing="ij") if n > 1 else []
    tang2 = sum(gv**2 for gv in grids) if grids else np.zeros(())
    U = np.sqrt(rho[(None,) * (n - 1) + (slice(None),)] ** 2 - tang2[..., None]) - r_m
    if point is None:
        point = np.zeros(n)
        point[0] = r_m
    point = np.asarray(point, dtype=float)
    if abs(np.linalg.norm(point) - r_m) > 1e-12 * r_m:
        raise ChartError("base point is not on the horizon")
    e1 = point / r_m
    # orthonormal frame of P completing e1, then the vertical direction of R^{n+1}
    basis = np.linalg.qr(np.column_stack([e1, np.eye(n)]))[0][:, :n]
    basis[:, 0] *= np.sign(basis[:, 0] @ e1)
    frame = np.zeros((n + 1, n + 1))
    frame[:n, : n - 1] = basis[:, 1:]
    frame[n, n - 1] = 1.0
    frame[:n, n] = e1
    base = np.append(point, 0.0)
    return HorizonChart(n, k * h, h, axis, U, profile, base, frame)


@dataclass
class MatchingResult:
    upper: float
    lower: float
    jump: float
    mixed_upper: np.ndarray
    mixed_lower: np.ndarray
    mixed_jumps: np.ndarray


def second_derivative_matching(chart: HorizonChart) -> MatchingResult:
    """One-sided second-order estimates of u_nn and u_alpha n at the base point."""
    c = chart.center_index
    U, h, n = chart.u_values, chart.h, chart.n
    if c < 3:
        raise ChartError("one-sided stencils need three points on each side")
    line = U[(c,) * (n - 1)]

    def one_sided_2nd(vals):
        return (2.0 * vals[0] - 5.0 * vals[1] + 4.0 * vals[2] - vals[3]) / h**2

    up = one_sided_2nd(line[c : c + 4])
    lo = one_sided_2nd(line[c::-1][:4])
    mixed_u = np.empty(n - 1)
    mixed_l = np.empty(n - 1)
    for a in range(n - 1):
        idx_p = [c] * (n - 1)
        idx_m = [c] * (n - 1)
        idx_p[a] += 1
        idx_m[a] -= 1
        dalpha = (U[tuple(idx_p)] - U[tuple(idx_m)]) / (2 * h)  # line along y_n
        mixed_u[a] = (-3.0 * dalpha[c] + 4.0 * dalpha[c + 1] - dalpha[c + 2]) / (2 * h)
        mixed_l[a] = (3.0 * dalpha[c] - 4.0 * dalpha[c - 1] + dalpha[c - 2]) / (2 * h)
    return MatchingResult(float(up), float(lo), float(abs(up - lo)), mixed_u, mixed_l, np.abs(mixed_u - mixed_l))


def matching_convergence(profile: SchwarzschildProfile, steps: Sequence[float] = (1e-1, 5e-2, 2.5e-2)):
    """Errors of the one-sided u_nn estimates against the exact value, plus jumps and order.

    Errors at roundoff level give an infinite observed order (the stencil is exact).
    """
    exact = float(profile.d2rho(0.0))
    errs, jumps = [], []
    for h in steps:
        res = second_derivative_matching(build_doubled_chart(profile, 3.0 * h, h))
        errs.append(float(max(abs(res.upper - exact), abs(res.lower - exact))))
        jumps.append(res.jump)
    floor = 1e-9 * max(abs(exact), 1.0)
    if errs[-1] <= floor:
        order = math.inf
    else:
        order = math.log(errs[-2] / errs[-1]) / math.log(steps[-2] / steps[-1])
    return {"exact": exact, "steps": list(steps), "errors": errs, "jumps": jumps, "order": order}


@dataclass
class DecompositionTerms:
    D: float
    E: float
    F: float
    u_nn: float
    residual: float
    sum_alpha: float
    hazard: bool

    def to_dict(self):
        return asdict(self)


def _s2_mixed(B, C):
    n = B.shape[0]
    tot = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            tot += B[i, i] * C[j, j] + B[j, j] * C[i, i] - B[i, j] * (C[i, j] + C[j, i])
    return tot


def decomposition_from_jet(grad, hess) -> DecompositionTerms:
    """D, E, F with D u_nn + E + F = S_2 of the chart shape operator."""
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    n = grad.size
    W2 = 1.0 + grad @ grad
    W = math.sqrt(W2)
    B = hess / W
    C = -np.outer(grad, hess @ grad) / W**3
    al = slice(0, n - 1)
    s_alpha = float(np.trace(hess[al, al]))
    D = s_alpha / W2
    Bt = B[al, al]
    tang_minors = 0.0
    for a in range(n - 1):
        for b in range(a + 1, n - 1):
            tang_minors += Bt[a, a] * Bt[b, b] - Bt[a, b] ** 2
    E = -float(np.sum(hess[al, n - 1] ** 2)) / W2 + tang_minors
    F = _s2_mixed(B, C) + (elementary_symmetric(C, 2) if n >= 2 else 0.0)
    u_nn = float(hess[-1, -1])
    return DecompositionTerms(float(D), float(E), float(F), u_nn, float(D * u_nn + E + F), s_alpha, bool(abs(D) < D_HAZARD))


def decomposition_terms(chart: HorizonChart, y=None, index=None, closed_form: bool = True) -> DecompositionTerms:
    """Evaluate the decomposition at a chart point (default: the base point)."""
    if closed_form and chart.profile is not None:
        if y is None:
            y = np.zeros(chart.n) if index is None else chart.axis[list(index)]
        grad, hess = chart.jet(y)
    else:
        if index is None:
            index = (chart.center_index,) * chart.n
        grad, hess = chart.fd_jet(index)
    return decomposition_from_jet(grad, hess)


def solved_unn(terms: DecompositionTerms) -> float:
    if terms.hazard:
        return math.nan
    return -(terms.E + terms.F) / terms.D
