"""Schwarzschild graphs and the radial scalar-flat ODE.

The Schwarzschild profile u solves (u')^2 (r^{n-2} - 2m) = 2m with u(r_m) = 0.
Closed forms exist for n = 3, 4; for n >= 5 the height is obtained by quadrature
after the substitution r = r_m + t^2, which removes the square-root singularity.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate, optimize
from scipy.special import comb

from .graphs import DomainError, RadialGraph, profile_to_radial_parts

NEAR_HORIZON_RTOL = 1e-8


class IntegrationError(RuntimeError):
    def __init__(self, message, last_r=None, last_state=None):
        super().__init__(message)
        self.last_r = last_r
        self.last_state = last_state


def horizon_radius(n: int, m: float) -> float:
    if n < 3 or not m > 0:
        raise DomainError(f"need n >= 3 and m > 0 (got n={n}, m={m})")
    return (2.0 * m) ** (1.0 / (n - 2))


class ProfileJet(NamedTuple):
    u: float
    du: float
    d2u: float
    singular: bool = False


@dataclass(frozen=True)
class SchwarzschildProfile:
    n: int
    m: float
    r_m: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "r_m", horizon_radius(self.n, self.m))

    # --- derivatives in closed form -------------------------------------
    def du(self, r):
        r = np.asarray(r, dtype=float)
        return np.sqrt(2.0 * self.m / (r ** (self.n - 2) - 2.0 * self.m))

    def d2u(self, r):
        r = np.asarray(r, dtype=float)
        n, m = self.n, self.m
        q = r ** (n - 2) - 2.0 * m
        return -(n - 2) * r ** (n - 3) * math.sqrt(2.0 * m) / (2.0 * q**1.5)

    def d3u(self, r):
        r = np.asarray(r, dtype=float)
        n, m = self.n, self.m
        q = r ** (n - 2) - 2.0 * m
        k = -0.5 * (n - 2) * math.sqrt(2.0 * m)
        return k * ((n - 3) * r ** (n - 4.0) * q**-1.5 - 1.5 * (n - 2) * r ** (2 * n - 6.0) * q**-2.5)

    # --- height ---------------------------------------------------------
    def _tail_poly(self, t):
        # ((r_m + t^2)^{n-2} - r_m^{n-2}) / t^2, expanded to avoid cancellation
        k = self.n - 2
        t2 = t * t
        acc = 0.0
        for j in range(k, 0, -1):
            acc = acc * t2 + comb(k, j, exact=True) * self.r_m ** (k - j)
        return acc

    def _height_in_s(self, s: float) -> float:
        """u(r_m + s^2) by quadrature of the desingularized integrand."""
        if s <= 0.0:
            return 0.0
        c = 2.0 * math.sqrt(2.0 * self.m)
        f = lambda t: c / math.sqrt(self._tail_poly(t))
        val, _ = integrate.quad(f, 0.0, s, epsabs=1e-14, epsrel=1e-13, limit=200)
        return val

    def u(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r_m):
            raise DomainError("radius inside the horizon")
        n, m = self.n, self.m
        if n == 3:
            return 2.0 * np.sqrt(2.0 * m) * np.sqrt(r - 2.0 * m)
        if n == 4:
            a = math.sqrt(2.0 * m)
            return a * np.arccosh(np.maximum(r / a, 1.0))
        flat = np.array([self._height_in_s(math.sqrt(max(x - self.r_m, 0.0))) for x in r.ravel()])
        return flat.reshape(r.shape) if r.ndim else float(flat[0])

    # --- inverse of the height: doubled-profile radius rho(t) -------------
    def rho(self, t):
        """Radius on the evenly reflected profile at signed height t."""
        t = np.abs(np.asarray(t, dtype=float))
        n, m = self.n, self.m
        if n == 3:
            return 2.0 * m + t**2 / (8.0 * m)
        if n == 4:
            a = math.sqrt(2.0 * m)
            return a * np.cosh(t / a)
        out = np.array([self._rho_scalar(float(x)) for x in t.ravel()])
        return out.reshape(t.shape) if t.ndim else float(out[0])

    @lru_cache(maxsize=4096)
    def _rho_scalar(self, t: float) -> float:
        if t == 0.0:
            return self.r_m
        hi = 1.0
        while self._height_in_s(hi) < t:
            hi *= 2.0
        s = optimize.brentq(lambda s: self._height_in_s(s) - t, 0.0, hi, xtol=1e-15, maxiter=200)
        return self.r_m + s * s

    def drho(self, t):
        t = np.asarray(t, dtype=float)
        rho = self.rho(t)
        return np.sign(t) * np.sqrt(np.maximum(rho ** (self.n - 2) - 2.0 * self.m, 0.0) / (2.0 * self.m))

    def d2rho(self, t):
        rho = self.rho(t)
        return (self.n - 2) * rho ** (self.n - 3) / (4.0 * self.m)


def profile_jet(p: SchwarzschildProfile, r: float, singular: bool = False) -> ProfileJet:
    """(u, u', u'') at radius r; at r = r_m the derivatives are flagged infinite."""
    if r < p.r_m:
        raise DomainError(f"r={r} is inside the horizon r_m={p.r_m}")
    if r == p.r_m:
        return ProfileJet(0.0, math.inf, -math.inf, True)
    return ProfileJet(float(p.u(r)), float(p.du(r)), float(p.d2u(r)), False)


class SchwarzschildGraph(RadialGraph):
    def __init__(self, n: int, m: float):
        self.p = SchwarzschildProfile(n, m)
        self.dim = n
        self.m = m
        self.horizon_radius = self.p.r_m
        self.inner_radius = self.p.r_m * (1.0 + NEAR_HORIZON_RTOL)

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return self.p.u(r), self.p.du(r), self.p.d2u(r), self.p.d3u(r)

    def radial_parts(self, r):
        p = self.p
        return profile_to_radial_parts(r, p.du(r), p.d2u(r), p.d3u(r))


def graph_jet(p: SchwarzschildProfile, x):
    """Jet of f(x) = u(|x|) to third order."""
    return SchwarzschildGraph(p.n, p.m).jet(x, third=True)


def scalar_flat_rhs(n: int):
    """Right-hand side of the rotational reduction of S_2 = 0 for state (u, u')."""

    def rhs(r, y):
        up = y[1]
        return [up, -0.5 * (n - 2) * up * (1.0 + up * up) / r]

    return rhs


@dataclass
class RadialProfileTable:
    r_values: np.ndarray
    u: np.ndarray
    u_prime: np.ndarray
    u_double_prime: np.ndarray
    provenance: str
    n: int = 0
    matched_mass: Optional[float] = None
    orientation: int = 1
    height_offset: float = 0.0
    classification: str = ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "u", "u_prime", "u_double_prime"])
        for row in zip(self.r_values, self.u, self.u_prime, self.u_double_prime):
            w.writerow([format(float(v), ".17g") for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, provenance: str = "closed_form") -> "RadialProfileTable":
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(v) for v in row] for row in rows[1:]])
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3], provenance)


def tabulate_profile(p: SchwarzschildProfile, r_values) -> RadialProfileTable:
    r = np.asarray(r_values, dtype=float)
    prov = "closed_form" if p.n in (3, 4) else "quadrature"
    return RadialProfileTable(r, np.asarray(p.u(r)), p.du(r), p.d2u(r), prov, n=p.n, matched_mass=p.m)


def solve_radial_scalar_flat(
    n: int,
    r0: float,
    u0: float,
    up0: float,
    r_span,
    rtol: float = 1e-12,
    atol: float = 1e-13,
    num: int = 200,
) -> RadialProfileTable:
    """Integrate the radial scalar-flat ODE and identify the family member.

    The solution with u'(r0) = up0 != 0 belongs to the Schwarzschild family with
    m = up0^2 r0^{n-2} / (2 (1 + up0^2)), up to reflection and vertical shift.
    """
    if not r0 > 0 or not math.isfinite(up0):
        raise ValueError("need r0 > 0 and finite initial slope")
    r_end = float(r_span[1]) if np.ndim(r_span) else float(r_span)
    r_eval = np.linspace(r0, r_end, num)
    rhs = scalar_flat_rhs(n)
    sol = integrate.solve_ivp(rhs, (r0, r_end), [u0, up0], method="DOP853", t_eval=r_eval, rtol=rtol, atol=atol)
    if not sol.success or not np.all(np.isfinite(sol.y)):
        last = sol.t[-1] if sol.t.size else r0
        state = sol.y[:, -1] if sol.t.size else np.array([u0, up0])
        raise IntegrationError(f"integration failed: {sol.message}", last, state)
    u, up = sol.y
    upp = np.array([rhs(r, [0.0, s])[1] for r, s in zip(sol.t, up)])
    table = RadialProfileTable(sol.t, u, up, upp, "ode", n=n)
    if up0 == 0.0:
        table.classification = "flat"
        table.matched_mass = 0.0
        table.height_offset = u0
        return table
    mass = up0**2 * r0 ** (n - 2) / (2.0 * (1.0 + up0**2))
    member = SchwarzschildProfile(n, mass)
    sign = 1 if up0 > 0 else -1
    table.matched_mass = mass
    table.orientation = sign
    table.height_offset = float(u0 - sign * member.u(r0))
    table.classification = "schwarzschild"
    return table
