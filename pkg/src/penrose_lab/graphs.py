"""Height functions f: R^n -> R whose graphs are the hypersurfaces under study.

A graph evaluates stacked derivatives on arrays of points of shape (N, n).
"""
from __future__ import annotations

import numpy as np

from .geometry import Jet


class DomainError(ValueError):
    pass


class GraphFunction:
    dim: int
    inner_radius: float = 0.0
    outer_radius: float = np.inf

    def _check(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise DomainError(f"expected points in R^{self.dim}, got shape {pts.shape}")
        r = np.linalg.norm(pts, axis=1)
        if np.any(r <= self.inner_radius) or np.any(r >= self.outer_radius):
            raise DomainError(
                f"points outside the graph domain ({self.inner_radius:g} < |x| < {self.outer_radius:g})"
            )
        return pts

    def value(self, points) -> np.ndarray:
        raise NotImplementedError

    def derivatives(self, points, third: bool = False):
        """Return (grad (N,n), hess (N,n,n), third (N,n,n,n) or None)."""
        raise NotImplementedError

    def jet(self, x, third: bool = True) -> Jet:
        x = np.asarray(x, dtype=float)
        g, h, t = self.derivatives(x[None], third=third)
        return Jet(g[0], h[0], None if t is None else t[0], float(self.value(x[None])[0]))


class FlatGraph(GraphFunction):
    def __init__(self, n: int, height: float = 0.0):
        self.dim = n
        self.height = float(height)

    def value(self, points):
        return np.full(self._check(points).shape[0], self.height)

    def derivatives(self, points, third=False):
        N, n = self._check(points).shape
        return np.zeros((N, n)), np.zeros((N, n, n)), (np.zeros((N, n, n, n)) if third else None)


def radial_derivatives(pts, psi, chi, omega=None):
    """Derivatives of f(x) = u(|x|) from psi = u'/r, chi = psi'/r, omega = chi'/r."""
    N, n = pts.shape
    eye = np.eye(n)
    grad = pts * psi[:, None]
    xx = pts[:, :, None] * pts[:, None, :]
    hess = psi[:, None, None] * eye + chi[:, None, None] * xx
    if omega is None:
        return grad, hess, None
    dx = eye[None, :, :, None] * pts[:, None, None, :]
    sym = dx + np.swapaxes(dx, 2, 3) + np.moveaxis(dx, 3, 1)
    xxx = xx[:, :, :, None] * pts[:, None, None, :]
    third = chi[:, None, None, None] * sym + omega[:, None, None, None] * xxx
    return grad, hess, third


def profile_to_radial_parts(r, u1, u2, u3):
    """Convert u', u'', u''' at radius r > 0 into (psi, chi, omega)."""
    psi = u1 / r
    a = u2 - u1 / r
    chi = a / r**2
    dchi = (u3 - u2 / r + u1 / r**2) / r**2 - 2.0 * a / r**3
    return psi, chi, dchi / r


class RadialGraph(GraphFunction):
    """f(x) = u(|x|); subclasses provide the profile."""

    def profile(self, r):
        """Return (u, u', u'', u''') as arrays."""
        raise NotImplementedError

    def radial_parts(self, r):
        _, u1, u2, u3 = self.profile(r)
        return profile_to_radial_parts(r, u1, u2, u3)

    def value(self, points):
        pts = self._check(points)
        return self.profile(np.linalg.norm(pts, axis=1))[0]

    def derivatives(self, points, third=False):
        pts = self._check(points)
        psi, chi, omega = self.radial_parts(np.linalg.norm(pts, axis=1))
        return radial_derivatives(pts, psi, chi, omega if third else None)


class HemisphereGraph(RadialGraph):
    """Upper hemisphere f = sqrt(R^2 - |x|^2) over the open ball of radius R."""

    def __init__(self, n: int, radius: float = 1.0):
        self.dim = n
        self.radius = float(radius)
        self.inner_radius = -1.0
        self.outer_radius = self.radius

    def profile(self, r):
        q = self.radius**2 - r**2
        s = np.sqrt(q)
        return s, -r / s, -self.radius**2 / s**3, -3.0 * self.radius**2 * r / s**5

    def radial_parts(self, r):
        q = self.radius**2 - r**2
        return -(q**-0.5), -(q**-1.5), -3.0 * q**-2.5


class ScaledGraph(GraphFunction):
    """Homothety x -> lam x, f -> lam f of another graph."""

    def __init__(self, base: GraphFunction, lam: float):
        self.base = base
        self.lam = float(lam)
        self.dim = base.dim
        self.inner_radius = self.lam * base.inner_radius
        self.outer_radius = self.lam * base.outer_radius
        if hasattr(base, "horizon_radius"):
            self.horizon_radius = self.lam * base.horizon_radius

    def value(self, points):
        return self.lam * self.base.value(self._check(points) / self.lam)

    def derivatives(self, points, third=False):
        g, h, t = self.base.derivatives(self._check(points) / self.lam, third=third)
        return g, h / self.lam, (None if t is None else t / self.lam**2)
