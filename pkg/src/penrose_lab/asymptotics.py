"""End expansions of radial scalar-flat graphs and the decay of their derivatives."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence

import numpy as np

from .graphs import radial_derivatives
from .quadrature import default_shell_order, sphere_rule

WINDOW = (20.0, 200.0)
DECAY_CHUNK = 8192


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ExpansionFit:
    n: int
    a: float
    a1: float
    a2_or_c: float
    residual: float
    basis: str

    def to_dict(self):
        return asdict(self)


def remainder_exponent(n: int) -> float:
    """Order of the first term dropped from the radial expansion."""
    if n == 3:
        return -1.5
    if n == 4:
        return -2.0
    return 4.0 - 1.5 * n


def _basis(n: int, r, remainder: bool):
    if n == 3:
        name, cols = "sqrt", [np.sqrt(r), np.ones_like(r), 1.0 / np.sqrt(r)]
    elif n == 4:
        name, cols = "log", [np.log(r), np.ones_like(r)]
    elif n >= 5:
        name, cols = "power", [r ** (2.0 - n / 2.0), np.ones_like(r)]
    else:
        raise FitError("expansions are defined for n >= 3")
    if remainder:
        cols.append(r ** remainder_exponent(n))
    return name, np.column_stack(cols)


def fit_expansion(r, v, n: int, remainder: bool = True, cond_max: float = 1e12) -> ExpansionFit:
    """Least-squares fit of radial end data to the leading terms of its expansion.

    With ``remainder`` the first dropped power is fitted as a nuisance column, which
    removes most of the truncation bias from the constant and subleading terms.
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    if r.size < 8 or r.size != v.size:
        raise FitError("need at least 8 samples")
    name, V = _basis(n, r, remainder)
    # column scaling keeps the conditioning estimate meaningful
    scale = np.linalg.norm(V, axis=0)
    Vs = V / scale
    if np.linalg.cond(Vs) > cond_max:
        raise FitError("ill-conditioned basis on this window")
    coef, *_ = np.linalg.lstsq(Vs, v, rcond=None)
    coef = coef / scale
    resid = float(np.max(np.abs(V @ coef - v)))
    a2 = float(coef[2]) if n == 3 else 0.0
    return ExpansionFit(n, float(coef[0]), float(coef[1]), a2, resid, name)


def mass_from_tail(fit: ExpansionFit) -> float:
    """Mass determined by the leading coefficient of the end expansion."""
    n, a = fit.n, fit.a
    if n < 3:
        raise ValueError("n must be at least 3")
    if n == 3:
        return a * a / 8.0
    if n == 4:
        return a * a / 2.0
    return a * a * (n - 4) ** 2 / 8.0


def expected_leading_coefficient(n: int, m: float) -> float:
    if n == 3:
        return math.sqrt(8.0 * m)
    if n == 4:
        return math.sqrt(2.0 * m)
    return -2.0 * math.sqrt(2.0 * m) / (n - 4)


def profile_tail_samples(profile, window=WINDOW, count: int = 16):
    r = profile.r_m * np.geomspace(window[0], window[1], count)
    return r, np.asarray(profile.u(r), dtype=float)


# ---------------------------------------------------------------- decay


@dataclass(frozen=True)
class DecayRow:
    r: float
    grad: float
    hess: float
    third: float


def decay_check(graph, radii: Sequence[float], order: Optional[int] = None):
    """Sup over sphere samples of r^{n/2-1}|df|, r^{n/2}|d2f|, r^{n/2+1}|d3f| (Frobenius)."""
    n = graph.dim
    u, _ = sphere_rule(n, order or default_shell_order(n))
    rows: List[DecayRow] = []
    for r in radii:
        sup = np.zeros(3)
        # chunked: the third-derivative stack grows like n^3 per node
        for i in range(0, u.shape[0], DECAY_CHUNK):
            g, h, t = graph.derivatives(r * u[i : i + DECAY_CHUNK], third=True)
            sup = np.maximum(sup, [
                np.max(np.linalg.norm(g, axis=1)),
                np.max(np.sqrt(np.einsum("kij,kij->k", h, h))),
                np.max(np.sqrt(np.einsum("kijl,kijl->k", t, t))),
            ])
        rows.append(
            DecayRow(float(r), float(r ** (n / 2 - 1) * sup[0]), float(r ** (n / 2) * sup[1]), float(r ** (n / 2 + 1) * sup[2]))
        )
    first, last = rows[0], rows[-1]
    growing = any(getattr(last, f) > 1.1 * getattr(first, f) + 1e-300 for f in ("grad", "hess", "third"))
    return rows, growing


def decay_limits(n: int, m: float):
    """Limits of the decay quantities for a Schwarzschild end (power-law tail of u')."""
    c = math.sqrt(2.0 * m)
    k = (n - 2) / 2.0
    psi = np.array([c])
    chi = np.array([-(k + 1) * c])
    omega = np.array([(k + 1) * (k + 3) * c])
    x = np.zeros((1, n))
    x[0, 0] = 1.0
    g, h, t = radial_derivatives(x, psi, chi, omega)
    return float(np.linalg.norm(g)), float(np.linalg.norm(h)), float(np.linalg.norm(t))


def decay_csv(rows: Sequence[DecayRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "grad", "hess", "third"])
    for row in rows:
        w.writerow([format(v, ".17g") for v in (row.r, row.grad, row.hess, row.third)])
    return buf.getvalue()
