"""Pointwise extrinsic geometry of graph hypersurfaces in R^{n+1}.

Everything here is computed from jets of the height function ``f`` with the
unit normal chosen to point upward (positive vertical component).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import _kernels

CLASSIFY_TOL = 1e-10
RANK_RTOL = 1e-10


class InvalidJetError(ValueError):
    pass


class Ellipticity(str, Enum):
    POSITIVE = "elliptic_positive"
    NEGATIVE = "elliptic_negative"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class Jet:
    """Derivatives of a graph function at one point (third order optional)."""

    grad: np.ndarray
    hess: np.ndarray
    third: Optional[np.ndarray] = None
    value: Optional[float] = None

    def __post_init__(self):
        grad = np.asarray(self.grad, dtype=float).reshape(-1)
        hess = np.asarray(self.hess, dtype=float)
        n = grad.shape[0]
        if n < 2 or hess.shape != (n, n):
            raise InvalidJetError(f"inconsistent jet shapes {grad.shape}, {hess.shape}")
        if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))):
            raise InvalidJetError("jet contains non-finite entries")
        object.__setattr__(self, "grad", grad)
        object.__setattr__(self, "hess", 0.5 * (hess + hess.T))
        if self.third is not None:
            third = np.asarray(self.third, dtype=float)
            if third.shape != (n, n, n) or not np.all(np.isfinite(third)):
                raise InvalidJetError("bad third-derivative array")
            object.__setattr__(self, "third", third)

    @property
    def dim(self) -> int:
        return self.grad.shape[0]

    @classmethod
    def flat(cls, n: int) -> "Jet":
        return cls(np.zeros(n), np.zeros((n, n)), np.zeros((n, n, n)), 0.0)


@dataclass(frozen=True)
class ShapeData:
    W: float
    theta: float
    metric: np.ndarray
    metric_inv: np.ndarray
    shape: np.ndarray
    sym_funcs: np.ndarray  # S_0 .. S_n, S_0 = 1
    eigenvalues: np.ndarray
    newton: np.ndarray
    rank: int
    ellipticity: Ellipticity

    @property
    def dim(self) -> int:
        return self.shape.shape[0]

    def S(self, k: int) -> float:
        return float(self.sym_funcs[k])

    @property
    def scalar_curvature(self) -> float:
        # Gauss equation for a Euclidean hypersurface
        return 2.0 * float(self.sym_funcs[2])


@dataclass(frozen=True)
class TangentialField:
    x_components: np.ndarray
    gx_components: np.ndarray
    norm_g: float


@dataclass(frozen=True)
class EllipticityReport:
    classification: Ellipticity
    newton_eigenvalues: np.ndarray
    s3: float
    rank: int
    sign_pattern: tuple = field(default_factory=tuple)


def elementary_symmetric(matrix, k: int) -> float:
    """k-th coefficient (with sign) of the characteristic polynomial of ``matrix``.

    Equivalently the sum of principal k-minors, or e_k of the eigenvalues.
    """
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    n = M.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    return float(_kernels.symmetric_functions(M[None])[0, k])


def matrix_rank(A, rtol: float = RANK_RTOL) -> int:
    sv = np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def _classify(newton_eigs, tol):
    if np.all(newton_eigs > tol):
        return Ellipticity.POSITIVE
    if np.all(newton_eigs < -tol):
        return Ellipticity.NEGATIVE
    return Ellipticity.DEGENERATE


def _symmetric_form(grad, hess, W):
    # g^{-1/2} hess g^{-1/2} / W has the same spectrum as A and is symmetric
    p2 = grad @ grad
    if p2 == 0.0:
        root = np.eye(grad.size)
    else:
        root = np.eye(grad.size) - (1.0 - 1.0 / W) * np.outer(grad, grad) / p2
    return root @ hess @ root / W


def shape_data(jet: Jet, tol: float = CLASSIFY_TOL) -> ShapeData:
    """Metric, shape operator and curvature functions of the graph at one point."""
    if not isinstance(jet, Jet):
        jet = Jet(*jet)
    p, H = jet.grad, jet.hess
    n = jet.dim
    W_arr, A_arr = _kernels.shape_operator(p[None], H[None])
    W = float(W_arr[0])
    A = A_arr[0]
    S = _kernels.symmetric_functions(A_arr)[0]
    metric = np.eye(n) + np.outer(p, p)
    metric_inv = np.eye(n) - np.outer(p, p) / (W * W)
    eigs = np.linalg.eigvalsh(_symmetric_form(p, H, W))
    newton = S[1] * np.eye(n) - A
    return ShapeData(
        W=W,
        theta=1.0 / W,
        metric=metric,
        metric_inv=metric_inv,
        shape=A,
        sym_funcs=S,
        eigenvalues=eigs,
        newton=newton,
        rank=matrix_rank(A),
        ellipticity=_classify(S[1] - eigs, tol),
    )


def shape_data_from_operator(A, tol: float = CLASSIFY_TOL) -> ShapeData:
    """ShapeData for a point whose tangent plane is horizontal and shape operator is ``A``.

    Useful for sampling abstract curvature configurations; ``A`` must be symmetric.
    """
    A = np.asarray(A, dtype=float)
    return shape_data(Jet(np.zeros(A.shape[0]), 0.5 * (A + A.T)), tol=tol)


def ellipticity_classify(sd: ShapeData, tol: float = CLASSIFY_TOL) -> EllipticityReport:
    """Classify by the sign pattern of the Newton tensor eigenvalues S_1 - lambda_i."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    g_eigs = np.sort(sd.S(1) - sd.eigenvalues)
    pattern = tuple(int(np.sign(v)) if abs(v) > tol else 0 for v in g_eigs)
    return EllipticityReport(
        classification=_classify(g_eigs, tol),
        newton_eigenvalues=g_eigs,
        s3=sd.S(3) if sd.dim >= 3 else 0.0,
        rank=sd.rank,
        sign_pattern=pattern,
    )


def tangential_field(jet: Jet, sd: ShapeData) -> TangentialField:
    """Tangential part X of the vertical unit vector and the field G(A)X."""
    X = sd.metric_inv @ jet.grad
    GX = sd.newton @ X
    norm2 = float(X @ sd.metric @ X)
    return TangentialField(x_components=X, gx_components=GX, norm_g=float(np.sqrt(max(norm2, 0.0))))


def jacobi_coefficients(sd: ShapeData):
    """(principal coefficient G(A), zeroth-order coefficient -3 S_3) of the Jacobi operator."""
    s3 = sd.S(3) if sd.dim >= 3 else 0.0
    return sd.newton.copy(), -3.0 * s3


def batch_geometry(grad, hess):
    """Vectorized (W, A, S) over stacks of jets; S has columns S_0..S_n."""
    W, A = _kernels.shape_operator(grad, hess)
    return W, A, _kernels.symmetric_functions(A)


def batch_s2(grad, hess):
    """(W, S_2) over stacks of jets, skipping the higher symmetric functions."""
    W, A = _kernels.shape_operator(grad, hess)
    return W, _kernels.second_symmetric(A)


def principal_curvatures_batch(grad, hess):
    """Ascending principal curvatures for stacked jets via the symmetric form."""
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    p2 = np.einsum("ki,ki->k", grad, grad)
    W = np.sqrt(1.0 + p2)
    coef = np.divide(1.0 - 1.0 / W, p2, out=np.zeros_like(p2), where=p2 > 0)
    root = np.eye(grad.shape[1])[None] - coef[:, None, None] * grad[:, :, None] * grad[:, None, :]
    return np.linalg.eigvalsh(root @ hess @ root / W[:, None, None])


def newton_field_batch(grad, A, S):
    """Coordinate components of X and of G(A)X for stacked points."""
    w2 = 1.0 + np.einsum("ki,ki->k", grad, grad)
    X = grad / w2[:, None]
    GX = S[:, 1, None] * X - np.einsum("kij,kj->ki", A, X)
    return X, GX


def sample_s2_zero_operators(n: int, count: int, rng, degenerate_fraction: float = 0.1) -> np.ndarray:
    """Random symmetric n x n matrices with S_2 = 0.

    Generic samples draw n-1 eigenvalues and solve the last one from the linear
    condition S_2 = 0; a fraction are rank-one (one nonzero eigenvalue), the
    degenerate branch of the ellipticity equivalences.
    """
    lam = rng.normal(size=(count, n))
    e1 = lam[:, :-1].sum(axis=1)
    e2 = 0.5 * (e1**2 - (lam[:, :-1] ** 2).sum(axis=1))
    ok = np.abs(e1) > 1e-3
    lam[:, -1] = np.where(ok, -e2 / np.where(ok, e1, 1.0), 0.0)
    lam[~ok] = 0.0
    lam[~ok, 0] = 1.0
    rank1 = rng.random(count) < degenerate_fraction
    lam[rank1] = 0.0
    lam[rank1, 0] = rng.normal(size=int(rank1.sum())) * 3.0
    Q, R = np.linalg.qr(rng.normal(size=(count, n, n)))
    Q = Q * np.sign(np.einsum("kii->ki", R))[:, None, :]
    return np.einsum("kij,kj,klj->kil", Q, lam, Q)


def equivalence_violations(A, guard: float = 1e-12, tol: float = CLASSIFY_TOL) -> dict:
    """Count disagreements among S_3 != 0, rank >= 2 and definiteness of G(A).

    ``A`` is a stack of symmetric matrices with S_2 = 0.
    """
    A = np.asarray(A, dtype=float)
    S = _kernels.symmetric_functions(A)
    eigs = np.linalg.eigvalsh(A)
    sv = np.linalg.svd(A, compute_uv=False)
    rank = np.sum(sv > RANK_RTOL * np.maximum(sv[:, :1], np.finfo(float).tiny), axis=1)
    g = S[:, 1, None] - eigs
    definite = np.all(g > tol, axis=1) | np.all(g < -tol, axis=1)
    s3 = np.abs(S[:, 3]) > guard if A.shape[1] >= 3 else np.zeros(len(A), bool)
    high_rank = rank >= 2
    return {
        "samples": int(len(A)),
        "s3_vs_rank": int(np.sum(s3 != high_rank)),
        "rank_vs_definite": int(np.sum(high_rank != definite)),
        "s3_vs_definite": int(np.sum(s3 != definite)),
        "degenerate": int(np.sum(~high_rank)),
    }
