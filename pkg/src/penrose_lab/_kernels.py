"""Batched pointwise kernels: shape operators and symmetric functions.

Two implementations live side by side. The numba path compiles explicit loops;
the numpy path is a vectorized fallback. ``PENROSE_LAB_NUMBA=0`` forces the
fallback (also used automatically when numba cannot be imported).
"""
from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("PENROSE_LAB_NUMBA", "1") not in ("0", "false", "no")


def shape_operator_numpy(grad, hess):
    """Return (W, A) for stacked jets; grad is (N, n), hess is (N, n, n)."""
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    w2 = 1.0 + np.einsum("ki,ki->k", grad, grad)
    W = np.sqrt(w2)
    hp = np.einsum("kij,kj->ki", hess, grad)
    B = hess / W[:, None, None]
    C = -grad[:, :, None] * hp[:, None, :] / (W**3)[:, None, None]
    return W, B + C


def symmetric_functions_numpy(A):
    """S_0..S_n of each matrix in a (N, n, n) stack via Newton's identities."""
    A = np.asarray(A, dtype=float)
    N, n, _ = A.shape
    power = np.empty((N, n + 1))
    P = A.copy()
    for k in range(1, n + 1):
        power[:, k] = np.einsum("kii->k", P)
        if k < n:
            P = P @ A
    S = np.zeros((N, n + 1))
    S[:, 0] = 1.0
    for k in range(1, n + 1):
        acc = np.zeros(N)
        sign = 1.0
        for i in range(1, k + 1):
            acc += sign * S[:, k - i] * power[:, i]
            sign = -sign
        S[:, k] = acc / k
    return S


def second_symmetric_numpy(A):
    """S_2 = (tr(A)^2 - tr(A^2)) / 2 for each matrix in the stack."""
    A = np.asarray(A, dtype=float)
    tr = np.einsum("kii->k", A)
    return 0.5 * (tr * tr - np.einsum("kij,kji->k", A, A))


def _shape_operator_loops(grad, hess):
    N, n = grad.shape
    W = np.empty(N)
    A = np.empty((N, n, n))
    hp = np.empty(n)
    for k in range(N):
        w2 = 1.0
        for i in range(n):
            w2 += grad[k, i] * grad[k, i]
        w = np.sqrt(w2)
        W[k] = w
        for j in range(n):
            s = 0.0
            for l in range(n):
                s += hess[k, j, l] * grad[k, l]
            hp[j] = s
        w3 = w2 * w
        for i in range(n):
            for j in range(n):
                A[k, i, j] = hess[k, i, j] / w - grad[k, i] * hp[j] / w3
    return W, A


def _symmetric_functions_loops(A):
    N, n, _ = A.shape
    S = np.zeros((N, n + 1))
    power = np.empty(n + 1)
    P = np.empty((n, n))
    Q = np.empty((n, n))
    for k in range(N):
        for i in range(n):
            for j in range(n):
                P[i, j] = A[k, i, j]
        for p in range(1, n + 1):
            tr = 0.0
            for i in range(n):
                tr += P[i, i]
            power[p] = tr
            if p < n:
                for i in range(n):
                    for j in range(n):
                        s = 0.0
                        for l in range(n):
                            s += P[i, l] * A[k, l, j]
                        Q[i, j] = s
                for i in range(n):
                    for j in range(n):
                        P[i, j] = Q[i, j]
        S[k, 0] = 1.0
        for p in range(1, n + 1):
            acc = 0.0
            sign = 1.0
            for i in range(1, p + 1):
                acc += sign * S[k, p - i] * power[i]
                sign = -sign
            S[k, p] = acc / p
    return S


def _second_symmetric_loops(A):
    N, n, _ = A.shape
    out = np.empty(N)
    for k in range(N):
        tr = 0.0
        tr2 = 0.0
        for i in range(n):
            tr += A[k, i, i]
            for j in range(n):
                tr2 += A[k, i, j] * A[k, j, i]
        out[k] = 0.5 * (tr * tr - tr2)
    return out


if numba is not None:
    second_symmetric_numba = numba.njit(cache=True, nogil=True)(_second_symmetric_loops)
    shape_operator_numba = numba.njit(cache=True, nogil=True)(_shape_operator_loops)
    symmetric_functions_numba = numba.njit(cache=True, nogil=True)(_symmetric_functions_loops)
else:  # pragma: no cover
    shape_operator_numba = None
    symmetric_functions_numba = None
    second_symmetric_numba = None


def shape_operator(grad, hess):
    if USE_NUMBA:
        return shape_operator_numba(
            np.ascontiguousarray(grad, dtype=np.float64), np.ascontiguousarray(hess, dtype=np.float64)
        )
    return shape_operator_numpy(grad, hess)


def symmetric_functions(A):
    if USE_NUMBA:
        return symmetric_functions_numba(np.ascontiguousarray(A, dtype=np.float64))
    return symmetric_functions_numpy(A)


def second_symmetric(A):
    if USE_NUMBA:
        return second_symmetric_numba(np.ascontiguousarray(A, dtype=np.float64))
    return second_symmetric_numpy(A)
