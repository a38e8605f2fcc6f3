import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from penrose_lab import _kernels as K

numba_only = pytest.mark.skipif(K.shape_operator_numba is None, reason="numba not importable")


def random_jets(rng, N, n):
    grad = rng.normal(size=(N, n))
    hess = rng.normal(size=(N, n, n))
    return grad, 0.5 * (hess + hess.transpose(0, 2, 1))


@numba_only
@pytest.mark.parametrize("n", [2, 3, 5, 7])
def test_shape_operator_paths_agree(n):
    grad, hess = random_jets(np.random.default_rng(n), 200, n)
    W1, A1 = K.shape_operator_numpy(grad, hess)
    W2, A2 = K.shape_operator_numba(grad, hess)
    assert np.allclose(W1, W2, rtol=1e-15, atol=0)
    assert np.allclose(A1, A2, rtol=1e-12, atol=1e-14)


@numba_only
@pytest.mark.parametrize("n", [2, 3, 5, 7])
def test_symmetric_function_paths_agree(n):
    A = np.random.default_rng(10 + n).normal(size=(200, n, n))
    S1 = K.symmetric_functions_numpy(A)
    S2 = K.symmetric_functions_numba(A)
    assert np.allclose(S1, S2, rtol=1e-10, atol=1e-10)
    assert np.allclose(K.second_symmetric_numpy(A), K.second_symmetric_numba(A), rtol=1e-13, atol=1e-13)
    assert np.allclose(S1[:, 2], K.second_symmetric_numpy(A), rtol=1e-10, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_symmetric_functions_match_eigenvalues(n, seed):
    M = np.random.default_rng(seed).normal(size=(n, n))
    A = (M + M.T)[None]
    lam = np.linalg.eigvalsh(A[0])
    # coefficients of prod (t + lam_i) are the elementary symmetric polynomials
    expected = np.poly(-lam)
    assert K.symmetric_functions(A)[0] == pytest.approx(expected, rel=1e-9, abs=1e-9)


def test_flat_input():
    W, A = K.shape_operator(np.zeros((3, 4)), np.zeros((3, 4, 4)))
    assert np.all(W == 1.0) and np.all(A == 0.0)


@pytest.mark.parametrize("flag, expected", [("0", "False"), ("no", "False")])
def test_env_flag_selects_fallback(flag, expected):
    env = dict(os.environ, PENROSE_LAB_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from penrose_lab import _kernels as K; print(K.USE_NUMBA)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == expected


def test_fallback_gives_same_geometry():
    code = (
        "import numpy as np; from penrose_lab.geometry import batch_geometry;"
        "rng=np.random.default_rng(3); g=rng.normal(size=(50,4)); h=rng.normal(size=(50,4,4)); h=h+h.transpose(0,2,1);"
        "W,A,S=batch_geometry(g,h); print(repr(float(np.sum(S[:,2]))))"
    )
    vals = []
    for flag in ("0", "1"):
        env = dict(os.environ, PENROSE_LAB_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.append(float(out.stdout))
    assert vals[0] == pytest.approx(vals[1], rel=1e-12)


def test_benchmark_runs():
    bench = os.path.join(os.path.dirname(__file__), os.pardir, "benchmarks", "bench_kernels.py")
    out = subprocess.run(
        [sys.executable, bench, "--points", "200", "--dims", "3", "--repeat", "1"],
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.splitlines()[0].split()[:2] == ["kernel", "n"]
    assert len(out.stdout.splitlines()) == 4
