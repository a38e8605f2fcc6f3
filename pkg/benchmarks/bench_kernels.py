"""Compare the numba and numpy kernel paths on stacked random jets.

Usage: python3 benchmarks/bench_kernels.py [--points N] [--dims 3,5,7] [--repeat R]
"""
import argparse
import time

import numpy as np

from penrose_lab import _kernels as K


def best_of(func, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        func(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=100_000)
    ap.add_argument("--dims", default="3,5,7")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if K.shape_operator_numba is None:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    pairs = [
        ("shape_operator", K.shape_operator_numpy, K.shape_operator_numba),
        ("symmetric_functions", K.symmetric_functions_numpy, K.symmetric_functions_numba),
        ("second_symmetric", K.second_symmetric_numpy, K.second_symmetric_numba),
    ]
    print(f"{'kernel':<22}{'n':>3}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>9}")
    for n in (int(d) for d in args.dims.split(",")):
        grad = rng.normal(size=(args.points, n))
        hess = rng.normal(size=(args.points, n, n))
        hess = 0.5 * (hess + hess.transpose(0, 2, 1))
        _, A = K.shape_operator_numpy(grad, hess)
        for name, py, jit in pairs:
            inputs = (grad, hess) if name == "shape_operator" else (A,)
            jit(*(x[:2] for x in inputs))  # compile outside the timing
            t_np = best_of(py, inputs, args.repeat)
            t_nb = best_of(jit, inputs, args.repeat)
            print(f"{name:<22}{n:>3}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}")


if __name__ == "__main__":
    main()
