"""Benchmark the compiled stencil kernels against the pure-numpy fallback.

Run:  python benchmarks/bench_kernels.py [--size N] [--repeats R]
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

# Must pick the backend before importing the package.
os.environ.pop("BICONSURF_DISABLE_NUMBA", None)

from biconsurf import kernels  # noqa: E402


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=1024)
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    f = rng.standard_normal((args.size, args.size))
    h = 0.01

    kernels.warmup()
    print(f"field {args.size}x{args.size}, best of {args.repeats}")
    print(f"{'case':<28}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>9}")
    for order in (1, 2):
        for periodic in (True, False):
            for axis in (0, 1):
                def nb():
                    kernels.derivative(f, h, axis, order, periodic, backend="numba")

                def np_():
                    kernels.derivative(f, h, axis, order, periodic, backend="numpy")

                a = np.allclose(
                    kernels.derivative(f, h, axis, order, periodic, backend="numba"),
                    kernels.derivative(f, h, axis, order, periodic, backend="numpy"),
                    atol=1e-12,
                )
                t_nb = time_call(nb, args.repeats) * 1e3
                t_np = time_call(np_, args.repeats) * 1e3
                case = f"d{order} axis={axis} periodic={periodic}"
                mark = "" if a else "  MISMATCH"
                print(f"{case:<28}{t_nb:>12.3f}{t_np:>12.3f}{t_np / t_nb:>9.2f}{mark}")


if __name__ == "__main__":
    main()
