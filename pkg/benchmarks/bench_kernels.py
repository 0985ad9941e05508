"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Run twice to compare paths:

    python benchmarks/bench_kernels.py
    RYDSIM_PURE_NUMPY=1 python benchmarks/bench_kernels.py

or pass --both to time the fallback in the same process.
"""

import argparse
import time

import numpy as np

from rydsim._kernels import (USING_NUMBA, _hamming_quadratic_numpy,
                             _sff_sum_numpy, hamming_quadratic, hamming_weights,
                             sff_sum)


def timeit(fn, *args, repeats=5):
    fn(*args)  # warm up (JIT compile / cache load)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--realisations", type=int, default=200)
    parser.add_argument("--dim", type=int, default=1024)
    parser.add_argument("--times", type=int, default=480)
    parser.add_argument("--rows", type=int, default=20_000)
    parser.add_argument("--n-sub", type=int, default=3)
    parser.add_argument("--both", action="store_true",
                        help="also time the numpy fallback in-process")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    path = "numba" if USING_NUMBA else "numpy"
    print(f"active kernel path: {path}")

    eigs = np.ascontiguousarray(rng.standard_normal((args.realisations, args.dim)) * 30)
    tgrid = np.ascontiguousarray(np.logspace(-2, 2.8, args.times))
    t_active = timeit(sff_sum, eigs, tgrid)
    print(f"sff_sum ({args.realisations} x {args.dim} eigenvalues, "
          f"{args.times} times): {t_active:.3f} s")
    if args.both and USING_NUMBA:
        t_np = timeit(_sff_sum_numpy, eigs, tgrid)
        print(f"  numpy fallback: {t_np:.3f} s  (speedup x{t_np / t_active:.1f})")

    dim_a = 2**args.n_sub
    rows = rng.random((args.rows, dim_a))
    rows = np.ascontiguousarray(rows / rows.sum(axis=1, keepdims=True))
    weights = hamming_weights(args.n_sub)
    t_active = timeit(hamming_quadratic, rows, weights)
    print(f"hamming_quadratic ({args.rows} rows, {dim_a} outcomes): {t_active:.4f} s")
    if args.both and USING_NUMBA:
        t_np = timeit(_hamming_quadratic_numpy, rows, weights)
        print(f"  numpy fallback: {t_np:.4f} s  (speedup x{t_np / t_active:.1f})")


if __name__ == "__main__":
    main()
