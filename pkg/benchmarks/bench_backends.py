"""Compare the numba and pure-numpy backends on the two hot kernels.

Run with ``python3 benchmarks/bench_backends.py [--sizes 128,256,512] [--iterations 2000]``.
Compilation happens in a warm-up call and is excluded from the timings.
"""

import argparse
import time

import numpy as np

from kboost import _accel, boosting, kernels, spectrum


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="128,256,512")
    parser.add_argument("--iterations", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    backends = ("numpy", "numba")
    print(f"{'kernel':<12} {'n':>5} {'numpy_s':>9} {'numba_s':>9} {'speedup':>8}")
    for n in (int(v) for v in args.sizes.split(",")):
        K = kernels.build_kernel_matrix(kernels.sobolev1(), kernels.equidistant_design(n)).entries
        y = np.random.default_rng(n).uniform(-1, 1, n)
        rec = np.array([args.iterations], dtype=np.int64)
        jobs = {
            "eigen": lambda b: spectrum.symmetric_eigenvalues(K, backend=b),
            "boost_l2": lambda b: boosting.boost_loop(K, y, y, 0.75, 0, 1.0, args.iterations, rec, True, backend=b),
            "boost_logit": lambda b: boosting.boost_loop(K, y, y, 0.75, 1, 1.0, args.iterations, rec, True, backend=b),
        }
        for name, job in jobs.items():
            job("numba")  # compile
            t = {b: best_of(lambda b=b: job(b), args.repeat) for b in backends}
            print(f"{name:<12} {n:>5} {t['numpy']:>9.4f} {t['numba']:>9.4f} {t['numpy'] / t['numba']:>7.1f}x")


if __name__ == "__main__":
    main()
