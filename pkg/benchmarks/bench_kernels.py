"""Time the numba and numpy versions of each kernel on representative sizes.

    python benchmarks/bench_kernels.py [--repeat 3]

The numba timings exclude the first (compiling) call.  Every pair of
results is compared before anything is timed.
"""

import argparse
import time

import numpy as np
from scipy.linalg import expm

from restime import _kernels as K
from restime.meter import MeterConfig, magnitude_parts


def cases():
    h = np.array([[0.0, 1.0], [1.0, 0.0]])
    M = 20000
    dt = 100.0 / M
    yield "pathsum_bins", (expm(-1j * h * dt), expm(-0.5j * h * dt), M, 0), f"M={M}"

    rng = np.random.default_rng(0)
    coef = rng.normal(size=20000) + 1j * rng.normal(size=20000)
    tau = np.linspace(0, 100, 2000)
    yield "fourier_sum", (-100.0, 0.01, coef, tau), "K=20000, 2000 points"

    cfg = MeterConfig(10**6, 2.0)
    ns = np.arange(0, 40000)
    grid = np.linspace(0, 100.0, 4001)
    parts = magnitude_parts(ns, grid, cfg, "exact")
    c = rng.normal(size=grid.size) + 1j * rng.normal(size=grid.size)
    yield "meter_project", (ns, *parts, c), "40000 n x 4001 tau"


def best(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    opt = ap.parse_args()
    if not K.NUMBA_AVAILABLE:
        print("numba is not importable; nothing to compare")
        return
    loops, nps = K.loop_kernels(), K.numpy_kernels()
    print(f"{'kernel':<15}{'size':<24}{'numpy s':>10}{'numba s':>10}{'speed-up':>10}{'max rel diff':>14}")
    for name, args, size in cases():
        a = nps[name](*args)
        b = loops[name](*args)
        diff = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
        tn = best(nps[name], args, opt.repeat)
        tj = best(loops[name], args, opt.repeat)
        print(f"{name:<15}{size:<24}{tn:>10.3f}{tj:>10.3f}{tn / tj:>10.1f}{diff:>14.1e}")


if __name__ == "__main__":
    main()
