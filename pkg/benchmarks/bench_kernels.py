#!/usr/bin/env python3
"""Benchmark the compiled Monte Carlo kernel against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--trials N] [--repeat K]

Also re-asserts the bit-identity contract on the benchmarked workload,
since a fast kernel that drifts from the fallback would be worthless.
"""

import argparse
import time

import numpy as np

from ionlockin import DriveConfig, ExperimentConfig
from ionlockin._kernels import HAVE_COMPILED, available_backends
from ionlockin.montecarlo import RngSpec, simulate_batch


def time_backend(cfg, backend, trials, repeat, analytic):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = simulate_batch(cfg, RngSpec(seed=9001), trials,
                             backend=backend, analytic_n_infinite=analytic)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=500_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    cfg = ExperimentConfig(drive=DriveConfig(z_c=0.5e-9))
    print(f"backends available: {', '.join(available_backends())}")
    print(f"{args.trials} trials per run, best of {args.repeat}\n")
    print(f"{'mode':<22} {'backend':<8} {'time':>9} {'trials/s':>12}")

    for analytic, label in ((False, "binomial counts"), (True, "analytic probs")):
        results = {}
        for backend in available_backends():
            dt, out = time_backend(cfg, backend, args.trials, args.repeat,
                                   analytic)
            results[backend] = out
            print(f"{label:<22} {backend:<8} {dt:>8.3f}s {args.trials/dt:>12.0f}")
        if HAVE_COMPILED:
            same = all(np.array_equal(a, b)
                       for a, b in zip(results["cython"], results["numpy"]))
            print(f"{'':<22} bit-identical: {same}")
            if not same:
                raise SystemExit("backend outputs diverged")
    if HAVE_COMPILED:
        print("\nspeedup is the cython/numpy time ratio above")
    else:
        print("\ncompiled kernel not built; only the numpy backend was timed")


if __name__ == "__main__":
    main()
