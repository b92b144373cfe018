"""Time the compiled Lambda steady-state kernel against the NumPy fallback.

Usage: python3 benchmarks/bench_kernel.py [--points N] [--repeat R]
"""
import argparse
import timeit

import numpy as np

from ives_sme.liouville import BACKENDS, DecayRates, solve_lambda_batch


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--points", type=int, default=20_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    Delta = rng.uniform(-1e6, 1e6, args.points)
    delta = rng.uniform(-2e3, 2e3, args.points)
    rates = DecayRates(Gamma31=2.873e6, Gamma32=2.873e6, gamma31=1e11, gamma32=1e11)
    args_ = (Delta, delta, 1e4, 1e7, rates)

    results = {}
    for backend in BACKENDS:
        solve_lambda_batch(*args_, backend=backend)
        t = min(timeit.repeat(lambda: solve_lambda_batch(*args_, backend=backend),
                              number=1, repeat=args.repeat))
        results[backend] = (t, solve_lambda_batch(*args_, backend=backend)[0])
        print(f"{backend:>9}: {t * 1e3:9.2f} ms for {args.points} points "
              f"({t / args.points * 1e6:.3f} us/point)")
    if len(results) == 2:
        (tc, rc), (tp, rp) = results["compiled"], results["python"]
        print(f"  speed-up: {tp / tc:.1f}x   max |rho_c - rho_py|: {np.abs(rc - rp).max():.2e}")
    else:
        print("compiled kernel not built; only the NumPy backend was timed")


if __name__ == "__main__":
    main()
