"""Time the compiled and numpy accumulation kernels on the same inputs.

    python benchmarks/bench_backends.py [--paths 4000] [--grid 4] [--repeat 5]

Also times a full ``absorb_paths`` on simulated data with each backend.
"""

import argparse
import time

import numpy as np

from markovroots import _backend
from markovroots.estimator import AccumulatorBank, BandwidthSchedule, bank as bank_mod
from markovroots.markov import CovariatePoint
from markovroots.simulator import SimConfig, simulate_paths


def kernel_inputs(rng, n_paths, G, L=20, S=5, per_path=3):
    n_events = n_paths * per_path
    W = rng.random((n_paths, G))
    owner = np.sort(rng.integers(0, n_paths, n_events))
    frm = rng.integers(0, S, n_events)
    to = rng.integers(0, S, n_events)
    lag = rng.integers(0, L, n_events)
    return (G, L, S), W, owner, frm, to, lag


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_kernel(args):
    rng = np.random.default_rng(0)
    (G, L, S), W, owner, frm, to, lag = kernel_inputs(rng, args.paths, args.grid)
    results = {}
    for name, fn in _backend.BACKENDS.items():
        def run():
            U_T, U_B = np.zeros((G, L, S, S)), np.zeros((G, L, S))
            fn(U_T, U_B, W, owner, frm, to, lag)
            return U_T
        results[name] = (best_of(run, args.repeat), run())
    return results


def bench_absorb(args):
    grid = tuple(CovariatePoint((zc,), (zd,)) for zc in np.linspace(1.1, 1.9, args.grid) for zd in (0, 1))
    paths = list(simulate_paths(SimConfig(S=3, with_covariates=True, seed=1), n=args.paths))
    out = {}
    saved = bank_mod._backend.accumulate
    try:
        for name, fn in _backend.BACKENDS.items():
            bank_mod._backend.accumulate = fn

            def run():
                AccumulatorBank(grid=grid, S=3, L_max=20,
                                schedule=BandwidthSchedule(sigma_scale=0.22)).absorb_paths(paths)
            out[name] = best_of(run, args.repeat)
    finally:
        bank_mod._backend.accumulate = saved
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=4000)
    ap.add_argument("--grid", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    print(f"backends available: {', '.join(_backend.BACKENDS)} (default {_backend.BACKEND})")
    kern = bench_kernel(args)
    ref = kern["python"][1]
    print(f"\naccumulate kernel, {args.paths} paths x {args.grid} grid points")
    for name, (t, U) in kern.items():
        same = "identical" if np.array_equal(U, ref) else f"max diff {np.abs(U - ref).max():.1e}"
        print(f"  {name:8s} {t * 1e3:9.2f} ms   {same}")
    absorb = bench_absorb(args)
    print(f"\nabsorb_paths, {args.paths} simulated paths x {2 * args.grid} grid points")
    for name, t in absorb.items():
        print(f"  {name:8s} {t * 1e3:9.2f} ms")
    if "cython" in kern:
        print(f"\nkernel speedup: {kern['python'][0] / kern['cython'][0]:.1f}x")


if __name__ == "__main__":
    main()
