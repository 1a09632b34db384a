#!/usr/bin/env python3
"""Benchmark the numba kernel backend against the vectorized-numpy fallback.

Runs each hot kernel on representative search-sized inputs and prints the
per-call timings for both implementations.  Launch with the active backend
(ONESHOT_BACKEND=auto/numba) to see the jitted numbers; the numpy column is
always the reference implementation.

    python benchmarks/bench_kernels.py [--repeats 20000]
"""

import argparse
import time

import numpy as np

from oneshotsim import _kernels


def timeit(fn, args, repeats):
    fn(*args)  # warm-up (jit compile on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=20000)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    p = rng.random(16)
    p /= p.sum()
    q = rng.random(16)
    q /= q.sum()
    joint = rng.random((8, 16))
    joint /= joint.sum()
    marg = joint.sum(axis=0)
    cond = rng.random((4, 8))
    cond /= cond.sum(axis=1, keepdims=True)
    avg = np.full(4, 0.25) @ cond
    books = rng.integers(0, 4, size=(64, 6)).astype(np.int64)

    cases = [
        ("shannon_bits", (p,)),
        ("max_ratio", (p, q)),
        ("i_up_exp_classical", (joint, marg)),
        ("trace_distance_classical", (p, q)),
        ("purified_distance_classical", (p, q)),
        ("covering_errors_classical", (cond, avg, books)),
    ]

    print(f"active backend: {_kernels.BACKEND}")
    print(f"{'kernel':<30} {'active (us)':>12} {'numpy (us)':>12} {'speedup':>9}")
    for name, call_args in cases:
        reps = args.repeats if name != "covering_errors_classical" else args.repeats // 10
        active = timeit(getattr(_kernels, name), call_args, reps)
        ref = timeit(_kernels.numpy_impl(name), call_args, reps)
        print(f"{name:<30} {active * 1e6:>12.2f} {ref * 1e6:>12.2f} {ref / active:>8.1f}x")


if __name__ == "__main__":
    main()
