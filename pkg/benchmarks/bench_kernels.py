"""
Numba vs numpy timings for the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Both paths are called in one process: the numpy functions directly, the
numba ones after a warm-up call so compile time is excluded.  Each row also
reports the max abs difference between the two results.
"""
import argparse
import time

import numpy as np

from cflimsup import _accel, kernels
from cflimsup.montecarlo import DigitSampler, sample_digits, sample_many


def best_of(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def with_backend(flag, fn):
    old = _accel.USE_NUMBA
    _accel.USE_NUMBA = flag
    try:
        return fn()
    finally:
        _accel.USE_NUMBA = old


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        print("numba not installed; nothing to compare")
        return

    sampler = DigitSampler("gauss", 7)
    cases = [
        ("wordsum M=4 n=10", lambda: kernels.wordsum_nb(4, 10, 1.2),
         lambda: kernels.wordsum_np(4, 10, 1.2)),
        ("wordsum M=8 n=7", lambda: kernels.wordsum_nb(8, 7, 1.4),
         lambda: kernels.wordsum_np(8, 7, 1.4)),
        ("transfer M=6 n=8", lambda: kernels.transfer_nb(6, 8, 1.1, 0.0),
         lambda: kernels.transfer_np(6, 8, 1.1, 0.0)),
        ("sample 200 x 2000 gauss",
         lambda: with_backend(True, lambda: sample_many(sampler, range(200), 2000)),
         lambda: with_backend(False, lambda: sample_many(sampler, range(200), 2000))),
        ("sample 1 x 100000 gauss",
         lambda: with_backend(True, lambda: sample_digits(sampler, 0, 100000)),
         lambda: with_backend(False, lambda: sample_digits(sampler, 0, 100000))),
    ]
    print(f"{'kernel':28s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, nb, npy in cases:
        nb()  # compile
        t_nb, r_nb = best_of(nb, args.repeat)
        t_np, r_np = best_of(npy, args.repeat)
        diff = float(np.max(np.abs(np.asarray(r_nb, float) - np.asarray(r_np, float))))
        print(f"{name:28s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
