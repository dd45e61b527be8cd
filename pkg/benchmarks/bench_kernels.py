"""Timing comparison of the jitted kernels against the pure-numpy fallback.

Run with: python3 benchmarks/bench_kernels.py
The numbers cover the two hot kernels (neighbor-weight Jaccard distance and
density clustering) at sizes typical for the pipeline's clustering phase.
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from subtrack import kernels

SIZES = [100, 300, 600, 1000]
REPEATS = 3


def _weights(rng, n):
    W = rng.uniform(size=(n, n)) * (rng.uniform(size=(n, n)) < 0.05)
    return np.ascontiguousarray(W)


def _dist(rng, n):
    d = rng.uniform(size=(n, n))
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return np.ascontiguousarray(d)


def _time(fn, *args):
    best = float("inf")
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    if not kernels.HAVE_NUMBA:
        print("numba is not installed; only the numpy path is available")
        return
    rng = np.random.default_rng(0)
    # trigger compilation outside the timed region
    kernels._jaccard_numba(_weights(rng, 10))
    kernels._dbscan_numba(_dist(rng, 10), 0.3, 2)

    print(f"{'n':>6} {'kernel':<10} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}")
    for n in SIZES:
        W = _weights(rng, n)
        d = _dist(rng, n)
        tj_nb = _time(kernels._jaccard_numba, W)
        tj_np = _time(kernels._jaccard_numpy, W)
        td_nb = _time(kernels._dbscan_numba, d, 0.3, 2)
        td_np = _time(kernels._dbscan_numpy, d, 0.3, 2)
        print(f"{n:>6} {'jaccard':<10} {tj_nb:>10.4f} {tj_np:>10.4f} {tj_np / tj_nb:>7.1f}x")
        print(f"{n:>6} {'dbscan':<10} {td_nb:>10.4f} {td_np:>10.4f} {td_np / td_nb:>7.1f}x")


if __name__ == "__main__":
    main()
