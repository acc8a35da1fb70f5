"""Compare the compiled kernels with the NumPy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import importlib
import timeit

import numpy as np

from qa_archetypes import _pykernels


def cases(rng):
    series = rng.poisson(0.4, size=(20_000, 60)).astype(np.int64)
    pts = np.round(rng.random((3_000, 3)) * 20) / 20  # ~9k grid cells, realistic duplicate load
    labels = rng.integers(0, 6, size=len(pts)).astype(np.int64)
    weights = rng.integers(1, 5, size=len(pts)).astype(np.float64)
    cents = rng.random((10, 3))
    big = rng.random((200_000, 3))
    return {
        "series_features 20000x60": lambda m: m.series_features(series),
        "silhouette_weighted n=3000": lambda m: m.silhouette_weighted(pts, labels, weights, 6),
        "assign_nearest 200000x10": lambda m: m.assign_nearest(big, cents),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        compiled = importlib.import_module("qa_archetypes._ckernels")
    except ImportError:
        compiled = None
        print("compiled extension not built; only the fallback is timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':30s} {'numpy (ms)':>12s} {'cython (ms)':>12s} {'speed-up':>9s}")
    for name, fn in cases(rng).items():
        py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{name:30s} {py:12.2f} {'-':>12s} {'-':>9s}")
            continue
        cy = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:30s} {py:12.2f} {cy:12.2f} {py / cy:8.1f}x")


if __name__ == "__main__":
    main()
