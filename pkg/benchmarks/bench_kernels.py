"""Compare the compiled and pure-numpy kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run on both backends with identical inputs; the script checks
that outputs agree and prints the best wall time of ``--repeat`` runs.
"""

from __future__ import annotations

import argparse
import importlib
import timeit

import numpy as np

from dfbin import _kernels_py


def _cases(rng):
    train_x = rng.random((2000, 2))
    train_y = (rng.random(2000) < 0.5).astype(np.int64)
    query = rng.random((2001, 2))
    t = rng.random(1_000_000)
    a = rng.random(1_000_000)
    targets = np.array([0.12, 0.4, 0.83])
    weights = np.array([0.3, 0.5, 0.2])
    return {
        "knn_mean (2000 train x 2001 queries, k=45)": ("knn_mean", (train_x, train_y, query, 45)),
        "ell_array (1e6 points)": ("ell_array", (t, a)),
        "grid_search_allocation (3 atoms, step 1e-3)": ("grid_search_allocation", (targets, weights, 0.1, 1e-3)),
    }


def _same(x, y) -> bool:
    if isinstance(x, tuple):
        return all(_same(p, q) for p, q in zip(x, y))
    return bool(np.array_equal(np.asarray(x), np.asarray(y)))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    try:
        compiled = importlib.import_module("dfbin._kernels")
    except ImportError:
        print("compiled kernels are not built; reinstall with a C++ compiler available")
        return 1
    print(f"{'kernel':48s} {'numpy [s]':>10s} {'cython [s]':>11s} {'speedup':>8s}  equal")
    for label, (name, call_args) in _cases(np.random.default_rng(args.seed)).items():
        slow, fast = getattr(_kernels_py, name), getattr(compiled, name)
        equal = _same(slow(*call_args), fast(*call_args))
        t_slow = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeat))
        t_fast = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat))
        print(f"{label:48s} {t_slow:10.4f} {t_fast:11.4f} {t_slow / t_fast:7.1f}x  {equal}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
