"""Compare the compiled and pure-Python inference kernels.

Run with ``python benchmarks/bench_kernels.py [--rules R] [--dim D]``.
"""
import argparse
import timeit

import numpy as np

from mcsp import _kernels_py

try:
    from mcsp import _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def problem(rules, dim, classes, seed=0):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(rules, dim))
    half = rng.uniform(0, 0.1, (rules, dim))
    return (c - half, c + half, rng.uniform(0.5, 2.0, (rules, dim)), rng.normal(size=(rules, classes))), \
        rng.normal(size=(500, dim))


def bench(mod, params, X, repeat):
    single = min(timeit.repeat(lambda: [mod.infer(x, *params, 0.5) for x in X], number=1, repeat=repeat))
    batch = min(timeit.repeat(lambda: mod.infer_batch(X, *params, 0.5), number=1, repeat=repeat))
    return single / len(X) * 1e6, batch / len(X) * 1e6


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rules", type=int, nargs="+", default=[5, 20, 80])
    ap.add_argument("--dim", type=int, default=6)
    ap.add_argument("--classes", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'rules':>5} {'backend':>8} {'per-sample us':>14} {'batched us':>11}")
    for r in args.rules:
        params, X = problem(r, args.dim, args.classes)
        rows = [("python", _kernels_py)] + ([("cython", _kernels_c)] if _kernels_c else [])
        for name, mod in rows:
            s, b = bench(mod, params, X, args.repeat)
            print(f"{r:>5} {name:>8} {s:>14.2f} {b:>11.2f}")
    if _kernels_c is None:
        print("compiled extension unavailable; only the fallback was timed")


if __name__ == "__main__":
    main()
