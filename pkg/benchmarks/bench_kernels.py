"""Compare the compiled kernel backend against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--points N] [--repeats R]

Both backends are exercised on identical inputs; results are checked for
bitwise agreement before timings are reported.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from vlm6d import kernels
from vlm6d._kernels_py import argmax_with_tiebreak


def bench(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=2048)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    try:
        compiled = kernels.get_backend("compiled")
    except ImportError:
        raise SystemExit("compiled backend not built; run pip install -e . first")
    python = kernels.get_backend("python")

    rng = np.random.default_rng(0)
    coords = np.ascontiguousarray(rng.normal(size=(args.points, 3)))
    centers = np.ascontiguousarray(coords[:: max(1, args.points // 512)][:512])
    query = np.ascontiguousarray(rng.normal(size=(512, 3)))
    first = argmax_with_tiebreak(((coords - coords.mean(0)) ** 2).sum(1), coords)

    cases = [
        ("fps_greedy (k=512)", lambda b: b.fps_greedy(coords, 512, first)),
        ("ball_query (r=0.3, ns=32)", lambda b: b.ball_query(centers, coords, 0.3, 32)),
        ("ball_query_nearest (r=0.3, ns=32)", lambda b: b.ball_query_nearest(centers, coords, 0.3, 32)),
        ("nn_dists (512 x N)", lambda b: b.nn_dists(query, coords)),
        ("max_pairwise_dist", lambda b: b.max_pairwise_dist(coords)),
    ]

    print(f"{args.points} points, best of {args.repeats} runs\n")
    print(f"{'kernel':<36}{'python [ms]':>14}{'compiled [ms]':>15}{'speedup':>10}")
    print("-" * 75)
    for name, call in cases:
        t_py, out_py = bench(lambda: call(python), args.repeats)
        t_cy, out_cy = bench(lambda: call(compiled), args.repeats)
        if not np.array_equal(np.asarray(out_py), np.asarray(out_cy)):
            raise SystemExit(f"backend mismatch in {name}")
        print(f"{name:<36}{t_py * 1e3:>14.2f}{t_cy * 1e3:>15.2f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
