"""Time the O(n^2) pair scans on the compiled and numpy backends.

    python3 benchmarks/bench_kernels.py [--sizes 257 1025 4097] [--repeat 3]

Prints one row per size with the best-of-``repeat`` wall time of each
backend, the speedup, and whether the two results agree bit for bit.
"""

import argparse
import time

import numpy as np

from yode import kernels
from yode.drivers import fbm_samples
from yode.paths import Grid


def best_time(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[257, 1025, 4097])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--alpha", type=float, default=0.6)
    args = ap.parse_args(argv)

    names = [b for b in ("cython", "python") if b in kernels.BACKENDS]
    print(f"backends available: {', '.join(names)} (default {kernels.BACKEND})")
    header = "scan    n      " + "  ".join(f"{b:>10}" for b in names)
    if len(names) == 2:
        header += "    speedup  identical"
    print(header)
    for n in args.sizes:
        grid = Grid(0.0, 1.0, n)
        values = fbm_samples(grid, 0.75, 1, [0])[0].reshape(n, 1)
        lagpow = kernels.lag_powers(n, grid.step, args.alpha)
        scans = {
            "holder": lambda b: kernels.holder_scan(values, lagpow, 0, n - 1, b),
            "lift": lambda b: kernels.lift_scan(values, lagpow, n // 4, 3 * n // 4, b),
        }
        for scan, fn in scans.items():
            times, results = [], []
            for b in names:
                t, r = best_time(lambda: fn(b), args.repeat)
                times.append(t)
                results.append(r)
            line = f"{scan:<7} {n:<6} " + "  ".join(f"{t:10.4f}" for t in times)
            if len(names) == 2:
                same = results[0] == results[1]
                line += f"    {times[1] / times[0]:7.1f}x  {same}"
            print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
