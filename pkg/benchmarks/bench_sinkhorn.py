"""Benchmark the Sinkhorn iteration backends against each other.

Runs the same log-domain scaling loop through the compiled extension and
the NumPy fallback on identical seeded inputs, reports wall time per
solve and the speedup, and cross-checks that both backends return the
same potentials. Run from a checkout or an installed environment:

    python3 benchmarks/bench_sinkhorn.py
    python3 benchmarks/bench_sinkhorn.py --sizes 100,400 --repeats 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from infoot import BACKEND
from infoot._core import available_backends


def _prepare(n: int, seed: int, eps: float):
    rng = np.random.default_rng(seed)
    C = rng.uniform(0.0, 1.0, (n, n))
    p = np.full(n, 1.0 / n)
    return -C / eps, p, p


def _time_kernel(kernel, args, repeats: int):
    best = np.inf
    out = None
    for _ in range(repeats):
        start = time.perf_counter()
        out = kernel(*args)
        best = min(best, time.perf_counter() - start)
    return best, out


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="50,100,200,400",
                        help="comma-separated problem sizes (n x n)")
    parser.add_argument("--eps", type=float, default=0.05,
                        help="entropic strength (smaller = more iterations)")
    parser.add_argument("--max-iter", type=int, default=2000)
    parser.add_argument("--tol", type=float, default=1e-9)
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats; best run is reported")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = available_backends()
    print(f"default backend: {BACKEND}; available: {', '.join(backends)}")
    if "compiled" not in backends:
        print("compiled extension not built; timing the python backend only")

    sizes = [int(s) for s in args.sizes.split(",")]
    header = f"{'n':>6} {'iters':>6}" + "".join(
        f" {name + ' [ms]':>14}" for name in backends)
    if len(backends) > 1:
        header += f" {'speedup':>9} {'max |da|':>10}"
    print(header)

    for n in sizes:
        kernel_args = (*_prepare(n, args.seed, args.eps),
                       args.max_iter, args.tol)
        times = {}
        results = {}
        for name, kernel in backends.items():
            times[name], results[name] = _time_kernel(kernel, kernel_args,
                                                      args.repeats)
        iters = results[next(iter(backends))][2]
        row = f"{n:>6} {iters:>6}" + "".join(
            f" {times[name] * 1e3:>14.2f}" for name in backends)
        if len(backends) > 1:
            ratio = times["python"] / times["compiled"]
            da = np.abs(results["python"][0] - results["compiled"][0]).max()
            row += f" {ratio:>8.2f}x {da:>10.2e}"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
