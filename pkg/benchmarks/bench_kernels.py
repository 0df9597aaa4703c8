"""Throughput comparison of the compiled and pure-numpy step kernels.

Usage:
    python3 benchmarks/bench_kernels.py [--sizes 1000,10000,100000] [--steps 50]

Runs the active backend in-process, then re-invokes itself in a subprocess
with HKSIM_NO_NUMBA=1 to time the fallback on the same workload. Timings use
a uniform profile on [0, n/1000] so the window structure matches the large
sweeps the package runs in practice.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from hksim import kernels


def bench_one(n: int, steps: int) -> dict:
    x = np.linspace(0.0, n / 1000.0, n)
    w = np.ones(n)
    kernels.step_values(x, w)  # warm any JIT before timing
    t0 = time.perf_counter()
    cur = x
    for _ in range(steps):
        cur = kernels.step_values(cur, w)
    elapsed = time.perf_counter() - t0
    return {
        "backend": kernels.BACKEND,
        "n": n,
        "steps": steps,
        "seconds": elapsed,
        "agent_updates_per_s": n * steps / elapsed,
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="1000,10000,100000")
    ap.add_argument("--steps", type=int, default=50)
    ap.add_argument("--json", action="store_true", help="print one JSON object per row")
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]

    rows = [bench_one(n, args.steps) for n in sizes]

    if args.json:
        for row in rows:
            print(json.dumps(row))
        return 0

    print(f"{'backend':>8} {'n':>8} {'steps':>6} {'seconds':>10} {'updates/s':>14}")
    for row in rows:
        print(
            f"{row['backend']:>8} {row['n']:>8} {row['steps']:>6}"
            f" {row['seconds']:>10.4f} {row['agent_updates_per_s']:>14.3e}"
        )

    if kernels.BACKEND == "numba" and os.environ.get("HKSIM_NO_NUMBA") != "1":
        env = dict(os.environ, HKSIM_NO_NUMBA="1")
        out = subprocess.run(
            [sys.executable, __file__, "--sizes", args.sizes, "--steps", str(args.steps), "--json"],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        fallback = [json.loads(line) for line in out.stdout.splitlines()]
        for row in fallback:
            print(
                f"{row['backend']:>8} {row['n']:>8} {row['steps']:>6}"
                f" {row['seconds']:>10.4f} {row['agent_updates_per_s']:>14.3e}"
            )
        for fast, slow in zip(rows, fallback):
            ratio = slow["seconds"] / fast["seconds"]
            print(f"n={fast['n']}: numba is {ratio:.1f}x faster")
    return 0


if __name__ == "__main__":
    sys.exit(main())
