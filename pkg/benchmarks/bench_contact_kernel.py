#!/usr/bin/env python3
"""Benchmark the compiled contact-time kernel against the numpy fallback.

Two measurements:
  * microbenchmark: one scan of particle 0 against N-1 candidates, best
    of --repeats runs, for a few (N, n) shapes;
  * end to end (unless --no-e2e): the same gas simulated in a subprocess
    with each backend (KINKBOUND_PURE_PYTHON toggles the fallback).

The backends are bit-identical by construction, so this is purely about
speed.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from kinkbound import _kernels

SHAPES = [(64, 2), (256, 2), (1024, 2), (4096, 2), (1024, 3)]

E2E_SNIPPET = """
import time
import kinkbound
from kinkbound import harness

side = harness._fixed_fraction_box(2, 256, 0.01, 0.3)
scn = harness.gen_random_gas(2, 256, side, 0.01,
                             {"kind": "maxwell", "sigma": 1.0}, 12)
t0 = time.perf_counter()
log = harness.simulate_scenario(scn)
print(kinkbound.kernel_backend, len(log.events), time.perf_counter() - t0)
"""


def bench_scan(impl, N, n, repeats, seed=0):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(0.0, 1.0, size=(N, n))
    vel = rng.normal(size=(N, n))
    tupd = rng.uniform(0.0, 0.1, size=N)
    js = np.arange(1, N, dtype=np.int64)
    out = np.empty(N - 1)
    four_a2 = 4.0 * 0.01 ** 2
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        impl(pos, vel, tupd, 0, js, four_a2, 1e-14, out)
        best = min(best, time.perf_counter() - t0)
    return best


def run_e2e(pure: bool) -> tuple:
    env = dict(os.environ)
    if pure:
        env["KINKBOUND_PURE_PYTHON"] = "1"
    else:
        env.pop("KINKBOUND_PURE_PYTHON", None)
    proc = subprocess.run([sys.executable, "-c", E2E_SNIPPET],
                          capture_output=True, text=True, env=env, check=True)
    backend, events, seconds = proc.stdout.split()
    return backend, int(events), float(seconds)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=200)
    ap.add_argument("--no-e2e", action="store_true",
                    help="skip the subprocess simulation comparison")
    args = ap.parse_args(argv)

    try:
        compiled = _kernels.get_impl("compiled")
    except RuntimeError:
        compiled = None
        print("compiled kernel unavailable; timing the fallback only\n")
    python = _kernels.get_impl("python")

    print(f"{'shape':>12} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for N, n in SHAPES:
        tp = bench_scan(python, N, n, args.repeats)
        row = f"{f'{N}x{n}':>12} {tp * 1e6:>10.1f}us"
        if compiled is not None:
            tc = bench_scan(compiled, N, n, args.repeats)
            row += f" {tc * 1e6:>10.1f}us {tp / tc:>8.1f}x"
        print(row)

    if not args.no_e2e:
        print("\nend to end (N=256 gas, 2-D, fixed covering fraction 0.3):")
        for pure in (False, True):
            backend, events, seconds = run_e2e(pure)
            print(f"  {backend:>8}: {events} events in {seconds:.2f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
