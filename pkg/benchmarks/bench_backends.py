#!/usr/bin/env python3
"""Compare the compiled sweep backend against the pure-Python fallback.

Times bit-exactness verification of representative table cells with both
backends and prints the speedup.  Run from the repository root:

    python3 benchmarks/bench_backends.py [--samples 100000]
"""

import argparse
import time

from dsppack import simulate as sim
from dsppack.packing import GENERIC_SEQ_LEN
from dsppack.profiles import DSP48E2
from dsppack.simulate import SamplePolicy, verify_choice
from dsppack.table import search_optimal

CASES = [
    ("kernel 5x8, exhaustive", 5, 8, (1, 1), {}),
    ("filter 2x2 on 3x3 kernel, exhaustive", 2, 2, (3, 3), {}),
    ("filter 4x4 on 3x3 kernel, exhaustive", 4, 4, (3, 3), {}),
    ("kernel 8x8, sampled", 8, 8, (1, 1), {}),
    ("overpacked 4x4 on 1x1 kernel", 4, 4, (1, 1), {"allow_overpack": True}),
    ("separated 7x4 on 3x3 kernel", 7, 4, (3, 3), {"allow_separation": True}),
]


def run(policy):
    rows = []
    for label, w, a, shape, flags in CASES:
        choice = search_optimal(w, a, shape, GENERIC_SEQ_LEN, DSP48E2, **flags)
        times = {}
        trials = 0
        compiled = sim._simcore
        for backend_name in ("compiled", "python"):
            if backend_name == "compiled" and compiled is None:
                times[backend_name] = None
                continue
            sim._simcore = compiled if backend_name == "compiled" else None
            t0 = time.perf_counter()
            report = verify_choice(choice, DSP48E2, policy)
            times[backend_name] = time.perf_counter() - t0
            trials = report["trials"]
            assert report["mismatches"] == 0
        sim._simcore = compiled
        rows.append((label, trials, times))
    return rows


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--samples", type=int, default=100_000)
    parser.add_argument("--exhaustive-bits", type=int, default=20)
    args = parser.parse_args()
    policy = SamplePolicy(exhaustive_bits=args.exhaustive_bits,
                          samples=args.samples)

    if sim._simcore is None:
        print("compiled backend not available; timing pure Python only")
    print(f"{'case':<42} {'trials':>9}  {'compiled':>9}  {'python':>9}  {'speedup':>7}")
    for label, trials, times in run(policy):
        c, p = times["compiled"], times["python"]
        c_s = f"{c:8.3f}s" if c is not None else "      --"
        speed = f"{p / c:6.1f}x" if c else "     --"
        print(f"{label:<42} {trials:>9}  {c_s:>9}  {p:8.3f}s  {speed:>7}")


if __name__ == "__main__":
    main()
