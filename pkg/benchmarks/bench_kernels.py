"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Each workload runs once to warm the JIT cache, then ``--repeat`` times per
path; the best wall time is reported.  Both paths must agree on the result.
"""

import argparse
import time

from jobshop_dd import _jit
from jobshop_dd.bench import load_jsplib
from jobshop_dd.dd import compile_restricted, full_expansion
from jobshop_dd.graph import graph_from_schedule, lns1_refine
from jobshop_dd.heuristics import dispatch
from jobshop_dd.instance import generate_random_instance


def workloads():
    ft10 = load_jsplib("ft10")
    small = generate_random_instance(3, 4, seed=0)
    start = graph_from_schedule(ft10, dispatch(ft10, "MOR"))
    return {
        "restricted DD ft10 W=400": lambda: compile_restricted(ft10, "m2", width=400).makespan,
        "restricted DD ft10 W=100 m1": lambda: compile_restricted(ft10, "m1", width=100).makespan,
        "full expansion 3x4 m2": lambda: full_expansion(small, "m2").valid_nodes,
        "LNS1 ft10 from MOR": lambda: lns1_refine(start, budget=2000)[0],
    }


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _jit.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'workload':32s} {'numba':>9s} {'numpy':>9s} {'speedup':>8s}")
    for name, fn in workloads().items():
        times, outs = {}, {}
        for use_jit in (True, False):
            _jit.USE_JIT = use_jit
            fn()  # warm-up, includes compilation on the first jit run
            times[use_jit], outs[use_jit] = best_time(fn, args.repeat)
        _jit.USE_JIT = True
        if outs[True] != outs[False]:
            raise SystemExit(f"{name}: paths disagree ({outs[True]} vs {outs[False]})")
        print(f"{name:32s} {times[True]:8.3f}s {times[False]:8.3f}s {times[False] / times[True]:7.1f}x")


if __name__ == "__main__":
    main()
