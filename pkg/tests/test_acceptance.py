"""Acceptance suite.  One test per criterion; each records a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are printed in the
terminal summary) or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from oracles import brute_force_optimum, small_instances  # noqa: E402

from jobshop_dd.bench import BenchConfig, load_jsplib, load_optima_registry, jsplib_names, random_instances, run_suite  # noqa: E402
from jobshop_dd.dd import (  # noqa: E402
    a_star_search,
    compile_relaxed,
    compile_restricted,
    dd_branch_and_bound,
    full_expansion,
)
from jobshop_dd.export import build_mip_model, export_disjunctive_lp, export_start_vector, parse_lp, parse_start_vector  # noqa: E402
from jobshop_dd.graph import graph_from_schedule, is_acyclic, longest_path, reverse_critical_arc  # noqa: E402
from jobshop_dd.heuristics import OneMachineProblem, dispatch, shifting_bottleneck, solve_one_machine_lmax  # noqa: E402
from jobshop_dd.instance import generate_random_instance, schedule_from_order, validate_schedule  # noqa: E402

RESULTS: dict[int, str] = {}


def record(n: int, title: str, ok: bool, detail: str) -> bool:
    RESULTS[n] = f"AC{n} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(RESULTS[n])
    return ok


def _mean_overage(spans, names, optima):
    return float(np.mean([100.0 * (s - optima[n]) / optima[n] for s, n in zip(spans, names)]))


def _random_shape(rng):
    return int(rng.integers(2, 9)), int(rng.integers(2, 9))


# 1 ------------------------------------------------------------------------
def check_oracle_equivalence():
    t0 = time.perf_counter()
    instances = small_instances(50, seed0=0)
    assert all(i.n_ops <= 12 for i in instances)
    mismatches = []
    for inst in instances:
        ref = brute_force_optimum(inst)
        got = (
            full_expansion(inst, "m1").optimum,
            full_expansion(inst, "m2").optimum,
            dd_branch_and_bound(inst).optimum,
            a_star_search(inst).optimum,
        )
        if any(g != ref for g in got):
            mismatches.append((inst.name, ref, got))
    secs = time.perf_counter() - t0
    ok = not mismatches and secs < 120
    return record(1, "oracle equivalence", ok, f"{50 - len(mismatches)}/50 agree, {secs:.1f}s (limit 120s)")


# 2 ------------------------------------------------------------------------
def check_restricted_feasibility():
    rng = np.random.default_rng(2024)
    total = feasible = 0
    for seed in range(200):
        n, m = _random_shape(rng)
        inst = generate_random_instance(n, m, seed)
        for width in (1, 10, 200):
            res = compile_restricted(inst, "m2", width=width)
            total += 1
            s = res.schedules[0] if res.schedules else None
            feasible += s is not None and validate_schedule(inst, s) is None and s.makespan == res.makespan
    return record(2, "restricted feasibility", feasible == total, f"{feasible}/{total} feasible")


# 3 ------------------------------------------------------------------------
def check_symmetry_reduction():
    t0 = time.perf_counter()
    out = {}
    for n, m in ((4, 5), (3, 10)):
        m1 = [full_expansion(generate_random_instance(n, m, s), "m1").valid_nodes for s in range(10)]
        m2 = [full_expansion(generate_random_instance(n, m, s), "m2").valid_nodes for s in range(10)]
        out[(n, m)] = (np.mean(m1), np.mean(m2))
    secs = time.perf_counter() - t0
    r45 = out[(4, 5)][1] / out[(4, 5)][0]
    ok = r45 <= 0.8 and out[(3, 10)][1] < out[(3, 10)][0] and secs < 900
    detail = (
        f"4x5 m1={out[(4, 5)][0]:.0f} m2={out[(4, 5)][1]:.0f} ratio={r45:.3f} (<=0.8); "
        f"3x10 m1={out[(3, 10)][0]:.0f} m2={out[(3, 10)][1]:.0f}; {secs:.0f}s"
    )
    return record(3, "symmetry reduction", ok, detail)


# 4 ------------------------------------------------------------------------
def check_lns1_improvement():
    report = run_suite(BenchConfig(random_instances(10, 10, 20, seed=100), ["MOR"], refine=True))
    rows = report.rows
    hard = all(r.makespan_lns1 is not None and r.makespan_lns1 <= r.makespan for r in rows)
    before = np.mean([r.makespan for r in rows])
    after = np.mean([r.makespan_lns1 for r in rows])
    rel = 100.0 * (before - after) / before
    ok = hard and len(rows) == 20 and rel >= 3.0
    return record(4, "LNS1 improvement", ok, f"never worse={hard}, MOR mean {before:.1f} -> {after:.1f} ({rel:.1f}% rel, need >=3%)")


# 5 ------------------------------------------------------------------------
def check_jsplib_bands():
    t0 = time.perf_counter()
    optima = load_optima_registry()
    names = jsplib_names()
    insts = [load_jsplib(n) for n in names]
    spans = {
        "DD W=400": [compile_restricted(i, "m2", width=400).makespan for i in insts],
        "DD W=200": [compile_restricted(i, "m2", width=200).makespan for i in insts],
        "SPT": [dispatch(i, "SPT").makespan for i in insts],
        "MWR": [dispatch(i, "MWR").makespan for i in insts],
        "MOR": [dispatch(i, "MOR").makespan for i in insts],
        "SB": [shifting_bottleneck(i, reoptimize=True).makespan for i in insts],
        "SB no-reopt": [shifting_bottleneck(i, reoptimize=False).makespan for i in insts],
    }
    means = {k: _mean_overage(v, names, optima) for k, v in spans.items()}
    bands = {
        "DD W=400": (0, 20),
        "DD W=200": (0, 25),
        "SPT": (50, 120),
        "MWR": (0, 45),
        "MOR": (0, 45),
        "SB": (0, 35),
        "SB no-reopt": (0, 35),
    }
    secs = time.perf_counter() - t0
    ok = all(lo <= means[k] <= hi for k, (lo, hi) in bands.items()) and secs < 600
    detail = ", ".join(f"{k} {means[k]:.1f}%" for k in bands) + f"; {secs:.0f}s"
    return record(5, "JSPLIB-18 overage bands", ok, detail)


# 6 ------------------------------------------------------------------------
def check_relaxed_bounds():
    optima = load_optima_registry()
    cases = [(load_jsplib(n), optima[n]) for n in jsplib_names()]
    cases += [(i, brute_force_optimum(i)) for i in small_instances(50, seed0=0)]
    min_bad, paper_bad, ratios = [], [], []
    for inst, opt in cases:
        for width in (4, 16):
            bound = compile_relaxed(inst, "m2", width=width, mode="min")
            ratios.append(bound / opt)
            if bound > opt:
                min_bad.append(inst.name)
            if compile_relaxed(inst, "m2", width=width, mode="paper_max") > opt:
                paper_bad.append(inst.name)
    ok = not min_bad
    detail = (
        f"min-mode violations {len(min_bad)}/{2 * len(cases)}; "
        f"paper-mode (max) violations {len(paper_bad)}/{2 * len(cases)} (reported only); "
        f"mean min-mode bound/optimum {np.mean(ratios):.2f}"
    )
    return record(6, "relaxed bound dominance", ok, detail)


# 7 ------------------------------------------------------------------------
def check_balas_reversals():
    rng = np.random.default_rng(7)
    trials = cycles = 0
    while trials < 10_000:
        n, m = _random_shape(rng)
        inst = generate_random_instance(n, m, int(rng.integers(1 << 30)))
        order, nxt = [], [0] * n
        for _ in range(inst.n_ops):
            live = [j for j in range(n) if nxt[j] < m]
            j = int(rng.choice(live))
            order.append((j, nxt[j]))
            nxt[j] += 1
        g = graph_from_schedule(inst, schedule_from_order(inst, order))
        for _ in range(5):
            cp = longest_path(g)
            arcs = [a for a in cp.arcs if not a.fixed]
            if not arcs:
                break
            g2 = reverse_critical_arc(g, arcs[int(rng.integers(len(arcs)))], cp)
            trials += 1
            if not is_acyclic(g2):
                cycles += 1
                break
            g = g2
            if trials >= 10_000:
                break
    return record(7, "Balas reversal acyclicity", cycles == 0, f"{trials} reversals, {cycles} cycles")


# 8 ------------------------------------------------------------------------
_PERMS: dict[int, np.ndarray] = {}


def _enumerate_lmax(r, p, d):
    k = len(r)
    if k not in _PERMS:
        _PERMS[k] = np.array(list(itertools.permutations(range(k))), np.int64)
    perms = _PERMS[k]
    r, p, d = np.asarray(r)[perms], np.asarray(p)[perms], np.asarray(d)[perms]
    t = np.zeros(len(perms), np.int64)
    worst = np.full(len(perms), np.iinfo(np.int64).min)
    for i in range(k):
        t = np.maximum(t, r[:, i]) + p[:, i]
        worst = np.maximum(worst, t - d[:, i])
    return int(worst.min())


def check_one_machine():
    rng = np.random.default_rng(8)
    agree = 0
    for _ in range(500):
        k = int(rng.integers(1, 9))
        r = rng.integers(0, 50, k).tolist()
        p = rng.integers(1, 20, k).tolist()
        d = rng.integers(0, 120, k).tolist()
        _, val = solve_one_machine_lmax(OneMachineProblem(r, p, d))
        agree += val == _enumerate_lmax(r, p, d)
    return record(8, "one-machine exactness", agree == 500, f"{agree}/500 match enumeration")


# 9 ------------------------------------------------------------------------
def check_export_integrity():
    checked = failed = 0
    for seed in range(20):
        inst = generate_random_instance(2 + seed % 6, 2 + (seed * 3) % 5, seed)
        model = parse_lp(export_disjunctive_lp(inst))
        assert model.big_m == 1 + int(inst.durations.sum())
        schedules = [dispatch(inst, r) for r in ("SPT", "MWR", "MOR")]
        schedules += [shifting_bottleneck(inst), compile_restricted(inst, "m2", width=50).schedules[0]]
        for s in schedules:
            checked += 1
            failed += bool(model.violations(parse_start_vector(export_start_vector(inst, s))))
    binaries = len(build_mip_model(generate_random_instance(10, 10, 0)).binaries)
    ok = failed == 0 and binaries == 450
    return record(9, "export integrity", ok, f"{checked - failed}/{checked} start vectors feasible, 10x10 binaries={binaries}")


CHECKS = [
    check_oracle_equivalence,
    check_restricted_feasibility,
    check_symmetry_reduction,
    check_lns1_improvement,
    check_jsplib_bands,
    check_relaxed_bounds,
    check_balas_reversals,
    check_one_machine,
    check_export_integrity,
]


@pytest.mark.parametrize("check", CHECKS, ids=[f"AC{i + 1}-{c.__name__[6:]}" for i, c in enumerate(CHECKS)])
def test_acceptance(check):
    assert check(), RESULTS[CHECKS.index(check) + 1]


if __name__ == "__main__":
    results = [c() for c in CHECKS]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
