"""Exact searches over the decision-diagram state space."""

from __future__ import annotations

import heapq
import itertools
from typing import NamedTuple

import numpy as np

from jobshop_dd.dd.compile import NodeCapExceeded, compile_restricted, relaxed_dd
from jobshop_dd.dd.state import StateM1, StateM2, as_relaxed
from jobshop_dd.instance import Instance

BNB_NODE_CAP = 1_000_000
ASTAR_CAP = 10_000_000
HEURISTICS = ("zero", "trailer_max")


class SearchResult(NamedTuple):
    optimum: int
    nodes: int  # B&B: subproblems processed; A*: states expanded


def dd_branch_and_bound(
    instance: Instance,
    width: int | None = 8,
    model: str = "m2",
    node_cap: int = BNB_NODE_CAP,
) -> SearchResult:
    """Branch and bound over exact cutsets of relaxed DDs.

    Each subproblem root gets a restricted DD (primal update) and a relaxed
    DD with min-mode merging, pruned at the incumbent.  If the relaxed DD
    needed no merge it solved the subtree outright; otherwise, unless its
    bound already matches the incumbent, the exact nodes of its first merged
    layer are queued.  A cutset state already branched on is skipped, since
    its subtree does not depend on the path that reached it.
    """
    root = StateM1.root(instance) if model in ("m1", 1) else StateM2.root(instance)
    incumbent = compile_restricted(instance, model, width).makespan
    stack = [as_relaxed(root)]
    seen = set()
    processed = 0
    while stack:
        u = stack.pop()
        if u in seen:
            continue
        seen.add(u)
        processed += 1
        if processed > node_cap:
            raise NodeCapExceeded(f"branch and bound exceeded {node_cap} subproblems")
        incumbent = min(incumbent, compile_restricted(instance, model, width, root=u).makespan)
        rel = relaxed_dd(instance, model, width, primal_bound=incumbent - 1, mode="min", root=u)
        if rel.exact:
            if rel.bound < incumbent:
                incumbent = int(rel.bound)
            continue
        if rel.bound >= incumbent:
            continue
        stack.extend(reversed(rel.cutset))
    return SearchResult(int(incumbent), processed)


def _trailer_tables(instance: Instance):
    n, m = instance.machines.shape
    mach_left = np.zeros((n, m + 1, m), np.int64)  # work of job j on each machine from position p on
    for j in range(n):
        for k in range(m - 1, -1, -1):
            mach_left[j, k] = mach_left[j, k + 1]
            mach_left[j, k, instance.machines[j, k]] += instance.durations[j, k]
    job_left = mach_left.sum(axis=2)
    return mach_left.tolist(), job_left.tolist()


def a_star_search(
    instance: Instance,
    heuristic: str = "trailer_max",
    cap: int = ASTAR_CAP,
) -> SearchResult:
    """Best-first search over Model 2 states.

    The priority of a state is the largest of its partial makespan and, with
    ``trailer_max``, the machine bounds ``finish + remaining work`` and job
    bounds ``ready + remaining work``.  Both estimates never exceed the
    optimum and never decrease along a path, so the first complete state
    popped is optimal.
    """
    if heuristic not in HEURISTICS:
        raise ValueError(f"unknown heuristic {heuristic!r}")
    n, m = instance.machines.shape
    mach = instance.machines.tolist()
    dur = instance.durations.tolist()
    mach_left, job_left = _trailer_tables(instance)
    use_trailer = heuristic == "trailer_max"

    def priority(prog, fm, jr):
        f = max(fm)
        if use_trailer:
            for k in range(m):
                rem = fm[k] + sum(mach_left[j][prog[j]][k] for j in range(n))
                if rem > f:
                    f = rem
            for j in range(n):
                rem = jr[j] + job_left[j][prog[j]]
                if rem > f:
                    f = rem
        return f

    total = n * m
    start = ((0,) * n, (0,) * m, (0,) * n)
    tick = itertools.count()
    heap = [(priority(*start), 0, next(tick), start)]
    closed = set()
    expanded = 0
    while heap:
        f, neg_depth, _, state = heapq.heappop(heap)
        if state in closed:
            continue
        closed.add(state)
        prog, fm, jr = state
        if -neg_depth == total:
            return SearchResult(max(fm), expanded)
        expanded += 1
        if expanded > cap:
            raise NodeCapExceeded(f"A* exceeded {cap} expansions")
        for j in range(n):
            p = prog[j]
            if p == m:
                continue
            k = mach[j][p]
            c = max(fm[k], jr[j]) + dur[j][p]
            child = (
                prog[:j] + (p + 1,) + prog[j + 1 :],
                fm[:k] + (c,) + fm[k + 1 :],
                jr[:j] + (c,) + jr[j + 1 :],
            )
            if child not in closed:
                heapq.heappush(heap, (priority(*child), neg_depth - 1, next(tick), child))
    raise RuntimeError("search space exhausted without a complete schedule")
