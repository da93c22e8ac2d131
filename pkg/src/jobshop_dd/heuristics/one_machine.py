"""Exact solver for one machine with release dates, minimizing max lateness.

Internally the problem is stated with delivery tails ``q_j = K - d_j``
(``K = max d``) so that minimizing ``max(C_j + q_j)`` minimizes lateness.
The search is Carlier's branch and bound: each node runs the Schrage list
schedule, locates the critical block and its interference job, and branches
on putting that job before or after the rest of the block.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class OneMachineProblem:
    release: tuple
    processing: tuple
    due: tuple

    def __post_init__(self):
        if not (len(self.release) == len(self.processing) == len(self.due)):
            raise ValueError("release, processing and due must have equal length")
        if not self.release:
            raise ValueError("need at least one job")
        if min(self.release) < 0 or min(self.processing) < 0:
            raise ValueError("release and processing times must be >= 0")

    @classmethod
    def from_tails(cls, release, processing, tails) -> "OneMachineProblem":
        k = max(tails)
        return cls(tuple(release), tuple(processing), tuple(k - q for q in tails))

    @property
    def size(self) -> int:
        return len(self.release)


def lateness(problem: OneMachineProblem, sequence: Sequence[int]) -> int:
    t = 0
    worst = None
    for j in sequence:
        t = max(t, problem.release[j]) + problem.processing[j]
        late = t - problem.due[j]
        worst = late if worst is None else max(worst, late)
    return worst


def _schrage(r, p, q):
    """List schedule: whenever the machine frees up, start the released job
    with the largest tail (ties: lowest index)."""
    n = len(r)
    by_release = sorted(range(n), key=lambda j: (r[j], j))
    ready: list = []
    seq, start = [], [0] * n
    t, i = 0, 0
    while len(seq) < n:
        if not ready and i < n and r[by_release[i]] > t:
            t = r[by_release[i]]
        while i < n and r[by_release[i]] <= t:
            j = by_release[i]
            heapq.heappush(ready, (-q[j], j))
            i += 1
        _, j = heapq.heappop(ready)
        start[j] = t
        seq.append(j)
        t += p[j]
    return seq, start


def _preemptive_bound(r, p, q) -> int:
    """Jackson's preemptive schedule value, a lower bound on max(C+q)."""
    n = len(r)
    by_release = sorted(range(n), key=lambda j: (r[j], j))
    left = list(p)
    ready: list = []
    t, i, best, done = 0, 0, 0, 0
    while done < n:
        if not ready:
            t = max(t, r[by_release[i]])
        while i < n and r[by_release[i]] <= t:
            j = by_release[i]
            heapq.heappush(ready, (-q[j], j))
            i += 1
        _, j = ready[0]
        horizon = r[by_release[i]] if i < n else None
        run = left[j] if horizon is None else min(left[j], horizon - t)
        t += run
        left[j] -= run
        if left[j] == 0:
            heapq.heappop(ready)
            best = max(best, t + q[j])
            done += 1
    return best


def _evaluate(r, p, q, seq) -> int:
    t, best = 0, 0
    for j in seq:
        t = max(t, r[j]) + p[j]
        best = max(best, t + q[j])
    return best


def carlier(release, processing, tails, node_cap: int = 200_000) -> tuple[list[int], int]:
    """Optimal sequence for ``1|r_j|max(C_j + q_j)`` and its value."""
    r0, p, q0 = list(release), list(processing), list(tails)
    n = len(p)
    seq, _ = _schrage(r0, p, q0)
    best_seq, ub = seq, _evaluate(r0, p, q0, seq)
    stack = [(r0, q0)]
    nodes = 0
    while stack:
        r, q = stack.pop()
        nodes += 1
        if nodes > node_cap:
            break
        seq, start = _schrage(r, p, q)
        val = _evaluate(r0, p, q0, seq)
        if val < ub:
            best_seq, ub = seq, val
        node_val = _evaluate(r, p, q, seq)
        # critical job b: last one attaining the schedule value
        pos_b = max(i for i, j in enumerate(seq) if start[j] + p[j] + q[j] == node_val)
        # block start a: earliest position with no idle time up to b
        pos_a = pos_b
        while pos_a > 0 and start[seq[pos_a - 1]] + p[seq[pos_a - 1]] == start[seq[pos_a]]:
            pos_a -= 1
        b = seq[pos_b]
        pos_c = None
        for i in range(pos_b - 1, pos_a - 1, -1):
            if q[seq[i]] < q[b]:
                pos_c = i
                break
        if pos_c is None:
            continue  # Schrage is optimal for this node
        c = seq[pos_c]
        block = seq[pos_c + 1 : pos_b + 1]
        r_j = min(r[j] for j in block)
        q_j = min(q[j] for j in block)
        p_j = sum(p[j] for j in block)
        h_block = r_j + p_j + q_j
        h_with_c = min(r_j, r[c]) + p_j + p[c] + min(q_j, q[c])
        children = []
        # c after the block
        r2 = list(r)
        r2[c] = max(r[c], r_j + p_j)
        # c before the block
        q2 = list(q)
        q2[c] = max(q[c], p_j + q_j)
        for rr, qq in ((r, q2), (r2, q)):
            lb = max(h_block, h_with_c, _preemptive_bound(rr, p, qq))
            if lb < ub:
                children.append((lb, rr, qq))
        # explore the child with the smaller bound first
        children.sort(key=lambda t: t[0], reverse=True)
        stack.extend((rr, qq) for _, rr, qq in children)
    assert len(best_seq) == n
    return best_seq, ub


def solve_one_machine_lmax(problem: OneMachineProblem) -> tuple[list[int], int]:
    """Sequence minimizing maximum lateness, and that lateness."""
    k = max(problem.due)
    tails = [k - d for d in problem.due]
    seq, val = carlier(problem.release, problem.processing, tails)
    return seq, val - k
