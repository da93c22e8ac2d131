"""Shifting bottleneck procedure with exact one-machine subproblems."""

from __future__ import annotations

import logging

import numpy as np

from jobshop_dd import kernels
from jobshop_dd.graph import DisjunctiveGraph, _job_links, graph_to_schedule
from jobshop_dd.heuristics.one_machine import carlier
from jobshop_dd.instance import Instance, Schedule

log = logging.getLogger(__name__)


class _Partial:
    """Job arcs plus the machine sequences fixed so far."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.js, self.jp = _job_links(instance)
        self.dur = instance._flat_dur
        self.fixed: dict[int, list[int]] = {}
        self.machine_ops = [
            [instance.flat(o) for o in instance.machine_ops(k)] for k in range(instance.n_machines)
        ]

    def heads_tails(self, extra=None):
        n_ops = self.instance.n_ops
        ms = np.full(n_ops, -1, np.int64)
        mp = np.full(n_ops, -1, np.int64)
        seqs = list(self.fixed.values())
        if extra is not None:
            seqs.append(extra)
        for seq in seqs:
            for a, b in zip(seq, seq[1:]):
                ms[a] = b
                mp[b] = a
        start, tail, _, ok = kernels.longest_path(self.js, self.jp, ms, mp, self.dur)
        return start, tail, ok

    def solve(self, k, start, tail):
        ops = self.machine_ops[k]
        seq, val = carlier(
            [int(start[x]) for x in ops], [int(self.dur[x]) for x in ops], [int(tail[x]) for x in ops]
        )
        return [ops[i] for i in seq], val

    def place(self, k, seq, start):
        """Fix ``seq`` on machine k, falling back to head order on a cycle."""
        if not self.heads_tails(extra=seq)[2]:
            log.debug("machine %d sequence closes a cycle; using head order", k)
            seq = sorted(self.machine_ops[k], key=lambda x: (int(start[x]), x))
        self.fixed[k] = seq


def shifting_bottleneck(instance: Instance, reoptimize: bool = True) -> Schedule:
    """Sequence machines one at a time, bottleneck first.

    The bottleneck is the unsequenced machine whose one-machine problem
    (heads as release dates, tails as delivery times) has the largest optimal
    value; ties go to the lowest machine index.  With ``reoptimize`` every
    previously fixed machine is re-solved once after each new fixation.
    """
    part = _Partial(instance)
    m = instance.n_machines
    while len(part.fixed) < m:
        start, tail, _ = part.heads_tails()
        best_k, best_seq, best_val = None, None, None
        for k in range(m):
            if k in part.fixed:
                continue
            seq, val = part.solve(k, start, tail)
            if best_val is None or val > best_val:
                best_k, best_seq, best_val = k, seq, val
        part.place(best_k, best_seq, start)
        if reoptimize and len(part.fixed) > 1:
            for k in sorted(part.fixed):
                if k == best_k:
                    continue
                old = part.fixed.pop(k)
                start, tail, _ = part.heads_tails()
                seq, _ = part.solve(k, start, tail)
                part.place(k, seq, start)
                if not part.heads_tails()[2]:  # pragma: no cover - place() guarantees acyclicity
                    part.fixed[k] = old
    orders = np.array([part.fixed[k] for k in range(m)], np.int64)
    return graph_to_schedule(DisjunctiveGraph(instance, orders))
