"""Disjunctive graphs of complete machine orderings and Balas-style refinement.

A graph is stored as the instance plus one op permutation per machine.  Only
the arcs between consecutive ops on a machine are materialized; the
transitive ones are implied by them and never lengthen a path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from jobshop_dd import kernels
from jobshop_dd.instance import Instance, OperationId, Schedule

SOURCE = "source"
SINK = "sink"


class CyclicGraphError(ValueError):
    pass


class Arc(NamedTuple):
    u: object
    v: object
    weight: int
    fixed: bool


class CriticalPath(NamedTuple):
    arcs: list[Arc]
    length: int

    @property
    def ops(self) -> list[OperationId]:
        return [a.v for a in self.arcs[:-1]]


@dataclass(frozen=True, eq=False)
class DisjunctiveGraph:
    instance: Instance
    orders: np.ndarray  # (m, n) flat op indices, one row per machine

    def __post_init__(self):
        o = np.array(self.orders, dtype=np.int64)
        o.setflags(write=False)
        object.__setattr__(self, "orders", o)

    def machine_orders(self) -> list[list[OperationId]]:
        return [[self.instance.op_at(x) for x in row] for row in self.orders]

    def arrays(self):
        """``(job_succ, job_pred, mach_succ, mach_pred, dur)`` kernel inputs."""
        js, jp = _job_links(self.instance)
        ms, mp = _machine_links(self.orders, self.instance.n_ops)
        return js, jp, ms, mp, self.instance._flat_dur

    @property
    def arcs(self) -> list[Arc]:
        inst = self.instance
        n, m = inst.machines.shape
        arcs = []
        for j in range(n):
            arcs.append(Arc(SOURCE, OperationId(j, 0), 0, True))
            for k in range(m - 1):
                arcs.append(Arc(OperationId(j, k), OperationId(j, k + 1), int(inst.durations[j, k]), True))
            arcs.append(Arc(OperationId(j, m - 1), SINK, int(inst.durations[j, m - 1]), True))
        for row in self.orders:
            for a, b in zip(row[:-1], row[1:]):
                u = inst.op_at(a)
                arcs.append(Arc(u, inst.op_at(b), inst.duration_of(u), False))
        return arcs

    def key(self) -> bytes:
        return self.orders.tobytes()

    def dump(self) -> str:
        """One line per machine listing its ops in processing order."""
        return "\n".join(
            f"M{k}: " + " ".join(f"{x // self.instance.n_machines},{x % self.instance.n_machines}" for x in row)
            for k, row in enumerate(self.orders)
        )


_LINK_CACHE: dict = {}


def _job_links(instance: Instance):
    key = instance.machines.shape
    if key not in _LINK_CACHE:
        n, m = key
        idx = np.arange(n * m).reshape(n, m)
        succ = np.full((n, m), -1, np.int64)
        pred = np.full((n, m), -1, np.int64)
        succ[:, :-1] = idx[:, 1:]
        pred[:, 1:] = idx[:, :-1]
        succ.setflags(write=False)
        pred.setflags(write=False)
        _LINK_CACHE[key] = (succ.ravel(), pred.ravel())
    return _LINK_CACHE[key]


def _machine_links(orders: np.ndarray, n_ops: int):
    succ = np.full(n_ops, -1, np.int64)
    pred = np.full(n_ops, -1, np.int64)
    if orders.shape[1] > 1:
        succ[orders[:, :-1]] = orders[:, 1:]
        pred[orders[:, 1:]] = orders[:, :-1]
    return succ, pred


def build_graph(instance: Instance, machine_orders: Sequence[Sequence]) -> DisjunctiveGraph:
    m = instance.n_machines
    if len(machine_orders) != m:
        raise ValueError(f"expected {m} machine orders, got {len(machine_orders)}")
    rows = []
    for k, order in enumerate(machine_orders):
        flat = []
        for op in order:
            op = OperationId(*op)
            if instance.machine_of(op) != k:
                raise ValueError(f"{op} is not processed on machine {k}")
            flat.append(instance.flat(op))
        if len(set(flat)) != len(flat):
            raise ValueError(f"machine {k} order contains a duplicate op")
        if len(flat) != instance.n_jobs:
            raise ValueError(f"machine {k} order must list all {instance.n_jobs} of its ops")
        rows.append(flat)
    return DisjunctiveGraph(instance, np.array(rows, np.int64))


def graph_from_schedule(instance: Instance, schedule: Schedule) -> DisjunctiveGraph:
    return build_graph(instance, schedule.machine_orders(instance))


def _critical(graph: DisjunctiveGraph, arrays=None):
    js, jp, ms, mp, dur = arrays if arrays is not None else graph.arrays()
    start, tail, crit, ok = kernels.longest_path(js, jp, ms, mp, dur)
    if not ok:
        return None
    fin = start + dur
    end = int(np.argmax(fin))  # argmax returns the lowest index among ties
    chain = [end]
    while crit[chain[-1]] >= 0:
        chain.append(int(crit[chain[-1]]))
    chain.reverse()
    return int(fin[end]), chain, start, mp


def longest_path(graph: DisjunctiveGraph) -> CriticalPath | None:
    """A critical path of ``graph``, or ``None`` when the graph has a cycle."""
    res = _critical(graph)
    if res is None:
        return None
    length, chain, _, mp = res
    inst = graph.instance
    ops = [inst.op_at(x) for x in chain]
    arcs = [Arc(SOURCE, ops[0], 0, True)]
    for a, b, fb in zip(ops, ops[1:], chain[1:]):
        arcs.append(Arc(a, b, inst.duration_of(a), bool(mp[fb] != inst.flat(a))))
    arcs.append(Arc(ops[-1], SINK, inst.duration_of(ops[-1]), True))
    return CriticalPath(arcs, length)


def is_acyclic(graph: DisjunctiveGraph) -> bool:
    return _critical(graph) is not None


def _swap(orders: np.ndarray, mach: np.ndarray, u: int, v: int) -> np.ndarray:
    out = orders.copy()
    row = out[mach[u]]
    i = int(np.flatnonzero(row == u)[0])
    row[i], row[i + 1] = v, u
    return out


def reverse_critical_arc(graph: DisjunctiveGraph, arc: Arc, path: CriticalPath | None = None) -> DisjunctiveGraph:
    """Complement a disjunctive arc of a critical path.

    The two ops trade places in their machine order, so the arcs to their
    machine neighbours follow them and the order stays total.
    """
    if arc.fixed:
        raise ValueError(f"arc {arc.u}->{arc.v} is fixed")
    if path is None:
        path = longest_path(graph)
        if path is None:
            raise CyclicGraphError("graph has a cycle")
    if not any(a.u == arc.u and a.v == arc.v and not a.fixed for a in path.arcs):
        raise ValueError(f"arc {arc.u}->{arc.v} is not on the critical path")
    inst = graph.instance
    return DisjunctiveGraph(inst, _swap(graph.orders, inst._flat_mach, inst.flat(arc.u), inst.flat(arc.v)))


def graph_to_schedule(graph: DisjunctiveGraph) -> Schedule:
    """Earliest start of every op under the graph's orientation."""
    js, jp, ms, mp, dur = graph.arrays()
    start, _, _, ok = kernels.longest_path(js, jp, ms, mp, dur)
    if not ok:
        raise CyclicGraphError("graph has a cycle")
    return Schedule.from_starts(graph.instance, start)


def lns1_refine(
    graph: DisjunctiveGraph,
    budget: int = 10_000,
    strict_descent: bool = True,
) -> tuple[int, DisjunctiveGraph]:
    """Depth-first critical-arc reversal search.

    Every non-fixed arc of the current critical path is reversed in turn and
    the search recurses on the result.  With ``strict_descent`` a branch stops
    as soon as it gets longer than its parent.  ``budget`` caps the number of
    graphs evaluated and orientations already seen are skipped.
    """
    inst = graph.instance
    js, jp = _job_links(inst)
    dur = inst._flat_dur
    mach = inst._flat_mach
    n_ops = inst.n_ops

    def evaluate(orders):
        ms, mp = _machine_links(orders, n_ops)
        return _critical(graph, (js, jp, ms, mp, dur))

    res = evaluate(graph.orders)
    if res is None:
        raise CyclicGraphError("lns1_refine needs an acyclic graph")
    best_len, best_orders = res[0], graph.orders
    seen = set()
    stack = [(graph.orders, np.iinfo(np.int64).max, res)]
    visits = 0
    while stack and visits < budget:
        orders, parent_len, res = stack.pop()
        key = orders.tobytes()
        if key in seen:
            continue
        seen.add(key)
        visits += 1
        if res is None:
            res = evaluate(orders)
            if res is None:
                continue  # zero-duration ops can make a reversal close a cycle
        length, chain, _, mp = res
        if length < best_len:
            best_len, best_orders = length, orders
        if strict_descent and length > parent_len:
            continue
        children = []
        for u, v in zip(chain, chain[1:]):
            if mp[v] == u:
                children.append((_swap(orders, mach, u, v), length, None))
        stack.extend(reversed(children))
    if best_orders is graph.orders:
        return best_len, graph
    return best_len, DisjunctiveGraph(inst, best_orders)
