"""Layered compilation of restricted, relaxed and exact decision diagrams.

Exact layers are held as int64 row arrays (see :mod:`jobshop_dd.kernels`)
so that expansion, deduplication and ranking run vectorized.  Relaxed layers
hold :class:`~jobshop_dd.dd.state.StateRelax` objects because merged states
no longer fit a fixed row layout.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from jobshop_dd import kernels
from jobshop_dd.dd.state import (
    MERGE_MODES,
    StateM1,
    StateM2,
    StateRelax,
    as_relaxed,
)
from jobshop_dd.instance import Instance, OperationId, schedule_from_order

log = logging.getLogger(__name__)

MODELS = {"m1": kernels.MODEL1, "m2": kernels.MODEL2, 1: kernels.MODEL1, 2: kernels.MODEL2}
RANKS = ("cost", "cost_plus_trailer")
FULL_EXPANSION_CAP = 50_000_000


class NodeCapExceeded(RuntimeError):
    pass


def _model(model) -> int:
    try:
        return MODELS[model]
    except KeyError:
        raise ValueError(f"unknown model {model!r}, expected 'm1' or 'm2'") from None


# ---------------------------------------------------------------------------
# row <-> state conversion


def _ncols(n, m, model):
    return n + m + (n * m if model == kernels.MODEL1 else n)


def root_row(instance: Instance, model) -> np.ndarray:
    n, m = instance.machines.shape
    return np.zeros((1, _ncols(n, m, _model(model))), np.int64)


def state_to_row(instance: Instance, state) -> np.ndarray:
    """Row encoding of an exact Model 1 or Model 2 state."""
    if isinstance(state, StateRelax):
        if not state.exact:
            raise ValueError("only exact states have a row encoding")
        state = state.base
    n, m = instance.machines.shape
    model = kernels.MODEL1 if isinstance(state, StateM1) else kernels.MODEL2
    row = np.zeros(_ncols(n, m, model), np.int64)
    done = state.done
    for j in range(n):
        p = 0
        while p < m and OperationId(j, p) in done:
            p += 1
        if any(o.job == j and o.position >= p for o in done):
            raise ValueError(f"done set of job {j} is not a prefix")
        row[j] = p
    row[n : n + m] = state.f_M
    for x, t in state.f_O.items():
        if model == kernels.MODEL1:
            row[n + m + x.job * m + x.position] = t
        elif x in state.V:
            row[n + m + x.job] = t
    return row


def _root_model(state) -> int:
    base = state.base if isinstance(state, StateRelax) else state
    return kernels.MODEL1 if isinstance(base, StateM1) else kernels.MODEL2


def row_to_state(instance: Instance, row, model):
    n, m = instance.machines.shape
    model = _model(model)
    row = np.asarray(row)
    f_M = tuple(int(v) for v in row[n : n + m])
    if model == kernels.MODEL1:
        V = frozenset(OperationId(j, k) for j in range(n) for k in range(int(row[j])))
        f_O = {x: int(row[n + m + x.job * m + x.position]) for x in V}
        return StateM1(V, f_O, f_M)
    V = frozenset(OperationId(j, int(row[j]) - 1) for j in range(n) if row[j] > 0)
    V_L = frozenset(OperationId(j, k) for j in range(n) for k in range(int(row[j]) - 1))
    f_O = {x: int(row[n + m + x.job]) for x in V}
    return StateM2(V, V_L, f_O, f_M)


# ---------------------------------------------------------------------------
# ranking


class _Bounds:
    """Per-instance tables for the trailer-based rank."""

    def __init__(self, instance: Instance):
        n, m = instance.machines.shape
        work = np.zeros((n, m + 1, m), np.int64)
        for j in range(n):
            for k in range(m):
                work[j, k + 1] = work[j, k]
                work[j, k + 1, instance.machines[j, k]] += instance.durations[j, k]
        self.machine_done = work
        self.machine_total = work[:, m, :].sum(axis=0)
        rem = np.zeros((n, m + 1), np.int64)
        rem[:, :m] = np.cumsum(instance.durations[:, ::-1], axis=1)[:, ::-1]
        self.job_rem = rem

    def lower_bound(self, rows, n, m, model):
        prog = rows[:, :n]
        fm = rows[:, n : n + m]
        jidx = np.arange(n)
        done = self.machine_done[jidx, prog].sum(axis=1)  # (k, m)
        mach = (fm + self.machine_total - done).max(axis=1)
        if model == kernels.MODEL1:
            flat = jidx * m + np.maximum(prog - 1, 0)
            ready = np.where(prog > 0, np.take_along_axis(rows[:, n + m :], flat, axis=1), 0)
        else:
            ready = rows[:, n + m :]
        job = (ready + self.job_rem[jidx, prog]).max(axis=1)
        return np.maximum(mach, job)


def _score(rows, n, m, model, rank, bounds):
    if rank == "cost":
        return rows[:, n : n + m].max(axis=1)
    return bounds.lower_bound(rows, n, m, model)


def _canonical_order(rows, score):
    keys = tuple(rows[:, c] for c in range(rows.shape[1] - 1, -1, -1)) + (score,)
    return np.lexsort(keys)


# ---------------------------------------------------------------------------
# restricted


class RestrictedResult(NamedTuple):
    makespan: int
    orders: list  # suffix op orders of the best terminal nodes
    schedules: list  # full schedules, only when compiled from the root


@dataclass
class NodeStats:
    instance: str
    model: str
    rows: list = field(default_factory=list)

    def add(self, layer, before, after, merges=0, prunes=0):
        self.rows.append((self.instance, self.model, layer, before, after, merges, prunes))

    def write_csv(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance", "model", "layer", "width_before", "width_after", "merges", "prunes"])
        w.writerows(self.rows)


def compile_restricted(
    instance: Instance,
    model="m2",
    width: int | None = 200,
    rank: str = "cost",
    collect: int = 1,
    root=None,
    stats: NodeStats | None = None,
) -> RestrictedResult:
    """Width-limited top-down compilation; always reaches the terminal layer.

    Each layer keeps the ``width`` best distinct states by ``rank`` (ties:
    lexicographically smallest state row).  ``width=None`` keeps everything.
    """
    if width is not None and width < 1:
        raise ValueError("width must be >= 1")
    if rank not in RANKS:
        raise ValueError(f"unknown rank {rank!r}")
    if collect < 1:
        raise ValueError("collect must be >= 1")
    mdl = _model(model) if root is None else _root_model(root)
    n, m = instance.machines.shape
    mach, dur = instance._flat_mach, instance._flat_dur
    bounds = _Bounds(instance) if rank != "cost" else None
    rows = root_row(instance, mdl) if root is None else state_to_row(instance, root)[None, :]
    depth0 = int(rows[0, :n].sum())
    parents, jobs = [], []
    for layer in range(depth0, instance.n_ops):
        child, parent, job = kernels.expand_layer(rows, mach, dur, n, m, mdl)
        keep = kernels.unique_rows(child)
        child, parent, job = child[keep], parent[keep], job[keep]
        before = child.shape[0]
        order = _canonical_order(child, _score(child, n, m, mdl, rank, bounds))
        if width is not None:
            order = order[:width]
        rows = child[order]
        parents.append(parent[order])
        jobs.append(job[order])
        if stats is not None:
            stats.add(layer + 1, before, rows.shape[0])
    if not parents:
        return RestrictedResult(int(rows[0, n : n + m].max()), [[]], [])
    final = rows[:, n : n + m].max(axis=1)
    best = np.lexsort(tuple(rows[:, c] for c in range(rows.shape[1] - 1, -1, -1)) + (final,))[:collect]
    orders = []
    for idx in best:
        seq = []
        i = int(idx)
        for lvl in range(len(parents) - 1, -1, -1):
            seq.append(int(jobs[lvl][i]))
            i = int(parents[lvl][i])
        seq.reverse()
        prog = np.zeros(n, np.int64) if root is None else state_to_row(instance, root)[:n].copy()
        ops = []
        for j in seq:
            ops.append(OperationId(j, int(prog[j])))
            prog[j] += 1
        orders.append(ops)
    schedules = [schedule_from_order(instance, o) for o in orders] if depth0 == 0 else []
    return RestrictedResult(int(final[best[0]]), orders, schedules)


# ---------------------------------------------------------------------------
# exact


class ExpansionResult(NamedTuple):
    optimum: int
    valid_nodes: int
    duplicates_folded: int


def full_expansion(
    instance: Instance,
    model="m2",
    cap: int = FULL_EXPANSION_CAP,
    stats: NodeStats | None = None,
) -> ExpansionResult:
    """Untruncated compilation: optimum plus node counts.

    ``valid_nodes`` counts distinct states over all layers (root included),
    ``duplicates_folded`` the generated children that matched a state already
    present in their layer.
    """
    mdl = _model(model)
    n, m = instance.machines.shape
    mach, dur = instance._flat_mach, instance._flat_dur
    rows = root_row(instance, mdl)
    valid, dups = 1, 0
    for layer in range(instance.n_ops):
        child, _, _ = kernels.expand_layer(rows, mach, dur, n, m, mdl)
        keep = kernels.unique_rows(child)
        dups += child.shape[0] - keep.shape[0]
        rows = child[keep]
        valid += rows.shape[0]
        if stats is not None:
            stats.add(layer + 1, child.shape[0], rows.shape[0])
        if valid > cap:
            raise NodeCapExceeded(f"full expansion exceeded {cap} nodes at layer {layer + 1}")
    return ExpansionResult(int(rows[:, n : n + m].max(axis=1).min()), valid, dups)


# ---------------------------------------------------------------------------
# relaxed
#
# A relaxed row is [f_M (m) | status (N) | maybe (N) | time (N)] over the
# N = n*m ops in job-major order.  status is 0 (not surely done), 1 (surely
# done with a stored time: V) or 2 (long-done, Model 2 V_L).  maybe flags
# V_s.  time holds f_O on status 1 and f_s on maybe ops, -1 elsewhere.

_NO_TIME = -1


def relaxed_to_row(instance: Instance, state) -> np.ndarray:
    state = as_relaxed(state)
    n, m = instance.machines.shape
    N = n * m
    row = np.zeros(m + 3 * N, np.int64)
    row[:m] = state.f_M
    status, maybe, time = row[m : m + N], row[m + N : m + 2 * N], row[m + 2 * N :]
    time[:] = _NO_TIME
    base = state.base
    for x in base.V:
        status[x.job * m + x.position] = 1
        time[x.job * m + x.position] = base.f_O[x]
    for x in getattr(base, "V_L", ()):
        status[x.job * m + x.position] = 2
    for x in state.V_s:
        maybe[x.job * m + x.position] = 1
    for x, t in state.f_s.items():
        time[x.job * m + x.position] = t
    return row


def row_to_relaxed(instance: Instance, row, model) -> StateRelax:
    n, m = instance.machines.shape
    N = n * m
    row = np.asarray(row)
    f_M = tuple(int(v) for v in row[:m])
    status, maybe, time = row[m : m + N], row[m + N : m + 2 * N], row[m + 2 * N :]
    ops = [OperationId(i // m, i % m) for i in range(N)]
    V = frozenset(ops[i] for i in np.flatnonzero(status == 1))
    f_O = {ops[i]: int(time[i]) for i in np.flatnonzero(status == 1)}
    if _model(model) == kernels.MODEL1:
        base = StateM1(V, f_O, f_M)
    else:
        base = StateM2(V, frozenset(ops[i] for i in np.flatnonzero(status == 2)), f_O, f_M)
    V_s = frozenset(ops[i] for i in np.flatnonzero(maybe))
    f_s = {ops[i]: int(time[i]) for i in np.flatnonzero(maybe.astype(bool) & (time >= 0))}
    return StateRelax(base, V_s, f_s)


def relaxed_children(rows, mach, dur, n, m, model):
    """Every relaxed transition out of ``rows``.

    Returns ``(children, parent_index)`` in parent-major, op-minor order.
    """
    N = n * m
    st, mb, tm = rows[:, m : m + N], rows[:, m + N : m + 2 * N], rows[:, m + 2 * N :]
    first = (np.arange(N) % m) == 0
    pre_ok = np.ones_like(st, dtype=bool)
    pre_ok[:, 1:] = (st[:, :-1] > 0) | (mb[:, :-1] > 0)
    pre_ok[:, first] = True
    parent, x = np.nonzero((st == 0) & pre_ok)
    kids = rows[parent].copy()
    has_pre = ~first[x]
    pre = np.where(has_pre, x - 1, 0)
    pre_t = np.where(has_pre, np.maximum(tm[parent, pre], 0), 0)
    mk = mach[x]
    c = np.maximum(kids[np.arange(len(x)), mk], pre_t) + dur[x]
    r = np.arange(len(x))
    kids[r, mk] = c
    kids[r, m + x] = 1
    kids[r, m + N + x] = 0
    kids[r, m + 2 * N + x] = c
    if model == kernels.MODEL2:
        rp, pp = r[has_pre], pre[has_pre]
        kids[rp, m + pp] = 2
        kids[rp, m + N + pp] = 0
        kids[rp, m + 2 * N + pp] = _NO_TIME
    return kids, parent


def merge_rows(rows, m, mode: str) -> np.ndarray:
    """Row form of :func:`~jobshop_dd.dd.state.merge_all`."""
    N = (rows.shape[1] - m) // 3
    st, mb, tm = rows[:, m : m + N], rows[:, m + N : m + 2 * N], rows[:, m + 2 * N :]
    out = np.empty(rows.shape[1], np.int64)
    out[:m] = rows[:, :m].min(axis=0)
    status = np.where((st == 1).all(axis=0), 1, np.where((st == 2).all(axis=0), 2, 0))
    maybe = ((st > 0) | (mb > 0)).any(axis=0) & (status == 0)
    if mode == "paper_max":
        t = tm.max(axis=0)
    else:
        big = np.iinfo(np.int64).max
        t = np.where(tm >= 0, tm, big).min(axis=0)
        t[t == big] = _NO_TIME
    out[m : m + N] = status
    out[m + N : m + 2 * N] = maybe
    out[m + 2 * N :] = np.where((status == 1) | maybe, t, _NO_TIME)
    return out


class RelaxedResult(NamedTuple):
    bound: float  # inf when every path was pruned
    exact: bool  # no merge happened: bound is the subtree optimum
    cutset: list  # exact states of the first merged layer, before merging
    merges: int
    prunes: int


def relaxed_dd(
    instance: Instance,
    model="m2",
    width: int | None = 16,
    primal_bound: int | None = None,
    mode: str = "paper_max",
    root=None,
    stats: NodeStats | None = None,
) -> RelaxedResult:
    """Compile a relaxed DD and report its bound and exact cutset.

    Layers are ranked by cost, ties broken by the lexicographically smallest
    row.  Over-wide layers repeatedly merge their two worst-ranked nodes;
    the merged node stays last, so the ranks from ``width`` on collapse into
    one node.  The terminal layer is never merged.  Nodes whose cost exceeds
    ``primal_bound`` are dropped.
    """
    if width is not None and width < 1:
        raise ValueError("width must be >= 1")
    if mode not in MERGE_MODES:
        raise ValueError(f"unknown merge mode {mode!r}")
    mdl = _model(model)
    if root is None:
        root = StateM1.root(instance) if mdl == kernels.MODEL1 else StateM2.root(instance)
    root = as_relaxed(root)
    if (root.model == 1) != (mdl == kernels.MODEL1):
        raise ValueError("root state does not match the model")
    n, m = instance.machines.shape
    mach = instance.machines.ravel().astype(np.int64)
    dur = instance.durations.ravel().astype(np.int64)
    rows = relaxed_to_row(instance, root)[None, :]
    exact = np.array([root.exact])
    cutset = None
    merges_total = prunes_total = 0
    for depth in range(len(root.base.done), instance.n_ops):
        kids, parent = relaxed_children(rows, mach, dur, n, m, mdl)
        kid_exact = exact[parent]
        cost = kids[:, :m].max(axis=1) if len(kids) else np.empty(0, np.int64)
        prunes = 0
        if primal_bound is not None:
            keep = cost <= primal_bound
            prunes = int((~keep).sum())
            kids, kid_exact, cost = kids[keep], kid_exact[keep], cost[keep]
        if len(kids):
            view = np.ascontiguousarray(kids).view(np.dtype((np.void, 8 * kids.shape[1]))).ravel()
            _, first, inverse = np.unique(view, return_index=True, return_inverse=True)
            group_exact = np.ones(len(first), bool)
            np.logical_and.at(group_exact, inverse.ravel(), kid_exact)
            kids, kid_exact, cost = kids[first], group_exact, cost[first]
            order = _canonical_order(kids, cost)
            kids, kid_exact, cost = kids[order], kid_exact[order], cost[order]
        before = len(kids)
        merges = 0
        if width is not None and before > width and depth + 1 < instance.n_ops:
            if cutset is None and kid_exact.all():
                cutset = [row_to_relaxed(instance, r, mdl) for r in kids]
            merged = merge_rows(kids[width - 1 :], m, mode)
            merges = before - width
            kids, kid_exact = kids[: width - 1], kid_exact[: width - 1]
            twin = np.flatnonzero((kids == merged).all(axis=1))
            if len(twin):
                kid_exact[twin] = False
            else:
                kids = np.vstack([kids, merged])
                kid_exact = np.append(kid_exact, False)
        merges_total += merges
        prunes_total += prunes
        if stats is not None:
            stats.add(depth + 1, before, len(kids), merges, prunes)
        rows, exact = kids, kid_exact
        if not len(rows):
            break
    bound = int(rows[:, :m].max(axis=1).min()) if len(rows) else float("inf")
    return RelaxedResult(bound, merges_total == 0, cutset or [], merges_total, prunes_total)


def compile_relaxed(
    instance: Instance,
    model="m2",
    width: int | None = 16,
    primal_bound: int | None = None,
    mode: str = "paper_max",
    stats: NodeStats | None = None,
):
    """Lower-bound candidate from a relaxed DD (``inf`` if all paths pruned)."""
    return relaxed_dd(instance, model, width, primal_bound, mode, stats=stats).bound
