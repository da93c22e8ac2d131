"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

Operations are addressed by their flat index ``job * m + position``.  The
public wrappers at the bottom dispatch on :data:`jobshop_dd._jit.USE_JIT`.
"""

import numpy as np

from jobshop_dd import _jit
from jobshop_dd._jit import njit

MODEL1 = 1
MODEL2 = 2


# ---------------------------------------------------------------------------
# cost from a partial order


def _cfp_py(order, mach, dur, m, fm_init, done):
    fm = fm_init.copy()
    times = done.copy()
    for i in range(order.shape[0]):
        x = order[i]
        s = fm[mach[x]]
        if x % m != 0:
            t = times[x - 1]
            if t < 0:
                return -1, i, fm, times
            if t > s:
                s = t
        c = s + dur[x]
        times[x] = c
        fm[mach[x]] = c
    best = 0
    for k in range(fm.shape[0]):
        if fm[k] > best:
            best = fm[k]
    return best, -1, fm, times


_cfp_jit = njit(_cfp_py)


def cfp(order, mach, dur, m, fm_init, done):
    """Run the cost-from-partial recurrence over ``order``.

    ``done`` holds completion times per flat op, ``-1`` where unknown.
    Returns ``(makespan, bad_index, machine_finish, times)``; ``bad_index`` is
    the position in ``order`` of the first op missing its job predecessor, or
    ``-1``.
    """
    fn = _cfp_jit if _jit.USE_JIT else _cfp_py
    return fn(order, mach, dur, m, fm_init, done)


# ---------------------------------------------------------------------------
# longest paths in a disjunctive graph
#
# Every op has at most one job predecessor/successor and at most one machine
# predecessor/successor (-1 for none), so the graph is stored as four arrays.


def _longest_path_py(job_succ, job_pred, mach_succ, mach_pred, dur):
    n_ops = dur.shape[0]
    indeg = np.zeros(n_ops, np.int64)
    for v in range(n_ops):
        if job_pred[v] >= 0:
            indeg[v] += 1
        if mach_pred[v] >= 0:
            indeg[v] += 1
    topo = np.empty(n_ops, np.int64)
    head = 0
    tail = 0
    for v in range(n_ops):
        if indeg[v] == 0:
            topo[tail] = v
            tail += 1
    start = np.zeros(n_ops, np.int64)
    crit = np.full(n_ops, -1, np.int64)
    while head < tail:
        u = topo[head]
        head += 1
        for s in (job_succ[u], mach_succ[u]):
            if s < 0:
                continue
            indeg[s] -= 1
            if indeg[s] == 0:
                topo[tail] = s
                tail += 1
    if tail < n_ops:
        return start, start.copy(), crit, False
    # forward pass: heads; ties go to the lowest-indexed predecessor
    for i in range(n_ops):
        v = topo[i]
        a = job_pred[v]
        b = mach_pred[v]
        best = 0
        arg = -1
        if a >= 0 and b >= 0 and b < a:
            a, b = b, a
        if a >= 0:
            val = start[a] + dur[a]
            if val > best or arg < 0:
                best = val
                arg = a
        if b >= 0:
            val = start[b] + dur[b]
            if val > best or arg < 0:
                best = val
                arg = b
        start[v] = best
        crit[v] = arg
    tails = np.zeros(n_ops, np.int64)
    for i in range(n_ops - 1, -1, -1):
        v = topo[i]
        best = 0
        for s in (job_succ[v], mach_succ[v]):
            if s >= 0:
                val = dur[s] + tails[s]
                if val > best:
                    best = val
        tails[v] = best
    return start, tails, crit, True


_longest_path_jit = njit(_longest_path_py)


def longest_path(job_succ, job_pred, mach_succ, mach_pred, dur):
    """Heads, tails and critical predecessors of every op.

    Returns ``(start, tail, crit_pred, acyclic)``.  ``start[v]`` is the longest
    source-to-v distance, ``tail[v]`` the longest distance from v's completion
    to the sink, ``crit_pred[v]`` the maximizing predecessor (``-1`` = source).
    """
    fn = _longest_path_jit if _jit.USE_JIT else _longest_path_py
    return fn(job_succ, job_pred, mach_succ, mach_pred, dur)


# ---------------------------------------------------------------------------
# decision-diagram layer expansion
#
# Exact states are int64 rows laid out as
#   model 1: [progress (n) | machine finish (m) | op completion (n*m)]
#   model 2: [progress (n) | machine finish (m) | last-op completion (n)]


def _expand_py(rows, mach, dur, n, m, model):
    k = rows.shape[0]
    width = rows.shape[1]
    count = 0
    for r in range(k):
        for j in range(n):
            if rows[r, j] < m:
                count += 1
    out = np.empty((count, width), np.int64)
    parent = np.empty(count, np.int64)
    job = np.empty(count, np.int64)
    c = 0
    for r in range(k):
        for j in range(n):
            pos = rows[r, j]
            if pos >= m:
                continue
            x = j * m + pos
            mk = mach[x]
            s = rows[r, n + mk]
            if pos > 0:
                if model == 1:
                    t = rows[r, n + m + x - 1]
                else:
                    t = rows[r, n + m + j]
                if t > s:
                    s = t
            fin = s + dur[x]
            for q in range(width):
                out[c, q] = rows[r, q]
            out[c, j] = pos + 1
            out[c, n + mk] = fin
            if model == 1:
                out[c, n + m + x] = fin
            else:
                out[c, n + m + j] = fin
            parent[c] = r
            job[c] = j
            c += 1
    return out, parent, job


_expand_jit = njit(_expand_py)


def _expand_np(rows, mach, dur, n, m, model):
    k, width = rows.shape
    blocks = np.repeat(rows[:, None, :], n, axis=1)  # (k, n, width)
    ridx = np.arange(k)
    for j in range(n):
        pos = rows[:, j]
        safe = np.minimum(pos, m - 1)
        x = j * m + safe
        mk = mach[x]
        s = rows[ridx, n + mk]
        if model == MODEL1:
            prev = np.where(pos > 0, rows[ridx, n + m + np.maximum(x - 1, 0)], 0)
        else:
            prev = np.where(pos > 0, rows[:, n + m + j], 0)
        fin = np.maximum(s, prev) + dur[x]
        blk = blocks[:, j, :]
        blk[:, j] = pos + 1
        blk[ridx, n + mk] = fin
        if model == MODEL1:
            blk[ridx, n + m + x] = fin
        else:
            blk[:, n + m + j] = fin
    live = rows[:, :n] < m  # (k, n)
    flat = blocks.reshape(k * n, width)[live.ravel()]
    parent = np.repeat(ridx, n)[live.ravel()]
    job = np.tile(np.arange(n), k)[live.ravel()]
    return np.ascontiguousarray(flat), parent, job


def expand_layer(rows, mach, dur, n, m, model):
    """All feasible children of every row, in parent-major, job-minor order.

    Returns ``(children, parent_index, job_index)``.
    """
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    if _jit.USE_JIT:
        return _expand_jit(rows, mach, dur, n, m, model)
    return _expand_np(rows, mach, dur, n, m, model)


def unique_rows(rows):
    """Indices of the first occurrence of each distinct row, in input order."""
    rows = np.ascontiguousarray(rows)
    if rows.shape[0] == 0:
        return np.empty(0, np.int64)
    view = rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()
    _, first = np.unique(view, return_index=True)
    first.sort()
    return first
