"""Greedy dispatching rules."""

from __future__ import annotations

from jobshop_dd.instance import Instance, OperationId, Schedule, schedule_from_order

RULES = ("MWR", "MOR", "SPT")


FILTERS = ("active", "non_delay", "none")


def dispatch_order(instance: Instance, rule: str, ready: str = "active") -> list[OperationId]:
    """Op permutation built by repeatedly picking the best candidate op.

    Candidates are the next unplaced op of every job, narrowed by ``ready``:

    * ``active``: drop an op when another candidate on its machine would
      finish no later than it could start; a zero-duration candidate is
      placed at once.
    * ``non_delay``: keep only the ops that can start earliest.
    * ``none``: keep all of them.

    MWR favours the job with the most remaining work, MOR the job with the
    most remaining ops, SPT the shortest op.  Ties go to the lowest job.
    """
    rule = rule.upper()
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}, expected one of {RULES}")
    if ready not in FILTERS:
        raise ValueError(f"unknown ready filter {ready!r}, expected one of {FILTERS}")
    n, m = instance.machines.shape
    dur = instance.durations.tolist()
    mach = instance.machines.tolist()
    work = [sum(row) for row in dur]
    nxt = [0] * n
    job_ready = [0] * n
    mach_free = [0] * m
    order = []
    for _ in range(n * m):
        live = [j for j in range(n) if nxt[j] < m]
        est = {j: max(job_ready[j], mach_free[mach[j][nxt[j]]]) for j in live}
        if ready == "non_delay":
            t = min(est.values())
            live = [j for j in live if est[j] == t]
        elif ready == "active":
            zero = [j for j in live if dur[j][nxt[j]] == 0]
            if zero:
                live = zero[:1]
            else:
                first_end: dict = {}
                for j in live:
                    k = mach[j][nxt[j]]
                    first_end[k] = min(first_end.get(k, est[j] + dur[j][nxt[j]]), est[j] + dur[j][nxt[j]])
                live = [j for j in live if est[j] < first_end[mach[j][nxt[j]]]]
        if rule == "MWR":
            best = min(live, key=lambda j: -work[j])
        elif rule == "MOR":
            best = min(live, key=lambda j: nxt[j])
        else:
            best = min(live, key=lambda j: dur[j][nxt[j]])
        k = nxt[best]
        order.append(OperationId(best, k))
        job_ready[best] = mach_free[mach[best][k]] = est[best] + dur[best][k]
        work[best] -= dur[best][k]
        nxt[best] += 1
    return order


def dispatch(instance: Instance, rule: str, ready: str = "active") -> Schedule:
    return schedule_from_order(instance, dispatch_order(instance, rule, ready))
