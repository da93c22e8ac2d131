"""Job-shop instances, schedules and the cost-from-partial evaluator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from jobshop_dd import kernels

# time values are int64; anything near this is a bug, not a schedule
TIME_LIMIT = 2**62


class OperationId(NamedTuple):
    job: int
    position: int

    def __str__(self) -> str:
        return f"O{self.job}{self.position}" if max(self) < 10 else f"O({self.job},{self.position})"


class InstanceFormatError(ValueError):
    """Raised for malformed instance text; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class MissingPrerequisite(ValueError):
    """An op was evaluated before its job predecessor."""

    def __init__(self, op: OperationId):
        self.op = op
        super().__init__(f"Missing Prerequisite: {op} needs {OperationId(op.job, op.position - 1)}")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    """``n_jobs`` x ``n_machines`` job shop.

    ``machines[j, k]`` is the machine of the k-th op of job j and
    ``durations[j, k]`` its processing time.  Every job visits each machine
    exactly once.  Generated instances use durations >= 1; zero durations
    are accepted because some published benchmarks contain them.
    """

    machines: np.ndarray
    durations: np.ndarray
    name: str = "instance"
    _flat_mach: np.ndarray = field(init=False, repr=False)
    _flat_dur: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mach = _frozen(self.machines)
        dur = _frozen(self.durations)
        if mach.ndim != 2 or mach.shape != dur.shape or mach.size == 0:
            raise ValueError("machines and durations must be equal-shape non-empty 2-D arrays")
        n, m = mach.shape
        for j in range(n):
            if sorted(mach[j].tolist()) != list(range(m)):
                raise ValueError(f"job {j} does not visit every machine exactly once")
        if (dur < 0).any():
            raise ValueError("durations must be non-negative integers")
        if int(dur.sum()) >= TIME_LIMIT:
            raise OverflowError("total processing time overflows int64 time values")
        object.__setattr__(self, "machines", mach)
        object.__setattr__(self, "durations", dur)
        object.__setattr__(self, "_flat_mach", _frozen(mach.ravel()))
        object.__setattr__(self, "_flat_dur", _frozen(dur.ravel()))

    @property
    def n_jobs(self) -> int:
        return self.machines.shape[0]

    @property
    def n_machines(self) -> int:
        return self.machines.shape[1]

    @property
    def n_ops(self) -> int:
        return self.machines.size

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and np.array_equal(self.machines, other.machines)
            and np.array_equal(self.durations, other.durations)
        )

    def __hash__(self):
        return hash((self.name, self.machines.tobytes(), self.durations.tobytes()))

    def machine_of(self, op) -> int:
        return int(self.machines[op[0], op[1]])

    def duration_of(self, op) -> int:
        return int(self.durations[op[0], op[1]])

    def ops(self) -> list[OperationId]:
        return [OperationId(j, k) for j in range(self.n_jobs) for k in range(self.n_machines)]

    def flat(self, op) -> int:
        return op[0] * self.n_machines + op[1]

    def op_at(self, index: int) -> OperationId:
        return OperationId(*divmod(int(index), self.n_machines))

    def machine_ops(self, machine: int) -> list[OperationId]:
        """Ops processed on ``machine``, ordered by job."""
        jobs, pos = np.nonzero(self.machines == machine)
        return [OperationId(int(j), int(k)) for j, k in zip(jobs, pos)]

    def total_duration(self) -> int:
        return int(self.durations.sum())


@dataclass(frozen=True, eq=False)
class Schedule:
    """Start and completion time of every op, indexed ``[job, position]``."""

    start: np.ndarray
    completion: np.ndarray
    makespan: int

    @classmethod
    def from_starts(cls, instance: Instance, start) -> "Schedule":
        s = _frozen(start).reshape(instance.machines.shape)
        c = _frozen(s + instance.durations)
        return cls(s, c, int(c.max()))

    def start_of(self, op) -> int:
        return int(self.start[op[0], op[1]])

    def completion_of(self, op) -> int:
        return int(self.completion[op[0], op[1]])

    def machine_orders(self, instance: Instance) -> list[list[OperationId]]:
        """Per-machine op lists sorted by start, then completion, then job."""
        orders = []
        for k in range(instance.n_machines):
            ops = instance.machine_ops(k)
            ops.sort(key=lambda o: (self.start_of(o), self.completion_of(o), o.job))
            orders.append(ops)
        return orders

    def op_order(self) -> list[OperationId]:
        """All ops sorted by (start, completion, job, position); a valid CFP input."""
        n, m = self.start.shape
        keys = sorted((int(self.start[j, k]), int(self.completion[j, k]), j, k) for j in range(n) for k in range(m))
        return [OperationId(j, k) for _, _, j, k in keys]


@dataclass(frozen=True)
class Violation:
    kind: str  # "precedence" | "overlap" | "arithmetic" | "coverage"
    ops: tuple
    message: str

    def __str__(self) -> str:
        return self.message


# ---------------------------------------------------------------------------
# parsing and generation


def parse_instance(text: str, name: str = "instance") -> Instance:
    """Parse the JSPLIB "standard" format (0-based machine indices).

    Lines starting with ``#`` are comments.  The first data line holds
    ``n m``, followed by one line of ``m`` ``machine duration`` pairs per job.
    """
    data = []
    for lineno, raw in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        data.append((lineno, line))
    if not data:
        raise InstanceFormatError("empty instance", 1)
    lineno, header = data[0]
    parts = header.split()
    try:
        if len(parts) != 2:
            raise ValueError
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        raise InstanceFormatError(f"malformed header {header!r}, expected 'n m'", lineno) from None
    if n < 1 or m < 1:
        raise InstanceFormatError("n and m must be positive", lineno)
    rows = data[1:]
    if len(rows) < n:
        last = rows[-1][0] if rows else lineno
        raise InstanceFormatError(f"expected {n} job lines, found {len(rows)}", last)
    if len(rows) > n:
        raise InstanceFormatError("unexpected data after the last job", rows[n][0])
    machines = np.zeros((n, m), np.int64)
    durations = np.zeros((n, m), np.int64)
    for j, (lineno, line) in enumerate(rows):
        try:
            vals = [int(v) for v in line.split()]
        except ValueError:
            raise InstanceFormatError("non-integer token", lineno) from None
        if len(vals) != 2 * m:
            raise InstanceFormatError(f"job {j}: expected {m} pairs, found {len(vals) / 2:g}", lineno)
        for k in range(m):
            mk, d = vals[2 * k], vals[2 * k + 1]
            if not 0 <= mk < m:
                raise InstanceFormatError(f"machine index {mk} out of range", lineno)
            if d < 0:
                raise InstanceFormatError(f"negative duration {d}", lineno)
            machines[j, k] = mk
            durations[j, k] = d
        if len(set(machines[j].tolist())) != m:
            raise InstanceFormatError(f"job {j} repeats a machine", lineno)
    return Instance(machines, durations, name)


def load_instance(path) -> Instance:
    from pathlib import Path

    path = Path(path)
    return parse_instance(path.read_text(encoding="utf-8"), name=path.stem)


def write_instance(instance: Instance, comment: bool = True) -> str:
    lines = [f"# {instance.name}"] if comment else []
    lines.append(f"{instance.n_jobs} {instance.n_machines}")
    for j in range(instance.n_jobs):
        lines.append(
            " ".join(f"{instance.machines[j, k]} {instance.durations[j, k]}" for k in range(instance.n_machines))
        )
    return "\n".join(lines) + "\n"


def generate_random_instance(
    n_jobs: int,
    n_machines: int,
    seed: int,
    duration_lo: int = 1,
    duration_hi: int = 99,
    name: str | None = None,
) -> Instance:
    """Random square job shop: each job visits the machines in a uniform
    random order with i.i.d. uniform integer durations."""
    if n_jobs < 1 or n_machines < 1:
        raise ValueError("n_jobs and n_machines must be >= 1")
    if not 1 <= duration_lo <= duration_hi:
        raise ValueError("need 1 <= duration_lo <= duration_hi")
    rng = np.random.default_rng(seed)
    machines = np.array([rng.permutation(n_machines) for _ in range(n_jobs)], dtype=np.int64)
    durations = rng.integers(duration_lo, duration_hi + 1, size=(n_jobs, n_machines), dtype=np.int64)
    return Instance(machines, durations, name or f"rand{n_jobs}x{n_machines}_s{seed}")


# ---------------------------------------------------------------------------
# helpers used by the search modules


def trailer(instance: Instance, op, mode: str = "job", done: Iterable = ()) -> int:
    """Work that must still follow ``op``.

    ``job``: remaining durations in op's job after op.  ``machine``: durations
    of the other ops on op's machine that are not in ``done``.  ``max``: the
    larger of the two.
    """
    j, k = op
    job_part = int(instance.durations[j, k + 1 :].sum())
    if mode == "job":
        return job_part
    done = {tuple(o) for o in done}
    mk = instance.machine_of(op)
    mach_part = sum(
        instance.duration_of(o) for o in instance.machine_ops(mk) if tuple(o) != (j, k) and tuple(o) not in done
    )
    if mode == "machine":
        return mach_part
    if mode == "max":
        return max(job_part, mach_part)
    raise ValueError(f"unknown trailer mode {mode!r}")


def cost_from_partial(
    instance: Instance,
    order: Sequence,
    machine_finish_init: Sequence[int] | None = None,
    done_times: Mapping | None = None,
) -> tuple[int, dict[OperationId, int]]:
    """Evaluate an op order semi-actively.

    Each op starts when both its machine and its job predecessor are free.
    Returns the largest machine finish time and the completion time of every
    op in ``order``.

    Raises:
        MissingPrerequisite: an op's job predecessor is neither in
            ``done_times`` nor earlier in ``order``.
    """
    n, m = instance.machines.shape
    fm = np.zeros(m, np.int64) if machine_finish_init is None else np.array(machine_finish_init, np.int64)
    if fm.shape != (m,):
        raise ValueError(f"machine_finish_init must have {m} entries")
    done = np.full(n * m, -1, np.int64)
    for op, t in (done_times or {}).items():
        done[op[0] * m + op[1]] = t
    flat = np.array([o[0] * m + o[1] for o in order], np.int64)
    if len(set(flat.tolist())) != len(flat):
        raise ValueError("order contains duplicate ops")
    if (done[flat] >= 0).any():
        raise ValueError("order repeats an op already in done_times")
    span, bad, _, times = kernels.cfp(flat, instance._flat_mach, instance._flat_dur, m, fm, done)
    if bad >= 0:
        raise MissingPrerequisite(instance.op_at(flat[bad]))
    return int(span), {instance.op_at(x): int(times[x]) for x in flat}


def schedule_from_order(instance: Instance, order: Sequence) -> Schedule:
    """Semi-active schedule of a complete op order."""
    if len(order) != instance.n_ops:
        raise ValueError("order must list every op")
    _, comp = cost_from_partial(instance, order)
    start = np.zeros(instance.machines.shape, np.int64)
    for op, c in comp.items():
        start[op] = c - instance.duration_of(op)
    return Schedule.from_starts(instance, start)


def validate_schedule(instance: Instance, schedule: Schedule) -> Violation | None:
    """First violated constraint of ``schedule``, or ``None`` when feasible."""
    n, m = instance.machines.shape
    start = np.asarray(schedule.start)
    comp = np.asarray(schedule.completion)
    if start.shape != (n, m) or comp.shape != (n, m):
        return Violation("coverage", (), "schedule does not cover every op")
    if (start < 0).any():
        j, k = np.argwhere(start < 0)[0]
        op = OperationId(int(j), int(k))
        return Violation("precedence", (op,), f"{op} starts before time 0")
    for j in range(n):
        for k in range(m):
            if comp[j, k] != start[j, k] + instance.durations[j, k]:
                op = OperationId(j, k)
                return Violation("arithmetic", (op,), f"completion of {op} != start + duration")
    if schedule.makespan != int(comp.max()):
        return Violation("arithmetic", (), f"makespan {schedule.makespan} != max completion {int(comp.max())}")
    for j in range(n):
        for k in range(1, m):
            if start[j, k] < comp[j, k - 1]:
                a, b = OperationId(j, k - 1), OperationId(j, k)
                return Violation(
                    "precedence", (a, b), f"precedence violation {a}->{b}: {b} starts before {a} completes"
                )
    for mk in range(m):
        ops = instance.machine_ops(mk)
        ops.sort(key=lambda o: (start[o], comp[o], o.job))
        for a, b in zip(ops, ops[1:]):
            if start[b] < comp[a]:
                return Violation("overlap", (a, b), f"overlap violation on machine {mk}: {a} and {b}")
    return None
