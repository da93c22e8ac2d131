"""Decision-diagram states for the job shop and their transitions.

Model 1 keeps the completion time of every finished op.  Model 2 splits the
finished ops into *recent* ones (the last finished op of each job, whose
time can still delay a successor) and *long-done* ones whose times are
dropped from the state identity, which folds many more equivalent states.

Relaxed states add a set of "maybe done" ops with worst-case times so that
several states of one layer can be merged into a single node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

from jobshop_dd.instance import Instance, OperationId

MERGE_MODES = ("paper_max", "min")


class TransitionError(ValueError):
    pass


def _pre(op: OperationId) -> OperationId | None:
    return OperationId(op.job, op.position - 1) if op.position > 0 else None


def _items(d: Mapping, keys=None):
    if keys is None:
        return tuple(sorted(d.items()))
    return tuple(sorted((k, v) for k, v in d.items() if k in keys))


@dataclass(frozen=True, eq=False)
class _Base:
    def _key(self) -> tuple:
        raise NotImplementedError

    def _identity(self) -> tuple:
        raise NotImplementedError

    def _cached(self, slot, build):
        try:
            return self.__dict__[slot]
        except KeyError:
            value = build()
            object.__setattr__(self, slot, value)
            return value

    def identity(self) -> tuple:
        """Hashable key (sets, unordered); equal exactly for equal states."""
        return self._cached("_id", self._identity)

    def sort_key(self) -> tuple:
        """Canonical ordered key, used to break ranking ties."""
        return self._cached("_sk", self._key)

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.identity() == other.identity()

    def __hash__(self):
        return hash(self.identity())

    @property
    def cost(self) -> int:
        """Makespan of the partial schedule (largest machine finish time)."""
        return max(self.f_M) if self.f_M else 0


@dataclass(frozen=True, eq=False)
class StateM1(_Base):
    V: frozenset
    f_O: Mapping
    f_M: tuple

    @classmethod
    def root(cls, instance: Instance) -> "StateM1":
        return cls(frozenset(), {}, (0,) * instance.n_machines)

    def _identity(self) -> tuple:
        return (1, frozenset(self.V), frozenset(self.f_O.items()), self.f_M)

    def _key(self) -> tuple:
        return (1, tuple(sorted(self.V)), _items(self.f_O), self.f_M)

    @property
    def done(self) -> frozenset:
        return self.V


@dataclass(frozen=True, eq=False)
class StateM2(_Base):
    V: frozenset
    V_L: frozenset
    f_O: Mapping  # defined on V only
    f_M: tuple

    @classmethod
    def root(cls, instance: Instance) -> "StateM2":
        return cls(frozenset(), frozenset(), {}, (0,) * instance.n_machines)

    def _identity(self) -> tuple:
        return (2, frozenset(self.V), frozenset(self.V_L), frozenset((k, v) for k, v in self.f_O.items() if k in self.V), self.f_M)

    def _key(self) -> tuple:
        return (2, tuple(sorted(self.V)), tuple(sorted(self.V_L)), _items(self.f_O, self.V), self.f_M)

    @property
    def done(self) -> frozenset:
        return self.V | self.V_L


ExactState = Union[StateM1, StateM2]


@dataclass(frozen=True, eq=False)
class StateRelax(_Base):
    base: ExactState
    V_s: frozenset = frozenset()
    f_s: Mapping = field(default_factory=dict)

    @property
    def f_M(self) -> tuple:
        return self.base.f_M

    @property
    def exact(self) -> bool:
        return not self.V_s

    @property
    def model(self) -> int:
        return 1 if isinstance(self.base, StateM1) else 2

    def _identity(self) -> tuple:
        return (self.base.identity(), frozenset(self.V_s), frozenset(self.f_s.items()))

    def _key(self) -> tuple:
        return (self.base.sort_key(), tuple(sorted(self.V_s)), _items(self.f_s))


# ---------------------------------------------------------------------------
# exact transitions


def _check_op(instance: Instance, x) -> OperationId:
    x = OperationId(*x)
    if not (0 <= x.job < instance.n_jobs and 0 <= x.position < instance.n_machines):
        raise TransitionError(f"{x} is not an op of this instance")
    return x


def transition_m1(instance: Instance, state: StateM1, x) -> tuple[StateM1, int]:
    x = _check_op(instance, x)
    if x in state.V:
        raise TransitionError(f"{x} already done")
    pre = _pre(x)
    if pre is not None and pre not in state.V:
        raise TransitionError(f"Missing Prerequisite: {pre} before {x}")
    mk = instance.machine_of(x)
    c = max(state.f_M[mk], state.f_O[pre] if pre is not None else 0) + instance.duration_of(x)
    f_O = dict(state.f_O)
    f_O[x] = c
    f_M = state.f_M[:mk] + (c,) + state.f_M[mk + 1 :]
    return StateM1(state.V | {x}, f_O, f_M), c


def transition_m2(instance: Instance, state: StateM2, x) -> tuple[StateM2, int]:
    x = _check_op(instance, x)
    if x in state.V or x in state.V_L:
        raise TransitionError(f"{x} already done")
    pre = _pre(x)
    if pre is not None and pre not in state.V and pre not in state.V_L:
        raise TransitionError(f"Missing Prerequisite: {pre} before {x}")
    mk = instance.machine_of(x)
    c = max(state.f_M[mk], state.f_O.get(pre, 0)) + instance.duration_of(x)
    f_O = {k: v for k, v in state.f_O.items() if k != pre}
    f_O[x] = c
    f_M = state.f_M[:mk] + (c,) + state.f_M[mk + 1 :]
    V = (state.V | {x}) - {pre}
    V_L = state.V_L | {pre} if pre is not None else state.V_L
    return StateM2(V, V_L, f_O, f_M), c


def transition(instance: Instance, state, x):
    if isinstance(state, StateM1):
        return transition_m1(instance, state, x)
    if isinstance(state, StateM2):
        return transition_m2(instance, state, x)
    return transition_relaxed(instance, state, x)


def feasible_ops(instance: Instance, state) -> list[OperationId]:
    """Ops that may be appended to ``state``, in (job, position) order."""
    if isinstance(state, StateRelax):
        sure = state.base.done
        possible = sure | state.V_s
    else:
        sure = possible = state.done
    out = []
    for j in range(instance.n_jobs):
        for k in range(instance.n_machines):
            x = OperationId(j, k)
            if x in sure:
                continue
            if k == 0 or OperationId(j, k - 1) in possible:
                out.append(x)
            if x not in possible:
                break
    return out


# ---------------------------------------------------------------------------
# relaxed states


def as_relaxed(state) -> StateRelax:
    return state if isinstance(state, StateRelax) else StateRelax(state)


def transition_relaxed(instance: Instance, state: StateRelax, x) -> tuple[StateRelax, int]:
    """Append ``x`` to a possibly merged state.

    ``x`` must not be surely done and its predecessor must be at least maybe
    done.  The predecessor's time is its sure time, else its worst-case maybe
    time, else 0 (long-done in Model 2).
    """
    x = _check_op(instance, x)
    base = state.base
    if x in base.done:
        raise TransitionError(f"{x} already done")
    pre = _pre(x)
    if pre is not None and pre not in base.done and pre not in state.V_s:
        raise TransitionError(f"Missing Prerequisite: {pre} before {x}")
    if pre is None:
        pre_t = 0
    elif pre in base.f_O and pre in base.V:
        pre_t = base.f_O[pre]
    else:
        pre_t = state.f_s.get(pre, 0)
    mk = instance.machine_of(x)
    c = max(base.f_M[mk], pre_t) + instance.duration_of(x)
    f_M = base.f_M[:mk] + (c,) + base.f_M[mk + 1 :]
    if isinstance(base, StateM1):
        f_O = dict(base.f_O)
        f_O[x] = c
        new_base = StateM1(base.V | {x}, f_O, f_M)
        drop = {x}
    else:
        f_O = {k: v for k, v in base.f_O.items() if k != pre}
        f_O[x] = c
        V_L = base.V_L | {pre} if pre is not None else base.V_L
        new_base = StateM2((base.V | {x}) - {pre}, V_L, f_O, f_M)
        drop = {x, pre}
    V_s = state.V_s - drop
    f_s = {k: v for k, v in state.f_s.items() if k in V_s}
    return StateRelax(new_base, V_s, f_s), c


def merge_states(a, b, mode: str = "paper_max") -> StateRelax:
    """Merge two states of one layer into a single relaxed state.

    Machine finish times take the elementwise minimum, surely-done sets are
    intersected and everything done on only some path becomes "maybe done".
    Op times combine with ``max`` (``paper_max``) or ``min`` (``min``); only
    ``min`` is guaranteed to keep every path's cost from increasing.
    """
    return merge_all([a, b], mode)


def merge_all(states, mode: str = "paper_max") -> StateRelax:
    """Merge any number of states at once.

    Same result as folding :func:`merge_states` over ``states`` in any
    order, in one pass.
    """
    if mode not in MERGE_MODES:
        raise ValueError(f"unknown merge mode {mode!r}")
    rel = [as_relaxed(s) for s in states]
    if not rel:
        raise ValueError("nothing to merge")
    bases = [r.base for r in rel]
    first = bases[0]
    if any(type(b) is not type(first) for b in bases):
        raise ValueError("cannot merge states of different models")
    if any(len(b.f_M) != len(first.f_M) for b in bases):
        raise ValueError("states belong to different instances")
    # exact children of merged nodes may lag their layer, so only an
    # all-exact input is checked
    if all(r.exact for r in rel) and len({len(b.done) for b in bases}) > 1:
        raise ValueError("cannot merge states from different layers")
    pick = max if mode == "paper_max" else min
    f_M = tuple(min(col) for col in zip(*(b.f_M for b in bases)))
    V = frozenset.intersection(*(frozenset(b.V) for b in bases))
    f_O = {x: pick(b.f_O[x] for b in bases) for x in V}
    if isinstance(first, StateM1):
        base = StateM1(V, f_O, f_M)
    else:
        base = StateM2(V, frozenset.intersection(*(frozenset(b.V_L) for b in bases)), f_O, f_M)
    done = base.done
    V_s = frozenset().union(*(r.base.done for r in rel), *(r.V_s for r in rel)) - done
    f_s: dict = {}
    for d in [b.f_O for b in bases] + [r.f_s for r in rel]:
        for x, v in d.items():
            if x in V_s:
                old = f_s.get(x)
                f_s[x] = v if old is None else pick(old, v)
    return StateRelax(base, V_s, f_s)
