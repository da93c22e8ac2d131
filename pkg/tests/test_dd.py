import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_force_optimum, small_instances

from jobshop_dd.dd import (
    NodeCapExceeded,
    NodeStats,
    StateM1,
    StateM2,
    StateRelax,
    TransitionError,
    a_star_search,
    compile_relaxed,
    compile_restricted,
    dd_branch_and_bound,
    feasible_ops,
    full_expansion,
    merge_all,
    merge_rows,
    merge_states,
    relaxed_children,
    relaxed_dd,
    relaxed_to_row,
    row_to_relaxed,
    row_to_state,
    state_to_row,
    transition,
    transition_m1,
    transition_m2,
    transition_relaxed,
)
from jobshop_dd.dd.state import as_relaxed
from jobshop_dd.instance import OperationId, generate_random_instance, parse_instance, validate_schedule

O = OperationId


def walk(instance, state, ops):
    for x in ops:
        state, _ = transition(instance, state, x)
    return state


def random_state(instance, cls, depth, rng):
    s = cls.root(instance)
    for _ in range(depth):
        s, _ = transition(instance, s, feasible_ops(instance, s)[int(rng.integers(len(feasible_ops(instance, s))))])
    return s


# transitions


def test_m1_examples(t1):
    s, c = transition_m1(t1, StateM1.root(t1), O(0, 0))
    assert s.V == {O(0, 0)} and s.f_O == {O(0, 0): 3} and s.f_M == (3, 0) and c == 3
    s = walk(t1, StateM1.root(t1), [O(0, 0), O(1, 0)])
    _, c = transition_m1(t1, s, O(0, 1))
    assert c == 5
    with pytest.raises(TransitionError, match="Missing Prerequisite"):
        transition_m1(t1, StateM1.root(t1), O(0, 1))
    with pytest.raises(TransitionError):
        transition_m1(t1, walk(t1, StateM1.root(t1), [O(0, 0)]), O(0, 0))


def test_m2_examples(t1):
    s = walk(t1, StateM2.root(t1), [O(0, 0)])
    s2, c = transition_m2(t1, s, O(0, 1))
    assert s2.V == {O(0, 1)} and s2.V_L == {O(0, 0)} and s2.f_M == (3, 5) and c == 5
    with pytest.raises(TransitionError):
        transition_m2(t1, StateM2.root(t1), O(1, 1))


def test_m2_identity_ignores_long_done_times():
    inst = parse_instance("2 3\n0 2 1 2 2 2\n1 2 0 2 2 2")
    a = walk(inst, StateM2.root(inst), [O(0, 0), O(1, 0), O(0, 1), O(1, 1)])
    b = walk(inst, StateM2.root(inst), [O(1, 0), O(0, 0), O(1, 1), O(0, 1)])
    assert a == b and hash(a) == hash(b) and len({a, b}) == 1
    assert a.V_L == {O(0, 0), O(1, 0)}


def test_m2_folds_states_m1_keeps_apart():
    inst = parse_instance("2 2\n0 1 1 5\n1 1 0 5")
    p1 = [O(0, 0), O(1, 0), O(0, 1)]
    p2 = [O(1, 0), O(0, 0), O(0, 1)]
    assert walk(inst, StateM2.root(inst), p1) == walk(inst, StateM2.root(inst), p2)
    assert walk(inst, StateM1.root(inst), p1) == walk(inst, StateM1.root(inst), p2)


def test_state_row_roundtrip():
    inst = generate_random_instance(3, 4, 5)
    rng = np.random.default_rng(0)
    for cls, model in ((StateM1, "m1"), (StateM2, "m2")):
        for depth in range(inst.n_ops + 1):
            s = random_state(inst, cls, depth, rng)
            assert row_to_state(inst, state_to_row(inst, s), model) == s


# merging


def test_merge_example(t1):
    a = walk(t1, StateM1.root(t1), [O(0, 0)])
    b = walk(t1, StateM1.root(t1), [O(1, 0)])
    m = merge_states(a, b)
    assert m.base.V == frozenset() and m.f_M == (0, 0)
    assert m.V_s == {O(0, 0), O(1, 0)} and dict(m.f_s) == {O(0, 0): 3, O(1, 0): 2}
    assert not m.exact and as_relaxed(a).exact


def test_merge_errors(t1):
    a = walk(t1, StateM1.root(t1), [O(0, 0)])
    b = walk(t1, StateM2.root(t1), [O(1, 0)])
    with pytest.raises(ValueError):
        merge_states(a, b)
    with pytest.raises(ValueError, match="different layers"):
        merge_states(a, walk(t1, StateM1.root(t1), [O(0, 0), O(1, 0)]))
    with pytest.raises(ValueError):
        merge_states(a, a, mode="avg")


@pytest.mark.parametrize("mode", ["paper_max", "min"])
@pytest.mark.parametrize("cls", [StateM1, StateM2])
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 99_999), depth=st.integers(0, 12))
def test_merge_algebra(mode, cls, seed, depth):
    inst = generate_random_instance(3, 4, seed % 50)
    rng = np.random.default_rng(seed)
    a, b, c = (random_state(inst, cls, depth, rng) for _ in range(3))
    assert merge_states(a, a, mode) == as_relaxed(a)
    assert merge_states(a, b, mode) == merge_states(b, a, mode)
    left = merge_states(merge_states(a, b, mode), c, mode)
    right = merge_states(a, merge_states(b, c, mode), mode)
    assert left == right == merge_all([c, a, b], mode)
    m = merge_states(a, b, mode)
    assert m.V_s.isdisjoint(m.base.done)


@pytest.mark.parametrize("cls", [StateM1, StateM2])
def test_min_merge_relaxes_every_completion(cls):
    """With min merging, finishing a merged node never costs more than any source path."""
    rng = np.random.default_rng(4)
    for seed in range(40):
        inst = generate_random_instance(3, 3, seed, 1, 9)
        depth = int(rng.integers(1, inst.n_ops))
        a, b = (random_state(inst, cls, depth, rng) for _ in range(2))
        merged = merge_states(a, b, "min")
        for src in (a, b):
            # replay the source's own completion on the merged node
            s, r = src, merged
            while feasible_ops(inst, s):
                x = feasible_ops(inst, s)[int(rng.integers(len(feasible_ops(inst, s))))]
                s, _ = transition(inst, s, x)
                r, _ = transition_relaxed(inst, r, x)
            assert r.cost <= s.cost


# compilation


def test_restricted_t1(t1):
    for model in ("m1", "m2"):
        res = compile_restricted(t1, model, width=1)
        assert validate_schedule(t1, res.schedules[0]) is None
        assert res.schedules[0].makespan == res.makespan
        assert compile_restricted(t1, model, width=64).makespan == 7


def test_restricted_collect_and_rank():
    inst = generate_random_instance(5, 5, 2)
    res = compile_restricted(inst, "m2", width=30, collect=8)
    assert 1 <= len(res.schedules) <= 8
    spans = [s.makespan for s in res.schedules]
    assert spans == sorted(spans) and spans[0] == res.makespan
    assert all(validate_schedule(inst, s) is None for s in res.schedules)
    res2 = compile_restricted(inst, "m2", width=30, rank="cost_plus_trailer")
    assert validate_schedule(inst, res2.schedules[0]) is None
    with pytest.raises(ValueError):
        compile_restricted(inst, width=0)
    with pytest.raises(ValueError):
        compile_restricted(inst, rank="nope")


def test_restricted_is_deterministic():
    inst = generate_random_instance(6, 6, 9)
    a = compile_restricted(inst, "m2", width=10, collect=5)
    b = compile_restricted(inst, "m2", width=10, collect=5)
    assert a.makespan == b.makespan and a.orders == b.orders


def test_restricted_unbounded_width_is_exact():
    for inst in small_instances(6, seed0=300):
        assert compile_restricted(inst, "m2", width=None).makespan == full_expansion(inst, "m2").optimum


def test_full_expansion(t1):
    assert full_expansion(t1, "m1").optimum == 7
    assert full_expansion(t1, "m2").optimum == 7
    with pytest.raises(NodeCapExceeded):
        full_expansion(generate_random_instance(3, 4, 0), "m1", cap=10)


def test_node_stats_csv(t1):
    stats = NodeStats("T1", "m2")
    compile_restricted(t1, "m2", width=2, stats=stats)
    buf = io.StringIO()
    stats.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "instance,model,layer,width_before,width_after,merges,prunes"
    assert len(lines) == 1 + t1.n_ops


def test_relaxed_t1(t1):
    assert compile_relaxed(t1, "m2", width=64) == 7
    for mode in ("paper_max", "min"):
        assert compile_relaxed(t1, "m1", width=1, mode=mode) <= 7
        assert compile_relaxed(t1, "m2", width=1, mode=mode) <= 7


def test_relaxed_min_mode_bounds_3x3():
    for seed in range(100):
        inst = generate_random_instance(3, 3, seed, 1, 20)
        opt = full_expansion(inst, "m2").optimum
        for model in ("m1", "m2"):
            assert compile_relaxed(inst, model, width=2, mode="min") <= opt


@pytest.mark.parametrize("mode", ["paper_max", "min"])
@pytest.mark.parametrize("cls", [StateM1, StateM2])
def test_relaxed_rows_match_states(cls, mode):
    """Row transitions and merges reproduce the state-object versions."""
    rng = np.random.default_rng(11)
    model = "m1" if cls is StateM1 else "m2"
    for seed in range(30):
        inst = generate_random_instance(3, 4, seed, 1, 9)
        n, m = inst.machines.shape
        mach, dur = inst.machines.ravel().astype(np.int64), inst.durations.ravel().astype(np.int64)
        depth = int(rng.integers(0, inst.n_ops))
        parts = [random_state(inst, cls, depth, rng) for _ in range(int(rng.integers(1, 4)))]
        merged = merge_all(parts, mode)
        rows = np.array([relaxed_to_row(inst, p) for p in parts])
        assert row_to_relaxed(inst, merge_rows(rows, m, mode), model) == merged
        row = relaxed_to_row(inst, merged)
        assert row_to_relaxed(inst, row, model) == merged
        kids, parent = relaxed_children(row[None, :], mach, dur, n, m, 1 if model == "m1" else 2)
        want = [transition_relaxed(inst, merged, x)[0] for x in feasible_ops(inst, merged)]
        assert [row_to_relaxed(inst, k, model) for k in kids] == want
        assert (parent == 0).all()


def test_relaxed_pruning_and_cutset():
    inst = generate_random_instance(3, 3, 1)
    opt = full_expansion(inst, "m2").optimum
    res = relaxed_dd(inst, "m2", width=2, primal_bound=opt - 1, mode="min")
    assert res.bound >= opt or res.bound == float("inf") or not res.exact
    res = relaxed_dd(inst, "m2", width=2, mode="min")
    assert res.merges > 0 and not res.exact and res.cutset
    assert all(as_relaxed(s).exact for s in res.cutset)


# exact search


def test_search_t1(t1):
    assert dd_branch_and_bound(t1, width=1).optimum == 7
    res = dd_branch_and_bound(t1, width=None)
    assert res.optimum == 7 and res.nodes == 1
    z = a_star_search(t1, "zero")
    h = a_star_search(t1, "trailer_max")
    assert z.optimum == h.optimum == 7 and h.nodes <= z.nodes


def test_single_job_chain():
    inst = parse_instance("1 4\n2 3 0 1 3 7 1 2")
    assert a_star_search(inst).optimum == 13
    assert dd_branch_and_bound(inst).optimum == 13


def test_exact_methods_agree_with_brute_force():
    for inst in small_instances(25, seed0=1000):
        ref = brute_force_optimum(inst)
        assert full_expansion(inst, "m1").optimum == ref
        assert full_expansion(inst, "m2").optimum == ref
        assert dd_branch_and_bound(inst, width=2).optimum == ref
        assert a_star_search(inst).optimum == ref


def test_m2_never_stores_more_nodes():
    for inst in small_instances(10, seed0=50):
        assert full_expansion(inst, "m2").valid_nodes <= full_expansion(inst, "m1").valid_nodes


def test_root_estimate_is_admissible():
    for seed in range(100):
        inst = generate_random_instance(3, 3, seed)
        est = max(
            max(inst.durations[inst.machines == k].sum() for k in range(3)),
            int(inst.durations.sum(axis=1).max()),
        )
        opt = a_star_search(inst, "zero").optimum
        assert est <= opt
        assert a_star_search(inst).nodes <= a_star_search(inst, "zero").nodes


def test_permutation_count_sanity():
    # the brute-force oracle itself on T1: 2 orientations per machine, one cyclic
    inst = parse_instance("2 2\n0 3 1 2\n1 2 0 4")
    assert brute_force_optimum(inst) == 7
    assert len(list(itertools.product(*[itertools.permutations(inst.machine_ops(k)) for k in range(2)]))) == 4
