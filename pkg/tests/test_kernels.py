"""The numba kernels and their pure-numpy fallbacks must agree exactly."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jobshop_dd import _jit, kernels
from jobshop_dd.dd import compile_restricted
from jobshop_dd.graph import graph_from_schedule, lns1_refine
from jobshop_dd.heuristics import dispatch
from jobshop_dd.instance import generate_random_instance

pytestmark = pytest.mark.skipif(not _jit.HAVE_NUMBA, reason="numba not installed")


def _random_order(inst, rng):
    nxt = [0] * inst.n_jobs
    out = []
    for _ in range(inst.n_ops):
        live = [j for j in range(inst.n_jobs) if nxt[j] < inst.n_machines]
        j = int(rng.choice(live))
        out.append(j * inst.n_machines + nxt[j])
        nxt[j] += 1
    return np.array(out, np.int64)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 99_999))
def test_cfp_paths_agree(n, m, seed):
    inst = generate_random_instance(n, m, seed)
    rng = np.random.default_rng(seed)
    order = _random_order(inst, rng)
    cut = int(rng.integers(0, len(order) + 1))
    done = np.full(n * m, -1, np.int64)
    args = (order[:cut], inst._flat_mach, inst._flat_dur, m, np.zeros(m, np.int64), done)
    a = kernels._cfp_jit(*args)
    b = kernels._cfp_py(*args)
    assert a[0] == b[0] and a[1] == b[1]
    assert np.array_equal(a[2], b[2]) and np.array_equal(a[3], b[3])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 99_999))
def test_longest_path_paths_agree(n, m, seed):
    inst = generate_random_instance(n, m, seed)
    g = graph_from_schedule(inst, dispatch(inst, "MWR"))
    arrays = g.arrays()
    a = kernels._longest_path_jit(*arrays)
    b = kernels._longest_path_py(*arrays)
    for x, y in zip(a, b):
        assert np.array_equal(np.asarray(x), np.asarray(y))


@pytest.mark.parametrize("model", [kernels.MODEL1, kernels.MODEL2])
@pytest.mark.parametrize("seed", range(5))
def test_expand_paths_agree(model, seed):
    inst = generate_random_instance(3, 4, seed)
    n, m = inst.machines.shape
    ncols = n + m + (n * m if model == kernels.MODEL1 else n)
    rows = np.zeros((1, ncols), np.int64)
    for _ in range(inst.n_ops):
        outs = [
            kernels._expand_jit(rows, inst._flat_mach, inst._flat_dur, n, m, model),
            kernels._expand_py(rows, inst._flat_mach, inst._flat_dur, n, m, model),
            kernels._expand_np(rows, inst._flat_mach, inst._flat_dur, n, m, model),
        ]
        for other in outs[1:]:
            for x, y in zip(outs[0], other):
                assert np.array_equal(x, y)
        child = outs[0][0]
        rows = child[kernels.unique_rows(child)][:50]


def test_unique_rows_keeps_first_occurrence():
    rows = np.array([[1, 2], [0, 0], [1, 2], [0, 0], [3, 3]], np.int64)
    assert kernels.unique_rows(rows).tolist() == [0, 1, 4]


def test_flag_switches_whole_pipeline(monkeypatch):
    inst = generate_random_instance(6, 6, 3)
    start = graph_from_schedule(inst, dispatch(inst, "MOR"))
    results = {}
    for flag in (True, False):
        monkeypatch.setattr(_jit, "USE_JIT", flag)
        dd = compile_restricted(inst, "m2", width=20, collect=4)
        results[flag] = (dd.makespan, [s.start.tolist() for s in dd.schedules], lns1_refine(start, 500)[0])
    assert results[True] == results[False]


def test_env_flag_disables_jit():
    code = "from jobshop_dd import _jit; print(_jit.USE_JIT)"
    env = {**os.environ, "JOBSHOP_DD_NO_JIT": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
