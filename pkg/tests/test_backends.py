"""The compiled and pure-Python kernels must agree draw for draw."""

import numpy as np
import pytest

from zealot import kernels
from zealot.cobra import simulate_brw, simulate_cobra
from zealot.forward import simulate_forward
from zealot.graphical import sample_event_log
from zealot.trees import DegreeDist, build_regular_tree, sample_gw_tree

pytestmark = pytest.mark.skipif(kernels.compiled_backend is None, reason="compiled extension not built")

PY, C = kernels.python_backend, kernels.compiled_backend
PARAMS = [{0: 0.2, 1: 0.3, 2: 0.5}, {1: 0.5, 3: 0.5}, {0: 0.6, 2: 0.4}]


def trees():
    return [build_regular_tree(3, 5), build_regular_tree(4, 4), sample_gw_tree(DegreeDist.two_point(0.5), 4, 9)]


def same(a, b, fields):
    for f in fields:
        x, y = getattr(a, f), getattr(b, f)
        if isinstance(x, (list, np.ndarray)):
            assert np.array_equal(np.asarray(x), np.asarray(y)), f
        else:
            assert x == y, f


@pytest.mark.parametrize("params", PARAMS)
def test_forward_sim(params):
    for t in trees():
        for s in range(5):
            a = simulate_forward(t, params, [0, 1, 2], 3.0, s, dt=0, backend=PY)
            b = simulate_forward(t, params, [0, 1, 2], 3.0, s, dt=0, backend=C)
            same(a, b, ["times", "counts", "root_states", "extinction_time", "boundary_touched"])


@pytest.mark.parametrize("params", PARAMS)
def test_forward_replay(params):
    for t in trees():
        for s in range(5):
            ev = sample_event_log(t, params, 2.0, s)
            a = simulate_forward(t, params, [0, 1], 2.0, s, log=ev, record_states=True, backend=PY)
            b = simulate_forward(t, params, [0, 1], 2.0, s, log=ev, record_states=True, backend=C)
            assert a.states == b.states
            same(a, b, ["times", "counts", "boundary_touched"])


@pytest.mark.parametrize("params", PARAMS)
def test_cobra_sim(params):
    for t in trees():
        for s in range(5):
            a = simulate_cobra(t, params, [0, 1], 3.0, s, dt=0.25, window_start=1.5, backend=PY)
            b = simulate_cobra(t, params, [0, 1], 3.0, s, dt=0.25, window_start=1.5, backend=C)
            same(a, b, ["times", "counts", "root_visits", "extinction_time", "boundary_kills",
                        "total_root_visits", "window_hit", "occupied", "stopped_early"])


@pytest.mark.parametrize("params", PARAMS)
def test_brw_sim(params):
    for t in trees():
        for s in range(5):
            a = simulate_brw(t, params, [0, 1], 2.0, s, dt=0.25, backend=PY)
            b = simulate_brw(t, params, [0, 1], 2.0, s, dt=0.25, backend=C)
            same(a, b, ["times", "counts", "cobra_counts", "particles", "cobra",
                        "extinction_time", "boundary_kills", "overflow"])


@pytest.mark.parametrize("d,x", [(3, 1), (4, 3)])
def test_pair_coalescence(d, x):
    assert PY.pair_coalescence(d, x, 50.0, 300, 11) == C.pair_coalescence(d, x, 50.0, 300, 11)
