import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_subset
from zealot.graphical import (
    EventLog,
    check_additivity,
    check_duality,
    dual_state,
    dual_truncated,
    forward_state,
    sample_event_log,
)
from zealot.rng import replicate_seed
from zealot.trees import DegreeDist, TreeSpec, TruncationError, build_regular_tree, sample_gw_tree


def _log(events, tree, horizon=1.0):
    text = f"# horizon {horizon!r} seed 0\n" + "\n".join(
        " ".join([repr(t), str(x), str(len(s))] + [str(v) for v in s]) for t, x, s in events)
    return EventLog.from_text(text, tree)


@pytest.fixture(scope="module")
def tree():
    return build_regular_tree(3, 4)


def test_rejects_zero_horizon(tree):
    with pytest.raises(ValueError):
        sample_event_log(tree, {0: 1}, 0.0, 1)


def test_rejects_k_above_dmin(tree):
    with pytest.raises(ValueError):
        sample_event_log(tree, {4: 1}, 1.0, 1)


def test_deterministic_regeneration(tree):
    a = sample_event_log(tree, {0: 0.2, 1: 0.3, 2: 0.5}, 2.0, 42)
    b = sample_event_log(tree, {0: 0.2, 1: 0.3, 2: 0.5}, 2.0, 42)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.src, b.src)
    assert a.to_text() == b.to_text()


def test_text_round_trip(tree):
    a = sample_event_log(tree, {0: 0.2, 2: 0.8}, 1.5, 3)
    b = EventLog.from_text(a.to_text(), tree)
    assert b.horizon == a.horizon and b.seed == a.seed
    assert np.array_equal(a.times, b.times) and np.array_equal(a.sites, b.sites)
    assert np.array_equal(a.src_ptr, b.src_ptr) and np.array_equal(a.src, b.src)


def test_event_invariants(tree):
    ev = sample_event_log(tree, {0: 0.1, 1: 0.2, 2: 0.3, 3: 0.4}, 2.0, 5)
    assert np.all(np.diff(ev.times) >= 0)
    assert ev.times.min() > 0 and ev.times.max() <= 2.0
    for e in ev:
        assert not tree.boundary[e.site]
        assert len(set(e.sources)) == len(e.sources) <= tree.d_min
        assert set(e.sources) <= set(tree.neighbors(e.site).tolist())


def test_pure_death_counts_are_poisson():
    t = build_regular_tree(3, 1)
    T, n = 2.0, 10**4
    counts = [len(sample_event_log(t, {0: 1}, T, replicate_seed(1, i)).site_events(0)) for i in range(n)]
    assert abs(np.mean(counts) - T) < 3 * np.sqrt(T / n)
    ev = sample_event_log(t, {0: 1}, T, 2)
    assert all(len(e.sources) == 0 for e in ev)


def test_pair_sources_are_uniform():
    t = build_regular_tree(3, 1)
    pairs = []
    i = 0
    while len(pairs) < 10**4:
        ev = sample_event_log(t, {2: 1}, 50.0, replicate_seed(2, i))
        pairs += [frozenset(e.sources) for e in ev.site_events(0)]
        i += 1
    n = len(pairs)
    for pair in itertools.combinations(t.neighbors(0).tolist(), 2):
        f = pairs.count(frozenset(pair)) / n
        assert abs(f - 1 / 3) < 3 * np.sqrt(2 / 9 / n)


def test_site_rate_for_branching():
    t = build_regular_tree(3, 1)
    T, n = 5.0, 2000
    counts = [len(sample_event_log(t, {0: 0.5, 2: 0.5}, T, replicate_seed(3, i)).site_events(0)) for i in range(n)]
    rate = 0.5 + 3 * 0.5
    assert abs(np.mean(counts) - rate * T) < 3 * np.sqrt(rate * T / n)


def test_forward_empty_is_absorbing(tree):
    ev = sample_event_log(tree, {0: 0.1, 1: 0.9}, 1.0, 1)
    assert forward_state(ev, set(), 1.0) == frozenset()


def test_forward_single_copy_event(tree):
    ev = _log([(0.5, 1, [0])], tree)
    assert forward_state(ev, {0}, 1.0) == {0, 1}
    assert forward_state(ev, {0}, 0.4) == {0}


def test_forward_pure_kill(tree):
    ev = _log([(0.5, 0, [])], tree)
    assert forward_state(ev, {0}, 1.0) == frozenset()


def test_forward_out_of_window(tree):
    ev = _log([(0.5, 0, [])], tree)
    with pytest.raises(ValueError):
        forward_state(ev, {0}, 1.5)


def test_dual_basic(tree):
    ev = _log([(0.5, 0, [1, 2])], tree)
    assert dual_state(ev, {3}, 1.0, 1.0) == {3}
    assert dual_state(ev, {0}, 1.0, 1.0) == {1, 2}
    assert dual_state(ev, {0}, 1.0, 0.4) == {0}
    with pytest.raises(ValueError):
        dual_state(ev, {0}, 0.5, 0.6)


def test_dual_merging(tree):
    ev = _log([(0.3, 1, [0]), (0.6, 2, [0])], tree)
    assert dual_state(ev, {1, 2}, 1.0, 1.0) == {0}


def test_dual_boundary_kill_flag():
    t = build_regular_tree(3, 1)
    ev = _log([(0.5, 0, [1])], t)
    assert dual_state(ev, {0}, 1.0, 1.0) == frozenset()
    assert dual_truncated(ev, {0}, 1.0, 1.0)
    with pytest.raises(TruncationError):
        check_duality(ev, {0}, {0}, 1.0)
    assert check_duality(ev, {0}, {0}, 1.0, strict=False)


def test_duality_trivial_cases(tree):
    ev = sample_event_log(tree, {0: 0.2, 2: 0.8}, 1.0, 9)
    assert check_duality(ev, set(), {0}, 1.0, strict=False)
    allv = np.flatnonzero(~tree.boundary).tolist()
    assert check_duality(ev, allv, {0}, 1.0, strict=False)


def test_additivity_trivial_cases(tree):
    ev = sample_event_log(tree, {0: 0.2, 2: 0.8}, 1.0, 9)
    A = {0, 1, 4}
    assert check_additivity(ev, [A, set()], 1.0, strict=False)
    assert check_additivity(ev, [A], 1.0, strict=False)
    assert check_additivity(ev, [{a} for a in A], 1.0, strict=False)


@pytest.mark.parametrize("spec", [TreeSpec(4, d=3), TreeSpec(4, d=4), TreeSpec(4, dist=DegreeDist.two_point(0.5))])
def test_duality_and_additivity_random(spec):
    rng = np.random.default_rng(11)
    for i in range(60):
        s = replicate_seed(77, i)
        t = spec.build(s)
        ev = sample_event_log(t, {0: 0.2, 1: 0.3, 2: 0.3, 3: 0.2}, 1.0, s)
        inner = np.flatnonzero(t.level <= 2).tolist()
        A, B = random_subset(rng, inner, 5), random_subset(rng, inner, 5)
        u = float(rng.uniform(0, 1))
        assert check_duality(ev, A, B, u, strict=False)
        assert check_additivity(ev, [{a} for a in A], u, strict=False)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.data())
def test_monotone_in_initial_set(seed, data):
    t = sample_gw_tree(DegreeDist.two_point(0.5), 4, seed)
    ev = sample_event_log(t, {0: 0.3, 1: 0.3, 2: 0.4}, 1.0, seed)
    interior = np.flatnonzero(~t.boundary).tolist()
    big = data.draw(st.sets(st.sampled_from(interior), min_size=1, max_size=10))
    small = data.draw(st.sets(st.sampled_from(sorted(big))))
    for u in (0.25, 0.5, 1.0):
        assert forward_state(ev, small, u) <= forward_state(ev, big, u)


def test_dual_offspring_rate_matches_params():
    # total k-event rate at the root over many logs: d p_k
    t = build_regular_tree(3, 2)
    params = {0: 0.25, 1: 0.25, 2: 0.5}
    T, n = 4.0, 1500
    by_k = np.zeros(3)
    for i in range(n):
        ev = sample_event_log(t, params, T, replicate_seed(8, i))
        for e in ev.site_events(0):
            by_k[len(e.sources)] += 1
    expected = np.array([0.25, 3 * 0.25, 3 * 0.5]) * T * n
    assert np.all(np.abs(by_k - expected) < 3 * np.sqrt(expected))
