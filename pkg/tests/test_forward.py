import numpy as np
import pytest

from zealot.forward import root_occupation_frequency, simulate_forward, survival_probability
from zealot.graphical import forward_state, sample_event_log
from zealot.model import Estimate, ModelParams
from zealot.rng import replicate_seed
from zealot.trees import DegreeDist, TreeSpec, build_regular_tree, sample_gw_tree


def test_model_params():
    p = ModelParams.from_mapping({0: 0.2, 3: 0.8})
    assert p.mu == pytest.approx(2.4)
    assert p.gamma == pytest.approx(1.4)
    assert ModelParams((0.5, 0.5)).gamma == -0.5
    assert ModelParams((0, 0, 1.0, 0.0)).k_max == 2
    with pytest.raises(ValueError):
        ModelParams((0.5, 0.6))
    with pytest.raises(ValueError):
        ModelParams((-0.1, 1.1))


def test_empty_init():
    t = build_regular_tree(3, 3)
    traj = simulate_forward(t, {0: 0.5, 2: 0.5}, [], 2.0, 1)
    assert traj.extinction_time == 0.0
    assert all(c == 0 for c in traj.counts)


def test_rejects_bad_input():
    t = build_regular_tree(3, 3)
    with pytest.raises(ValueError):
        simulate_forward(t, {2: 1}, [0], 0.0, 1)
    with pytest.raises(ValueError):
        simulate_forward(t, {4: 1}, [0], 1.0, 1)


def test_pure_death_exponential_clock():
    t = build_regular_tree(3, 2)
    n = 10**4
    times = [simulate_forward(t, {0: 1}, [0], 50.0, replicate_seed(1, i), dt=50.0).extinction_time
             for i in range(n)]
    assert abs(np.mean(times) - 1.0) < 3 * np.std(times) / np.sqrt(n)


def test_zero_is_absorbing_and_grid():
    t = build_regular_tree(3, 5)
    for s in range(20):
        traj = simulate_forward(t, {0: 0.4, 1: 0.3, 2: 0.3}, [0, 1], 5.0, s, dt=0.1)
        assert np.allclose(np.diff(traj.times), 0.1)
        counts = np.array(traj.counts)
        if traj.extinction_time is not None:
            k = int(np.argmax(counts == 0))
            assert np.all(counts[k:] == 0)


def test_linear_voter_changes_by_one():
    t = build_regular_tree(3, 6)
    traj = simulate_forward(t, {1: 1}, [0], 3.0, 4, dt=0)
    assert np.all(np.abs(np.diff(traj.counts)) <= 1)


@pytest.mark.parametrize("seed", range(10))
def test_replay_matches_forward_state(seed):
    t = sample_gw_tree(DegreeDist.two_point(0.5), 3, seed)
    ev = sample_event_log(t, {0: 0.2, 1: 0.4, 2: 0.4}, 2.0, seed)
    A = {0, int(t.children(0)[0])}
    traj = simulate_forward(t, {0: 0.2, 1: 0.4, 2: 0.4}, A, 2.0, seed, log=ev, record_states=True)
    for e, state in enumerate(traj.states):
        assert state == forward_state(ev, A, float(ev.times[e]))


def test_monotone_coupling_through_shared_log():
    t = build_regular_tree(3, 4)
    p = {0: 0.3, 1: 0.3, 2: 0.4}
    for s in range(20):
        ev = sample_event_log(t, p, 2.0, s)
        small = simulate_forward(t, p, [0], 2.0, s, log=ev, record_states=True)
        big = simulate_forward(t, p, [0, 1, 2, 5], 2.0, s, log=ev, record_states=True)
        assert all(a <= b for a, b in zip(small.states, big.states))


@pytest.mark.slow
def test_survival_positive_when_gamma_positive():
    est = survival_probability(TreeSpec(12, d=3), {2: 1}, "root", 20.0, 1000, seed=5)
    assert est.point > 0.05


def test_survival_pure_death_vanishes():
    est = survival_probability(TreeSpec(3, d=3), {0: 1}, "root", 10.0, 500, seed=2)
    assert est.point <= 0.01


def test_single_replica_is_degenerate():
    est = survival_probability(TreeSpec(3, d=3), {0: 0.5, 2: 0.5}, "root", 1.0, 1, seed=2)
    assert est.degenerate and est.half_width == 0.0
    with pytest.raises(ValueError):
        survival_probability(TreeSpec(3, d=3), {2: 1}, "root", 1.0, 0, seed=2)


def test_root_occupation_frequency():
    low = root_occupation_frequency(TreeSpec(5, d=3), {0: 1}, 20.0, 50, seed=3)
    assert low.point == 0.0
    high = root_occupation_frequency(TreeSpec(6, d=3), {3: 1}, 20.0, 50, seed=3)
    assert high.point > 0.5
    with pytest.raises(ValueError):
        root_occupation_frequency(TreeSpec(5, d=3), {3: 1}, 1.0, 5, seed=3)


def test_estimate_is_order_independent():
    rng = np.random.default_rng(0)
    x = rng.random(101)
    a = Estimate.of_mean(x, 1)
    b = Estimate.of_mean(rng.permutation(x), 1)
    assert a == b


def test_csv_header():
    t = build_regular_tree(3, 3)
    text = simulate_forward(t, {0: 0.5, 2: 0.5}, [0], 1.0, 1).to_csv()
    assert text.splitlines()[0] == "t,count,root_state"


def test_boundary_touch_flag():
    t = build_regular_tree(3, 2)
    traj = simulate_forward(t, {2: 1}, [0], 5.0, 1)
    assert traj.boundary_touched
