"""Event-driven simulation of the zealot voter model and its estimators.

The sampler only proposes events at sites whose state can change: 1-sites
that a pick could empty and 0-sites next to a 1.  Events anywhere else are
no-ops, so skipping them leaves the law of the process unchanged.  Boundary
sites are frozen at 0; a zealot next to the boundary raises the
``boundary_touched`` flag.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import kernels
from ._arrays import rates, state_buffer, tree_arrays
from .graphical import EventLog
from .model import Estimate, ModelParams
from .rng import replicate_seed
from .trees import Tree, TreeSpec


@dataclass
class ForwardTrajectory:
    times: list[float]
    counts: list[int]
    root_states: list[int]
    extinction_time: float | None
    boundary_touched: bool
    n_events: int = 0
    root_on_time: float = 0.0
    states: list[frozenset[int]] | None = field(default=None, repr=False)

    @property
    def survived(self) -> bool:
        return self.extinction_time is None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "count", "root_state"])
        for row in zip(self.times, self.counts, self.root_states):
            w.writerow([repr(float(row[0])), int(row[1]), int(row[2])])
        return buf.getvalue()


def _init_members(tree: Tree, init: Iterable[int]) -> list[int]:
    members = sorted(set(int(a) for a in init))
    for a in members:
        if not 0 <= a < tree.n:
            raise KeyError(f"unknown vertex {a}")
    return [a for a in members if not tree.boundary[a]]


def simulate_forward(
    tree: Tree,
    params,
    init: Iterable[int],
    horizon: float,
    seed: int,
    *,
    dt: float = 0.1,
    window_start: float | None = None,
    log: EventLog | None = None,
    record_states: bool = False,
    backend=None,
) -> ForwardTrajectory:
    """Run the zealot process from ``init`` up to ``horizon``.

    ``dt > 0`` samples the trajectory on the grid 0, dt, 2 dt, ...;
    ``dt <= 0`` records every state change.  Passing ``log`` replays that
    realization instead of sampling (test mode); times are then the event
    times of the log and ``record_states`` keeps the full state after each
    event.
    """
    params = ModelParams.coerce(params)
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    params.check_against(tree.d_min)
    backend = backend or kernels.backend
    arrs = tree_arrays(tree, backend)
    members = _init_members(tree, init)
    touched0 = any(tree.boundary[a] for a in set(int(a) for a in init))
    state = state_buffer(tree.n, members, backend)

    if log is not None:
        return _replay(tree, log, state, horizon, record_states, touched0, backend)

    r = rates(params, tree)
    cum = r.cum.tolist() if backend is kernels.python_backend else r.cum
    ws = horizon / 2 if window_start is None else window_start
    ts, cs, rs, ext, touched, n_ev, root_on = backend.forward_sim(
        arrs.nbr_ptr, arrs.nbr, arrs.deg, arrs.boundary, arrs.adj_boundary,
        r.p0, cum, r.kmin, r.rmax, state, tree.root, float(horizon), seed, float(dt), float(ws),
    )
    return ForwardTrajectory(ts, cs, rs, None if ext < 0 else ext, bool(touched or touched0),
                             n_ev, root_on)


def _replay(tree, log, state, horizon, record_states, touched0, backend):
    if horizon > log.horizon:
        raise ValueError("horizon exceeds the event log window")
    arrs = tree_arrays(tree, backend)
    m = log.upto(horizon)
    sites = np.ascontiguousarray(log.sites[:m])
    src_ptr = np.ascontiguousarray(log.src_ptr[:m + 1])
    src = np.ascontiguousarray(log.src[:src_ptr[-1]])
    if backend is kernels.python_backend:
        sites, src_ptr, src = sites.tolist(), src_ptr.tolist(), src.tolist()
    root0 = int(state[tree.root])
    count0 = int(sum(state))
    snaps, touched = backend.forward_replay(arrs.boundary, arrs.adj_boundary, state,
                                            sites, src_ptr, src, True)
    times = [0.0] + log.times[:m].tolist()
    counts = [count0]
    roots = [root0]
    states = [] if record_states else None
    ext = 0.0 if count0 == 0 else None
    for e, snap in enumerate(snaps):
        arr = np.frombuffer(snap, dtype=np.uint8)
        c = int(arr.sum())
        counts.append(c)
        roots.append(int(arr[tree.root]))
        if record_states:
            states.append(frozenset(np.flatnonzero(arr).tolist()))
        if c == 0 and ext is None:
            ext = times[e + 1]
    return ForwardTrajectory(times, counts, roots, ext, bool(touched or touched0), m, 0.0, states)


def _replicas(spec, replicas: int, seed: int):
    if replicas < 1:
        raise ValueError("replicas must be at least 1")
    spec_tree = spec if isinstance(spec, Tree) else None
    for i in range(replicas):
        s = replicate_seed(seed, i)
        tree = spec_tree if spec_tree is not None else spec.build(s)
        yield i, s, tree


def _resolve_init(tree: Tree, init) -> list[int]:
    if isinstance(init, str):
        if init == "root":
            return [tree.root]
        if init == "all":
            return np.flatnonzero(~tree.boundary).tolist()
        raise ValueError(f"unknown initial condition {init!r}")
    return list(init)


def survival_probability(
    spec: Tree | TreeSpec,
    params,
    init,
    horizon: float,
    replicas: int,
    seed: int,
    *,
    backend=None,
) -> Estimate:
    """Fraction of replicas whose zealot set is non-empty at ``horizon``.

    ``boundary_fraction`` reports the share of replicas whose zealots reached
    a vertex next to the truncation boundary.
    """
    params = ModelParams.coerce(params)
    hits = touched = 0
    for _, s, tree in _replicas(spec, replicas, seed):
        traj = simulate_forward(tree, params, _resolve_init(tree, init), horizon, s,
                                dt=horizon, backend=backend)
        hits += traj.survived
        touched += traj.boundary_touched
    return Estimate.of_proportion(hits, replicas, seed, touched)


def root_occupation_frequency(
    spec: Tree | TreeSpec,
    params,
    horizon: float,
    replicas: int,
    seed: int,
    *,
    window: float = 0.5,
    backend=None,
) -> Estimate:
    """Mean fraction of the last ``window`` share of [0, horizon] during which the root is a zealot.

    Each replica starts from all non-boundary vertices occupied.
    """
    params = ModelParams.coerce(params)
    if not 0 < window <= 1:
        raise ValueError("window must lie in (0, 1]")
    ws = horizon * (1 - window)
    fractions = []
    touched = 0
    for _, s, tree in _replicas(spec, replicas, seed):
        expected = params.alpha(int(tree.degree[tree.root])) * horizon
        if expected < 10:
            raise ValueError(f"horizon {horizon} gives only {expected:.2f} expected root events; need 10")
        traj = simulate_forward(tree, params, _resolve_init(tree, "all"), horizon, s,
                                dt=horizon, window_start=ws, backend=backend)
        fractions.append(traj.root_on_time / (horizon - ws))
        touched += traj.boundary_touched
    return Estimate.of_mean(fractions, seed, touched)
