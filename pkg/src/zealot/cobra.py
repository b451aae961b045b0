"""Coalescing branching random walk (COBRA), its branching random walk bound,
and the tagged-particle walk.

A particle at x dies at rate p_0 and, at rate d(x) p_k, dies leaving
offspring on k distinct uniformly chosen neighbors.  In the COBRA particles
on the same site merge; in the branching random walk they do not.
Offspring landing on boundary vertices are killed and counted.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import stats

from . import kernels
from ._arrays import rates, state_buffer, tree_arrays
from .forward import _replicas, _resolve_init
from .model import Estimate, ModelParams
from .rng import CounterRNG, derive_key
from .trees import Tree, TreeSpec

POPULATION_CAP = 10**6


class PopulationOverflow(RuntimeError):
    """The branching random walk exceeded its particle cap."""

    def __init__(self, cap: int, trajectory: "BrwTrajectory"):
        super().__init__(f"branching random walk exceeded {cap} particles")
        self.trajectory = trajectory


class PrecisionError(ValueError):
    """A truncated computation cannot meet its error tolerance."""


@dataclass
class ParticleTrajectory:
    times: list[float]
    counts: list[int]
    root_visits: list[int]
    extinction_time: float | None
    boundary_kills: int
    total_root_visits: int
    window_hit: bool
    occupied: frozenset[int] = field(default=frozenset(), repr=False)
    stopped_early: bool = False

    @property
    def survived(self) -> bool:
        return self.extinction_time is None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "particle_count", "root_visits"])
        for t, c, v in zip(self.times, self.counts, self.root_visits):
            w.writerow([repr(float(t)), int(c), int(v)])
        return buf.getvalue()


@dataclass
class BrwTrajectory:
    times: list[float]
    counts: list[int]
    cobra_counts: list[int]
    particles: Counter
    cobra: frozenset[int]
    extinction_time: float | None
    boundary_kills: int
    overflow: bool = False


def _check(tree: Tree, params, horizon: float) -> ModelParams:
    params = ModelParams.coerce(params)
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    params.check_against(tree.d_min)
    return params


def simulate_cobra(
    tree: Tree,
    params,
    init: Iterable[int],
    horizon: float,
    seed: int,
    *,
    dt: float = 0.1,
    window_start: float | None = None,
    stop_on_window_hit: bool = False,
    backend=None,
) -> ParticleTrajectory:
    """Run the COBRA from ``init``.

    ``total_root_visits`` counts offspring placed on the root (plus one if
    the root starts occupied); ``window_hit`` tells whether the root was
    occupied at some time in [window_start, horizon].
    """
    params = _check(tree, params, horizon)
    backend = backend or kernels.backend
    arrs = tree_arrays(tree, backend)
    init = set(int(a) for a in init)
    members = [a for a in init if not tree.boundary[a]]
    pre_killed = len(init) - len(members)
    occ = state_buffer(tree.n, members, backend)
    r = rates(params, tree)
    cum = r.cum.tolist() if backend is kernels.python_backend else r.cum
    ws = horizon / 2 if window_start is None else window_start
    ts, cs, vs, ext, kills, visits, hit, stopped = backend.cobra_sim(
        arrs.nbr_ptr, arrs.nbr, arrs.deg, arrs.boundary, r.p0, cum, r.rmax, occ,
        tree.root, float(horizon), seed, float(dt), float(ws), bool(stop_on_window_hit),
    )
    occupied = frozenset(np.flatnonzero(np.frombuffer(bytes(occ), dtype=np.uint8)).tolist())
    return ParticleTrajectory(ts, cs, vs, None if ext < 0 else ext, kills + pre_killed, visits,
                              bool(hit), occupied, bool(stopped))


def simulate_brw(
    tree: Tree,
    params,
    init: Iterable[int],
    horizon: float,
    seed: int,
    *,
    dt: float = 0.1,
    cap: int = POPULATION_CAP,
    backend=None,
) -> BrwTrajectory:
    """Branching random walk from the multiset ``init``.

    A COBRA is carried along on the same randomness: one marked particle
    per COBRA site, whose offspring are marked unless they land on a site
    that already holds a marked particle.  ``cobra`` is the resulting COBRA
    state, which by construction lies inside the BRW support.
    """
    params = _check(tree, params, horizon)
    backend = backend or kernels.backend
    arrs = tree_arrays(tree, backend)
    init = [int(a) for a in init]
    members = [a for a in init if not tree.boundary[a]]
    r = rates(params, tree)
    cum = r.cum.tolist() if backend is kernels.python_backend else r.cum
    ts, cs, ccs, pos, cobra, ext, kills, overflow = backend.brw_sim(
        arrs.nbr_ptr, arrs.nbr, arrs.deg, arrs.boundary, r.p0, cum, r.rmax,
        members, tree.n, float(horizon), seed, float(dt), int(cap),
    )
    traj = BrwTrajectory(ts, cs, ccs, Counter(pos), frozenset(i for i, c in enumerate(cobra) if c),
                         None if ext < 0 else ext, kills + len(init) - len(members), bool(overflow))
    if overflow:
        raise PopulationOverflow(cap, traj)
    return traj


def root_return_probability(d: int, rate: float, t: float, truncation: int | None = None,
                            tol: float = 1e-12) -> tuple[float, float]:
    """P(S_t = root) for the rate-``rate`` uniform-neighbor walk on the d-regular tree.

    Uniformizes the walk and runs the distance chain (0 -> 1 surely,
    x -> x+1 w.p. (d-1)/d, x -> x-1 w.p. 1/d) with distances capped at
    ``truncation``.  Paths of at most 2 * truncation + 1 jumps are exact,
    so the Poisson tail beyond that bounds the error.  Returns
    (probability, error bound).
    """
    if d < 3:
        raise ValueError("d must be at least 3")
    if t < 0:
        raise ValueError("t must be non-negative")
    lam = rate * t
    if lam == 0:
        return 1.0, 0.0
    if truncation is None:
        truncation = int(math.ceil((lam + 12 * math.sqrt(lam) + 40) / 2))
    n_max = 2 * truncation + 1
    tail = float(stats.poisson.sf(n_max, lam))
    if tail > tol:
        raise PrecisionError(f"truncation {truncation} leaves Poisson tail {tail:.3g} > {tol:g}")
    weights = stats.poisson.pmf(np.arange(n_max + 1), lam)
    up, down = (d - 1) / d, 1.0 / d
    v = np.zeros(truncation + 1)
    v[0] = 1.0
    total = weights[0]
    for n in range(1, n_max + 1):
        nv = np.zeros_like(v)
        nv[1] += v[0]
        nv[2:] += up * v[1:-1]
        nv[:-1][1:] += down * v[2:]
        nv[0] += down * v[1]
        v = nv
        total += weights[n] * v[0]
    return float(total), tail


def brw_mean_occupancy_root(d: int, params, t: float, truncation: int | None = None) -> float:
    """Expected number of branching-random-walk particles at the root at time t.

    Starting from one particle at the root of the d-regular tree, the mean
    occupancy solves dm/dt = -alpha m(x) + mu sum_{y~x} m(y), whose
    solution is exp((d mu - alpha) t) P(S_t = root) with S the rate-(d mu)
    uniform-neighbor walk and alpha = d (1 - p_0) + p_0.
    """
    params = ModelParams.coerce(params)
    mu, alpha = params.mu, params.alpha(d)
    prob, _ = root_return_probability(d, d * mu, t, truncation)
    return math.exp((d * mu - alpha) * t) * prob


def brw_mean_population(d: int, params, t: float) -> float:
    """E|eta_t| from one particle: exp((d sum_k (k-1) p_k - p_0) t)."""
    params = ModelParams.coerce(params)
    return math.exp((d * params.mu - params.alpha(d)) * t)


@dataclass
class TaggedWalk:
    positions: list[int]
    toward_root: int
    opportunities: int
    restarts: list[int] = field(default_factory=list)

    @property
    def frequency(self) -> float:
        return self.toward_root / self.opportunities if self.opportunities else float("nan")


def tagged_particle_walk(tree: Tree, params, steps: int, seed: int) -> TaggedWalk:
    """Follow one COBRA lineage, preferring the offspring placed on the parent.

    Each step is one branching event at the current site.  Steps taken at
    the root are not opportunities to move rootward and are not counted in
    the frequency.  On reaching a boundary vertex the walk restarts at the
    root; restart indices into ``positions`` are recorded.
    """
    params = ModelParams.coerce(params)
    if params.p0 > 0:
        raise ValueError("the tagged walk is defined only for p_0 = 0")
    params.check_against(tree.d_min)
    if steps < 0:
        raise ValueError("steps must be non-negative")
    rng = CounterRNG(derive_key(seed, 0x7A6))
    ks = list(range(1, len(params.p)))
    cum = np.cumsum(params.p[1:]).tolist()
    x = tree.root
    positions = [x] if steps else []
    toward = opp = 0
    restarts = []
    for _ in range(steps):
        v = rng.random()
        k = next((kk for kk, c in zip(ks, cum) if v < c), ks[-1])
        nbrs = tree.neighbors(x)
        chosen = [int(nbrs[j]) for j in rng.sample_distinct(len(nbrs), k)]
        parent = int(tree.parent[x])
        if parent >= 0:
            opp += 1
            if parent in chosen:
                toward += 1
                x = parent
            else:
                x = chosen[rng.below(k)]
        else:
            x = chosen[rng.below(k)]
        if tree.boundary[x]:
            x = tree.root
            restarts.append(len(positions))
        positions.append(x)
    return TaggedWalk(positions, toward, opp, restarts)


def local_survival_frequency(
    spec: Tree | TreeSpec,
    params,
    horizon: float,
    replicas: int,
    seed: int,
    *,
    window: float = 0.5,
    backend=None,
) -> Estimate:
    """Fraction of COBRA replicas from the root that occupy the root in the last ``window`` of time."""
    params = ModelParams.coerce(params)
    if not 0 < window <= 1:
        raise ValueError("window must lie in (0, 1]")
    ws = horizon * (1 - window)
    hits = killed = 0
    for _, s, tree in _replicas(spec, replicas, seed):
        traj = simulate_cobra(tree, params, [tree.root], horizon, s, dt=horizon,
                              window_start=ws, stop_on_window_hit=True, backend=backend)
        hits += traj.window_hit
        killed += traj.boundary_kills > 0
    return Estimate.of_proportion(hits, replicas, seed, killed)


def cobra_survival_probability(
    spec: Tree | TreeSpec,
    params,
    init,
    horizon: float,
    replicas: int,
    seed: int,
    *,
    backend=None,
) -> Estimate:
    """Fraction of COBRA replicas still alive at ``horizon``."""
    params = ModelParams.coerce(params)
    hits = killed = 0
    for _, s, tree in _replicas(spec, replicas, seed):
        traj = simulate_cobra(tree, params, _resolve_init(tree, init), horizon, s,
                              dt=horizon, backend=backend)
        hits += traj.survived
        killed += traj.boundary_kills > 0
    return Estimate.of_proportion(hits, replicas, seed, killed)


def coalescence_probability(d: int, distance: int, horizon: float, replicas: int, seed: int,
                            *, backend=None) -> Estimate:
    """Monte Carlo probability that two rate-1 walks on the d-regular tree meet before ``horizon``."""
    if d < 3 or distance < 0:
        raise ValueError("need d >= 3 and distance >= 0")
    if replicas < 1:
        raise ValueError("replicas must be at least 1")
    backend = backend or kernels.backend
    hits = backend.pair_coalescence(d, distance, float(horizon), replicas, seed)
    return Estimate.of_proportion(hits, replicas, seed)
