"""Harris graphical representation of the zealot voter model.

An :class:`EventLog` is one realization of the per-site Poisson marks on a
truncated tree.  Each event at site x either carries no sources (a pure
kill, rate p_0) or k distinct neighbor sources (rate d(x) p_k); the new
state of x is the OR of its sources' states.  The same log is read upward
in time for the zealot process and downward for the coalescing branching
dual.

Boundary policy: boundary vertices carry no events, are frozen at 0 in the
forward direction and kill dual particles that reach them.  Both readings
then describe the same modified graph, so duality and additivity hold
exactly.  Truncation flags record when a run may differ from the infinite
tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .model import ModelParams
from .rng import CounterRNG, derive_key
from .trees import Tree, TruncationError


@dataclass(frozen=True)
class Event:
    time: float
    site: int
    sources: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class EventLog:
    """Events in global (time, site) order with CSR-packed sources."""

    tree: Tree
    horizon: float
    seed: int
    times: np.ndarray
    sites: np.ndarray
    src_ptr: np.ndarray
    src: np.ndarray
    params: ModelParams | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.times)

    def sources(self, e: int) -> np.ndarray:
        return self.src[self.src_ptr[e]:self.src_ptr[e + 1]]

    def event(self, e: int) -> Event:
        return Event(float(self.times[e]), int(self.sites[e]), tuple(self.sources(e).tolist()))

    def __iter__(self) -> Iterator[Event]:
        for e in range(len(self)):
            yield self.event(e)

    def site_events(self, x: int) -> list[Event]:
        return [self.event(e) for e in np.flatnonzero(self.sites == x)]

    def upto(self, t: float) -> int:
        """Number of events with time <= t."""
        return int(np.searchsorted(self.times, t, side="right"))

    def to_text(self) -> str:
        lines = [f"# horizon {self.horizon!r} seed {self.seed}"]
        for e in range(len(self)):
            srcs = self.sources(e).tolist()
            lines.append(" ".join([repr(float(self.times[e])), str(int(self.sites[e])), str(len(srcs))]
                                  + [str(s) for s in srcs]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, tree: Tree, horizon: float | None = None, seed: int | None = None) -> EventLog:
        events = []
        for line in text.splitlines():
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "#":
                if len(parts) >= 5 and parts[1] == "horizon" and parts[3] == "seed":
                    horizon = float(parts[2]) if horizon is None else horizon
                    seed = int(parts[4]) if seed is None else seed
                continue
            k = int(parts[2])
            if len(parts) != 3 + k:
                raise ValueError(f"event line declares {k} sources: {line!r}")
            events.append((float(parts[0]), int(parts[1]), [int(s) for s in parts[3:]]))
        if horizon is None:
            raise ValueError("horizon missing from event log text")
        return _pack(tree, horizon, seed or 0, events, None)


def _pack(tree, horizon, seed, events, params) -> EventLog:
    events.sort(key=lambda ev: (ev[0], ev[1]))
    times = np.array([ev[0] for ev in events], dtype=np.float64)
    sites = np.array([ev[1] for ev in events], dtype=np.int64)
    lens = np.array([len(ev[2]) for ev in events], dtype=np.int64)
    src_ptr = np.zeros(len(events) + 1, dtype=np.int64)
    np.cumsum(lens, out=src_ptr[1:])
    src = np.array([s for ev in events for s in ev[2]], dtype=np.int64)
    for arr in (times, sites, src_ptr, src):
        arr.setflags(write=False)
    return EventLog(tree, float(horizon), int(seed), times, sites, src_ptr, src, params)


def sample_event_log(tree: Tree, params, horizon: float, seed: int) -> EventLog:
    """Sample the graphical representation on ``tree`` over (0, horizon].

    Site x carries independent streams: stream 0 at rate p_0 with no
    sources, stream k at rate d(x) p_k with k distinct uniform neighbors.
    Each (seed, site, stream) triple keys its own counter-based generator.
    """
    params = ModelParams.coerce(params)
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    params.check_against(tree.d_min)
    events = []
    for x in np.flatnonzero(~tree.boundary).tolist():
        d = int(tree.degree[x])
        nbrs = tree.neighbors(x).tolist()
        for k, pk in enumerate(params.p):
            rate = pk if k == 0 else d * pk
            if rate <= 0:
                continue
            rng = CounterRNG(derive_key(seed, x, k))
            t = rng.exponential(rate)
            while t <= horizon:
                srcs = [nbrs[j] for j in rng.sample_distinct(d, k)] if k else []
                events.append((t, x, srcs))
                t += rng.exponential(rate)
    return _pack(tree, horizon, seed, events, params)


def _forward(log: EventLog, A: Iterable[int], t: float) -> tuple[set[int], bool]:
    if t < 0 or t > log.horizon:
        raise ValueError(f"time {t} outside [0, {log.horizon}]")
    tree = log.tree
    near = tree.touches_boundary()
    state = set()
    touched = False
    for a in A:
        if tree.boundary[a]:
            touched = True
        else:
            state.add(int(a))
            touched = touched or bool(near[a])
    for e in range(log.upto(t)):
        if not state:
            break
        x = int(log.sites[e])
        if tree.boundary[x]:
            continue
        if any(int(y) in state for y in log.sources(e)):
            state.add(x)
            touched = touched or bool(near[x])
        else:
            state.discard(x)
    return state, touched


def _dual(log: EventLog, B: Iterable[int], t: float, s: float) -> tuple[set[int], bool]:
    if t < 0 or t > log.horizon:
        raise ValueError(f"time {t} outside [0, {log.horizon}]")
    if s < 0 or s > t:
        raise ValueError(f"dual window s={s} must lie in [0, t={t}]")
    bnd = log.tree.boundary
    particles = set()
    killed = False
    for b in B:
        if bnd[b]:
            killed = True
        else:
            particles.add(int(b))
    lo = np.searchsorted(log.times, t - s, side="right")
    for e in range(log.upto(t) - 1, lo - 1, -1):
        if not particles:
            break
        x = int(log.sites[e])
        if x in particles:
            particles.discard(x)
            for y in log.sources(e).tolist():
                if bnd[y]:
                    killed = True
                else:
                    particles.add(y)
    return particles, killed


def forward_state(log: EventLog, A: Iterable[int], t: float) -> frozenset[int]:
    """Zealot set at time t started from A, read upward through the log."""
    return frozenset(_forward(log, A, t)[0])


def dual_state(log: EventLog, B: Iterable[int], t: float, s: float) -> frozenset[int]:
    """Dual particles at time t - s started from B at time t."""
    return frozenset(_dual(log, B, t, s)[0])


def dual_truncated(log: EventLog, B: Iterable[int], t: float, s: float) -> bool:
    return _dual(log, B, t, s)[1]


def check_duality(log: EventLog, A: Iterable[int], B: Iterable[int], t: float, *, strict: bool = True) -> bool:
    """Pathwise identity {xi_t^A meets B} == {A meets zeta_t^{B,t}} on one log.

    With ``strict`` a dual lineage killed at the boundary makes the instance
    inconclusive, signalled by :class:`TruncationError`.
    """
    A = set(int(a) for a in A)
    B = set(int(b) for b in B)
    xi, _ = _forward(log, A, t)
    zeta, killed = _dual(log, B, t, t)
    if strict and killed:
        raise TruncationError("dual reached the boundary; duality check inconclusive")
    return bool(xi & B) == bool(A & zeta)


def check_additivity(log: EventLog, parts: Sequence[Iterable[int]], t: float, *, strict: bool = True) -> bool:
    """xi_t of the union equals the union of the xi_t of the parts."""
    parts = [set(int(a) for a in p) for p in parts]
    union = set().union(*parts) if parts else set()
    whole, touched = _forward(log, union, t)
    if strict and touched:
        raise TruncationError("forward process reached the boundary; additivity check inconclusive")
    pieces = set()
    for p in parts:
        pieces |= _forward(log, p, t)[0]
    return whole == pieces
