"""Pure-Python event kernels.

Reference implementation and fallback for ``_ckernels``.  Both modules
consume random numbers in exactly the same order, so for equal inputs they
return identical results.

Conventions shared by all kernels:

* ``nbr_ptr``/``nbr`` is the CSR neighbor list (parent first), ``deg`` the
  intended degree, ``boundary`` a 0/1 mask.
* ``p0`` is the pure-death rate and ``cum[i]`` the cumulative probability of
  picking ``i + 1`` neighbors given that an event is not a pure death.
* Every non-boundary site carries events at rate ``p0 + deg(x) * (1 - p0)``;
  sites are proposed at the common rate ``rmax`` and accepted by thinning.
  The same uniform decides acceptance and, once accepted, whether the event
  is a pure death.
"""

from __future__ import annotations

import math

from .rng import CounterRNG, replicate_seed


def _draw_k(rng, cum):
    v = rng.random()
    k = 1
    K = len(cum)
    while k < K and v >= cum[k - 1]:
        k += 1
    return k


def _pick(rng, nbr, start, d, k, scratch):
    for i in range(d):
        scratch[i] = nbr[start + i]
    for i in range(k):
        j = i + int(rng.random() * (d - i))
        scratch[i], scratch[j] = scratch[j], scratch[i]
    return scratch[:k]


class _IndexedSet:
    """Membership array plus a dense list for O(1) add, remove and uniform pick."""

    def __init__(self, n):
        self.pos = [-1] * n
        self.items = []

    def add(self, x):
        if self.pos[x] < 0:
            self.pos[x] = len(self.items)
            self.items.append(x)

    def discard(self, x):
        i = self.pos[x]
        if i >= 0:
            last = self.items.pop()
            if last != x:
                self.items[i] = last
                self.pos[last] = i
            self.pos[x] = -1


def _emit_grid(out, next_idx, dt, upto, horizon, strict, count, root_state):
    """Record (t, count, root) at grid times before ``upto``; returns next index."""
    while True:
        g = next_idx * dt
        if g > horizon or (g >= upto if strict else g > upto):
            return next_idx
        out[0].append(g)
        out[1].append(count)
        out[2].append(root_state)
        next_idx += 1


def forward_sim(nbr_ptr, nbr, deg, boundary, adj_boundary, p0, cum, kmin, rmax,
                state, root, horizon, seed, dt, window_start):
    n = len(deg)
    rng = CounterRNG(seed)
    n1 = [0] * n
    count = 0
    for x in range(n):
        if state[x]:
            count += 1
            for j in range(nbr_ptr[x], nbr_ptr[x + 1]):
                n1[nbr[j]] += 1

    def is_active(x):
        if boundary[x]:
            return False
        if state[x]:
            return p0 > 0.0 or deg[x] - n1[x] >= kmin
        return n1[x] > 0

    active = _IndexedSet(n)
    touched = False
    for x in range(n):
        if is_active(x):
            active.add(x)
        if state[x] and adj_boundary[x]:
            touched = True

    out = ([], [], [])
    grid = dt > 0.0
    gi = 0
    if not grid:
        out[0].append(0.0)
        out[1].append(count)
        out[2].append(state[root])

    scratch = [0] * (max(deg) if n else 0)
    t = 0.0
    ext_time = 0.0 if count == 0 else -1.0
    n_events = 0
    root_on = 0.0
    last_root_t = 0.0
    while count > 0:
        na = len(active.items)
        if na == 0:
            break
        t += -math.log(1.0 - rng.random()) / (na * rmax)
        if t > horizon:
            break
        if grid:
            gi = _emit_grid(out, gi, dt, t, horizon, True, count, state[root])
        x = active.items[int(rng.random() * na)]
        r = p0 + deg[x] * (1.0 - p0)
        u = rng.random() * rmax
        if u >= r:
            continue
        n_events += 1
        if u < p0:
            new = 0
        else:
            k = _draw_k(rng, cum)
            new = 0
            for y in _pick(rng, nbr, nbr_ptr[x], nbr_ptr[x + 1] - nbr_ptr[x], k, scratch):
                if state[y]:
                    new = 1
                    break
        if new == state[x]:
            continue
        if x == root:
            if not new:
                root_on += max(0.0, t - max(last_root_t, window_start))
            last_root_t = t
        state[x] = new
        delta = 1 if new else -1
        count += delta
        if new and adj_boundary[x]:
            touched = True
        if is_active(x):
            active.add(x)
        else:
            active.discard(x)
        for j in range(nbr_ptr[x], nbr_ptr[x + 1]):
            y = nbr[j]
            n1[y] += delta
            if is_active(y):
                active.add(y)
            else:
                active.discard(y)
        if not grid:
            out[0].append(t)
            out[1].append(count)
            out[2].append(state[root])
        if count == 0:
            ext_time = t
    if state[root]:
        root_on += max(0.0, horizon - max(last_root_t, window_start))
    if grid:
        _emit_grid(out, gi, dt, horizon, horizon, False, count, state[root])
    elif ext_time < 0:
        out[0].append(horizon)
        out[1].append(count)
        out[2].append(state[root])
    return out[0], out[1], out[2], ext_time, touched, n_events, root_on


def forward_replay(boundary, adj_boundary, state, ev_site, src_ptr, src, record):
    """Apply a materialized event sequence in order; returns (snapshots, touched)."""
    snaps = []
    touched = False
    for e in range(len(ev_site)):
        x = ev_site[e]
        if not boundary[x]:
            new = 0
            for j in range(src_ptr[e], src_ptr[e + 1]):
                if state[src[j]]:
                    new = 1
                    break
            state[x] = new
            if new and adj_boundary[x]:
                touched = True
        if record:
            snaps.append(bytes(state))
    return snaps, touched


def cobra_sim(nbr_ptr, nbr, deg, boundary, p0, cum, rmax, occ, root, horizon, seed,
              dt, window_start, stop_on_window_hit):
    n = len(deg)
    rng = CounterRNG(seed)
    live = _IndexedSet(n)
    for x in range(n):
        if occ[x]:
            live.add(x)
    out = ([], [], [])
    grid = dt > 0.0
    gi = 0
    visits = 1 if occ[root] else 0
    if not grid:
        out[0].append(0.0)
        out[1].append(len(live.items))
        out[2].append(visits)
    scratch = [0] * (max(deg) if n else 0)
    t = 0.0
    kills = 0
    ext_time = 0.0 if not live.items else -1.0
    hit = window_start <= 0.0 and occ[root] == 1
    stopped = False
    while live.items:
        if hit and stop_on_window_hit:
            stopped = True
            break
        na = len(live.items)
        t_next = t - math.log(1.0 - rng.random()) / (na * rmax)
        if not hit and t < window_start <= t_next and window_start <= horizon and occ[root]:
            hit = True
            if stop_on_window_hit:
                stopped = True
                break
        t = t_next
        if t > horizon:
            break
        if grid:
            gi = _emit_grid(out, gi, dt, t, horizon, True, na, visits)
        x = live.items[int(rng.random() * na)]
        r = p0 + deg[x] * (1.0 - p0)
        u = rng.random() * rmax
        if u >= r:
            continue
        live.discard(x)
        occ[x] = 0
        if u >= p0:
            k = _draw_k(rng, cum)
            for y in _pick(rng, nbr, nbr_ptr[x], nbr_ptr[x + 1] - nbr_ptr[x], k, scratch):
                if boundary[y]:
                    kills += 1
                    continue
                if y == root:
                    visits += 1
                    if t >= window_start:
                        hit = True
                if not occ[y]:
                    occ[y] = 1
                    live.add(y)
        if not grid:
            out[0].append(t)
            out[1].append(len(live.items))
            out[2].append(visits)
        if not live.items:
            ext_time = t
    if grid:
        _emit_grid(out, gi, dt, horizon, horizon, False, len(live.items), visits)
    elif ext_time < 0 and not stopped:
        out[0].append(horizon)
        out[1].append(len(live.items))
        out[2].append(visits)
    return out[0], out[1], out[2], ext_time, kills, visits, hit, stopped


def brw_sim(nbr_ptr, nbr, deg, boundary, p0, cum, rmax, init, n_sites, horizon, seed, dt, cap):
    """Branching random walk with a coupled COBRA carried by marked particles."""
    rng = CounterRNG(seed)
    pos = list(init)
    cobra = [0] * n_sites
    mark = []
    for x in pos:
        mark.append(0 if cobra[x] else 1)
        cobra[x] = 1
    n_cobra = sum(mark)
    out = ([], [], [])
    grid = dt > 0.0
    gi = 0
    if not grid:
        out[0].append(0.0)
        out[1].append(len(pos))
        out[2].append(n_cobra)
    scratch = [0] * (max(deg) if len(deg) else 0)
    t = 0.0
    kills = 0
    overflow = False
    ext_time = 0.0 if not pos else -1.0
    while pos:
        na = len(pos)
        t += -math.log(1.0 - rng.random()) / (na * rmax)
        if t > horizon:
            break
        if grid:
            gi = _emit_grid(out, gi, dt, t, horizon, True, na, n_cobra)
        i = int(rng.random() * na)
        x = pos[i]
        r = p0 + deg[x] * (1.0 - p0)
        u = rng.random() * rmax
        if u >= r:
            continue
        m = mark[i]
        pos[i] = pos[-1]
        mark[i] = mark[-1]
        pos.pop()
        mark.pop()
        if m:
            cobra[x] = 0
            n_cobra -= 1
        if u >= p0:
            k = _draw_k(rng, cum)
            for y in _pick(rng, nbr, nbr_ptr[x], nbr_ptr[x + 1] - nbr_ptr[x], k, scratch):
                if boundary[y]:
                    kills += 1
                    continue
                pos.append(y)
                if m and not cobra[y]:
                    cobra[y] = 1
                    n_cobra += 1
                    mark.append(1)
                else:
                    mark.append(0)
            if len(pos) > cap:
                overflow = True
                break
        if not grid:
            out[0].append(t)
            out[1].append(len(pos))
            out[2].append(n_cobra)
        if not pos:
            ext_time = t
    if grid:
        _emit_grid(out, gi, dt, horizon, horizon, False, len(pos), n_cobra)
    elif ext_time < 0 and not overflow:
        out[0].append(horizon)
        out[1].append(len(pos))
        out[2].append(n_cobra)
    return out[0], out[1], out[2], pos, cobra, ext_time, kills, overflow


def pair_coalescence(d, x0, horizon, replicas, seed):
    """Replicas in which two rate-1 walks at tree distance x0 meet before ``horizon``.

    Tracks the distance chain only: each of the two walks jumps at rate 1 and
    every jump moves the pair closer with probability 1/d.
    """
    hits = 0
    down = 1.0 / d
    for r in range(replicas):
        rng = CounterRNG(replicate_seed(seed, r))
        dist = x0
        t = 0.0
        while dist > 0:
            t += -math.log(1.0 - rng.random()) / 2.0
            if t > horizon:
                break
            if rng.random() < down:
                dist -= 1
            else:
                dist += 1
        if dist == 0:
            hits += 1
    return hits
