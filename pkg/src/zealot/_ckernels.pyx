# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event kernels; see ``_pykernels`` for the reference semantics.

Random numbers are consumed in the same order as in the Python version, so
both backends produce identical output for identical inputs.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double next_double(uint64_t* s) nogil:
    s[0] += GAMMA
    return (mix64(s[0]) >> 11) * TWO_M53


cdef inline Py_ssize_t draw_k(uint64_t* s, const double[::1] cum) nogil:
    cdef double v = next_double(s)
    cdef Py_ssize_t k = 1
    cdef Py_ssize_t K = cum.shape[0]
    while k < K and v >= cum[k - 1]:
        k += 1
    return k


cdef inline void pick(uint64_t* s, const int64_t[::1] nbr, Py_ssize_t start,
                      Py_ssize_t d, Py_ssize_t k, int64_t[::1] scratch) nogil:
    cdef Py_ssize_t i, j
    cdef int64_t tmp
    for i in range(d):
        scratch[i] = nbr[start + i]
    for i in range(k):
        j = i + <Py_ssize_t>(next_double(s) * (d - i))
        tmp = scratch[i]
        scratch[i] = scratch[j]
        scratch[j] = tmp


cdef inline void set_add(int64_t[::1] pos, int64_t[::1] items, Py_ssize_t* n, int64_t x) nogil:
    if pos[x] < 0:
        pos[x] = n[0]
        items[n[0]] = x
        n[0] += 1


cdef inline void set_discard(int64_t[::1] pos, int64_t[::1] items, Py_ssize_t* n, int64_t x) nogil:
    cdef int64_t i = pos[x]
    cdef int64_t last
    if i >= 0:
        n[0] -= 1
        last = items[n[0]]
        if last != x:
            items[i] = last
            pos[last] = i
        pos[x] = -1


cdef inline bint fwd_active(Py_ssize_t x, const unsigned char[::1] boundary,
                            unsigned char[::1] state, const int64_t[::1] deg,
                            int64_t[::1] n1, double p0, Py_ssize_t kmin) nogil:
    if boundary[x]:
        return False
    if state[x]:
        return p0 > 0.0 or deg[x] - n1[x] >= kmin
    return n1[x] > 0


cdef Py_ssize_t emit_grid(list ts, list cs, list rs, Py_ssize_t idx, double dt, double upto,
                          double horizon, bint strict, Py_ssize_t count, long root_state):
    cdef double g
    while True:
        g = idx * dt
        if g > horizon or (g >= upto if strict else g > upto):
            return idx
        ts.append(g)
        cs.append(count)
        rs.append(root_state)
        idx += 1


def forward_sim(const int64_t[::1] nbr_ptr, const int64_t[::1] nbr, const int64_t[::1] deg,
                const unsigned char[::1] boundary, const unsigned char[::1] adj_boundary,
                double p0, const double[::1] cum, Py_ssize_t kmin, double rmax,
                unsigned char[::1] state, Py_ssize_t root, double horizon, uint64_t seed,
                double dt, double window_start):
    cdef Py_ssize_t n = deg.shape[0]
    cdef uint64_t s = seed
    cdef int64_t[::1] n1 = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] apos = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] items = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] scratch = np.empty(max(1, np.max(deg) if n else 1), dtype=np.int64)
    cdef Py_ssize_t na = 0, x, y, j, k, i, count = 0, n_events = 0
    cdef bint touched = False, grid = dt > 0.0
    cdef double t = 0.0, u, r, ext_time, root_on = 0.0, last_root_t = 0.0
    cdef unsigned char new
    cdef int delta
    cdef Py_ssize_t gi = 0
    cdef list ts = [], cs = [], rs = []

    for x in range(n):
        if state[x]:
            count += 1
            for j in range(nbr_ptr[x], nbr_ptr[x + 1]):
                n1[nbr[j]] += 1
    for x in range(n):
        if fwd_active(x, boundary, state, deg, n1, p0, kmin):
            set_add(apos, items, &na, x)
        if state[x] and adj_boundary[x]:
            touched = True
    if not grid:
        ts.append(0.0); cs.append(count); rs.append(state[root])
    ext_time = 0.0 if count == 0 else -1.0

    while count > 0:
        if na == 0:
            break
        t += -log(1.0 - next_double(&s)) / (na * rmax)
        if t > horizon:
            break
        if grid:
            gi = emit_grid(ts, cs, rs, gi, dt, t, horizon, True, count, state[root])
        x = items[<Py_ssize_t>(next_double(&s) * na)]
        r = p0 + deg[x] * (1.0 - p0)
        u = next_double(&s) * rmax
        if u >= r:
            continue
        n_events += 1
        new = 0
        if u >= p0:
            k = draw_k(&s, cum)
            pick(&s, nbr, nbr_ptr[x], nbr_ptr[x + 1] - nbr_ptr[x], k, scratch)
            for i in range(k):
                if state[scratch[i]]:
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
        if fwd_active(x, boundary, state, deg, n1, p0, kmin):
            set_add(apos, items, &na, x)
        else:
            set_discard(apos, items, &na, x)
        for j in range(nbr_ptr[x], nbr_ptr[x + 1]):
            y = nbr[j]
            n1[y] += delta
            if fwd_active(y, boundary, state, deg, n1, p0, kmin):
                set_add(apos, items, &na, y)
            else:
                set_discard(apos, items, &na, y)
        if not grid:
            ts.append(t); cs.append(count); rs.append(state[root])
        if count == 0:
            ext_time = t
    if state[root]:
        root_on += max(0.0, horizon - max(last_root_t, window_start))
    if grid:
        emit_grid(ts, cs, rs, gi, dt, horizon, horizon, False, count, state[root])
    elif ext_time < 0:
        ts.append(horizon); cs.append(count); rs.append(state[root])
    return ts, cs, rs, ext_time, bool(touched), n_events, root_on


def forward_replay(const unsigned char[::1] boundary, const unsigned char[::1] adj_boundary,
                   unsigned char[::1] state, const int64_t[::1] ev_site,
                   const int64_t[::1] src_ptr, const int64_t[::1] src, bint record):
    cdef Py_ssize_t e, j, x
    cdef unsigned char new
    cdef bint touched = False
    cdef list snaps = []
    for e in range(ev_site.shape[0]):
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
    return snaps, bool(touched)


def cobra_sim(const int64_t[::1] nbr_ptr, const int64_t[::1] nbr, const int64_t[::1] deg,
              const unsigned char[::1] boundary, double p0, const double[::1] cum, double rmax,
              unsigned char[::1] occ, Py_ssize_t root, double horizon, uint64_t seed,
              double dt, double window_start, bint stop_on_window_hit):
    cdef Py_ssize_t n = deg.shape[0]
    cdef uint64_t s = seed
    cdef int64_t[::1] apos = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] items = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] scratch = np.empty(max(1, np.max(deg) if n else 1), dtype=np.int64)
    cdef Py_ssize_t na = 0, x, y, i, k, gi = 0, visits, kills = 0
    cdef bint grid = dt > 0.0, hit, stopped = False
    cdef double t = 0.0, t_next, u, r, ext_time
    cdef list ts = [], cs = [], rs = []

    for x in range(n):
        if occ[x]:
            set_add(apos, items, &na, x)
    visits = 1 if occ[root] else 0
    if not grid:
        ts.append(0.0); cs.append(na); rs.append(visits)
    ext_time = 0.0 if na == 0 else -1.0
    hit = window_start <= 0.0 and occ[root] == 1

    while na > 0:
        if hit and stop_on_window_hit:
            stopped = True
            break
        t_next = t - log(1.0 - next_double(&s)) / (na * rmax)
        if not hit and t < window_start <= t_next and window_start <= horizon and occ[root]:
            hit = True
            if stop_on_window_hit:
                stopped = True
                break
        t = t_next
        if t > horizon:
            break
        if grid:
            gi = emit_grid(ts, cs, rs, gi, dt, t, horizon, True, na, visits)
        x = items[<Py_ssize_t>(next_double(&s) * na)]
        r = p0 + deg[x] * (1.0 - p0)
        u = next_double(&s) * rmax
        if u >= r:
            continue
        set_discard(apos, items, &na, x)
        occ[x] = 0
        if u >= p0:
            k = draw_k(&s, cum)
            pick(&s, nbr, nbr_ptr[x], nbr_ptr[x + 1] - nbr_ptr[x], k, scratch)
            for i in range(k):
                y = scratch[i]
                if boundary[y]:
                    kills += 1
                    continue
                if y == root:
                    visits += 1
                    if t >= window_start:
                        hit = True
                if not occ[y]:
                    occ[y] = 1
                    set_add(apos, items, &na, y)
        if not grid:
            ts.append(t); cs.append(na); rs.append(visits)
        if na == 0:
            ext_time = t
    if grid:
        emit_grid(ts, cs, rs, gi, dt, horizon, horizon, False, na, visits)
    elif ext_time < 0 and not stopped:
        ts.append(horizon); cs.append(na); rs.append(visits)
    return ts, cs, rs, ext_time, kills, visits, bool(hit), bool(stopped)


def brw_sim(const int64_t[::1] nbr_ptr, const int64_t[::1] nbr, const int64_t[::1] deg,
            const unsigned char[::1] boundary, double p0, const double[::1] cum, double rmax,
            init, Py_ssize_t n_sites, double horizon, uint64_t seed, double dt, Py_ssize_t cap):
    cdef uint64_t s = seed
    cdef Py_ssize_t n_init = len(init)
    cdef Py_ssize_t size = max(16, 2 * n_init)
    cdef cnp.ndarray pos_arr = np.empty(size, dtype=np.int64)
    cdef cnp.ndarray mark_arr = np.empty(size, dtype=np.uint8)
    cdef int64_t[::1] pos = pos_arr
    cdef unsigned char[::1] mark = mark_arr
    cdef unsigned char[::1] cobra = np.zeros(n_sites, dtype=np.uint8)
    cdef int64_t[::1] scratch = np.empty(max(1, np.max(deg) if deg.shape[0] else 1), dtype=np.int64)
    cdef Py_ssize_t na = 0, x, y, i, k, gi = 0, kills = 0, n_cobra = 0
    cdef bint grid = dt > 0.0, overflow = False
    cdef unsigned char m
    cdef double t = 0.0, u, r, ext_time
    cdef list ts = [], cs = [], rs = []

    for x in init:
        pos[na] = x
        if cobra[x]:
            mark[na] = 0
        else:
            mark[na] = 1
            cobra[x] = 1
            n_cobra += 1
        na += 1
    if not grid:
        ts.append(0.0); cs.append(na); rs.append(n_cobra)
    ext_time = 0.0 if na == 0 else -1.0

    while na > 0:
        t += -log(1.0 - next_double(&s)) / (na * rmax)
        if t > horizon:
            break
        if grid:
            gi = emit_grid(ts, cs, rs, gi, dt, t, horizon, True, na, n_cobra)
        i = <Py_ssize_t>(next_double(&s) * na)
        x = pos[i]
        r = p0 + deg[x] * (1.0 - p0)
        u = next_double(&s) * rmax
        if u >= r:
            continue
        m = mark[i]
        na -= 1
        pos[i] = pos[na]
        mark[i] = mark[na]
        if m:
            cobra[x] = 0
            n_cobra -= 1
        if u >= p0:
            k = draw_k(&s, cum)
            if na + k > size:
                size *= 2
                pos_arr = np.resize(pos_arr, size)
                mark_arr = np.resize(mark_arr, size)
                pos = pos_arr
                mark = mark_arr
            pick(&s, nbr, nbr_ptr[x], nbr_ptr[x + 1] - nbr_ptr[x], k, scratch)
            for i in range(k):
                y = scratch[i]
                if boundary[y]:
                    kills += 1
                    continue
                pos[na] = y
                if m and not cobra[y]:
                    cobra[y] = 1
                    n_cobra += 1
                    mark[na] = 1
                else:
                    mark[na] = 0
                na += 1
            if na > cap:
                overflow = True
                break
        if not grid:
            ts.append(t); cs.append(na); rs.append(n_cobra)
        if na == 0:
            ext_time = t
    if grid:
        emit_grid(ts, cs, rs, gi, dt, horizon, horizon, False, na, n_cobra)
    elif ext_time < 0 and not overflow:
        ts.append(horizon); cs.append(na); rs.append(n_cobra)
    return (ts, cs, rs, pos_arr[:na].tolist(), np.asarray(cobra).tolist(),
            ext_time, kills, bool(overflow))


def pair_coalescence(Py_ssize_t d, Py_ssize_t x0, double horizon, Py_ssize_t replicas, uint64_t seed):
    cdef Py_ssize_t r, dist, hits = 0
    cdef uint64_t s
    cdef double t, down = 1.0 / d
    with nogil:
        for r in range(replicas):
            s = mix64(seed + <uint64_t>(r + 1) * GAMMA)
            dist = x0
            t = 0.0
            while dist > 0:
                t += -log(1.0 - next_double(&s)) / 2.0
                if t > horizon:
                    break
                if next_double(&s) < down:
                    dist -= 1
                else:
                    dist += 1
            if dist == 0:
                hits += 1
    return hits
