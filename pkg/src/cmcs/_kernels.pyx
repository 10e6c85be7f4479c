# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function here has a twin in ``_kernels_py`` with the same signature.
Walks, subset enumeration, swap scoring and annealing are bit-identical
across the two. Centroid assignment gives the same labels barring
sub-ulp ties, with distances equal to rounding. Skip-gram training is not
identical (the fallback batches its updates).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, asin, sqrt, exp, log, fabs, M_PI

cnp.import_array()

ctypedef unsigned long long u64

cdef double EARTH_RADIUS_KM = 6371.0
cdef double DEG = M_PI / 180.0


cdef inline u64 _mix(u64* state) nogil:
    cdef u64 z
    state[0] = state[0] + <u64>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <u64>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <u64>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double _uniform(u64* state) nogil:
    return <double>(_mix(state) >> 11) * (1.0 / 9007199254740992.0)


cdef inline long long _below(u64* state, long long n) nogil:
    cdef long long k = <long long>(_uniform(state) * n)
    if k >= n:
        k = n - 1
    return k


cdef inline bint _has_edge(const long long[:] indptr, const long long[:] indices,
                           long long u, long long x) nogil:
    cdef long long lo = indptr[u]
    cdef long long hi = indptr[u + 1]
    cdef long long mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if indices[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[u + 1] and indices[lo] == x


def random_walks(const long long[:] indptr, const long long[:] indices,
                 const long long[:] starts, const u64[:] seeds,
                 int walk_len, double p, double q):
    cdef Py_ssize_t n_walks = starts.shape[0]
    out = np.full((n_walks, walk_len), -1, dtype=np.int64)
    cdef long long[:, :] w = out
    cdef Py_ssize_t i, step
    cdef long long cur, prev, deg, x
    cdef u64 state
    cdef double upper, weight, inv_p = 1.0 / p, inv_q = 1.0 / q
    cdef bint unbiased = (p == 1.0 and q == 1.0)
    upper = 1.0
    if inv_p > upper:
        upper = inv_p
    if inv_q > upper:
        upper = inv_q
    with nogil:
        for i in range(n_walks):
            state = seeds[i]
            cur = starts[i]
            w[i, 0] = cur
            prev = -1
            for step in range(1, walk_len):
                deg = indptr[cur + 1] - indptr[cur]
                if deg == 0:
                    break
                if prev < 0 or unbiased:
                    x = indices[indptr[cur] + _below(&state, deg)]
                else:
                    while True:
                        x = indices[indptr[cur] + _below(&state, deg)]
                        if x == prev:
                            weight = inv_p
                        elif _has_edge(indptr, indices, prev, x):
                            weight = 1.0
                        else:
                            weight = inv_q
                        if _uniform(&state) * upper < weight:
                            break
                w[i, step] = x
                prev = cur
                cur = x
    return out


cdef inline double _log_sigmoid(double x) nogil:
    if x >= 0:
        return -log(1.0 + exp(-x))
    return x - log(1.0 + exp(x))


def sgns_train(const long long[:, :] walks, double[:, ::1] vin, double[:, ::1] vout,
               const long long[:] neg_table, int window, int negatives,
               int epochs, double lr, u64 seed):
    """Word2vec-style skip-gram with negative sampling, updated in place.

    The context window around each position is shrunk by a uniform draw in
    [0, window), as in the reference word2vec trainer.
    """
    cdef Py_ssize_t n_walks = walks.shape[0], walk_len = walks.shape[1]
    cdef Py_ssize_t dim = vin.shape[1], table_n = neg_table.shape[0]
    cdef Py_ssize_t e, wi, i, j, lo, hi, d, k, span
    cdef long long c, o, target
    cdef double dot, g, alpha, label, loss_sum
    cdef long long positions = 0, done = 0, total, pairs
    cdef u64 state = seed
    cdef double* h
    cdef double* t
    losses = np.zeros(epochs, dtype=np.float64)
    cdef double[:] losses_v = losses
    neu_arr = np.zeros(dim, dtype=np.float64)
    cdef double[::1] neu_v = neu_arr
    cdef double* neu = &neu_v[0]

    for wi in range(n_walks):
        for i in range(walk_len):
            if walks[wi, i] >= 0:
                positions += 1
    total = positions * epochs
    if total == 0:
        return losses

    with nogil:
        for e in range(epochs):
            loss_sum = 0.0
            pairs = 0
            for wi in range(n_walks):
                for i in range(walk_len):
                    c = walks[wi, i]
                    if c < 0:
                        break
                    alpha = lr * (1.0 - <double>done / <double>total)
                    if alpha < lr * 1e-4:
                        alpha = lr * 1e-4
                    done += 1
                    span = window - _below(&state, window)
                    lo = i - span
                    if lo < 0:
                        lo = 0
                    hi = i + span
                    if hi > walk_len - 1:
                        hi = walk_len - 1
                    h = &vin[c, 0]
                    for j in range(lo, hi + 1):
                        if j == i:
                            continue
                        o = walks[wi, j]
                        if o < 0:
                            break
                        for d in range(dim):
                            neu[d] = 0.0
                        for k in range(negatives + 1):
                            if k == 0:
                                target = o
                                label = 1.0
                            else:
                                target = neg_table[_below(&state, table_n)]
                                if target == o:
                                    continue
                                label = 0.0
                            t = &vout[target, 0]
                            dot = 0.0
                            for d in range(dim):
                                dot = dot + h[d] * t[d]
                            if label > 0.5:
                                loss_sum = loss_sum - _log_sigmoid(dot)
                            else:
                                loss_sum = loss_sum - _log_sigmoid(-dot)
                            g = (label - 1.0 / (1.0 + exp(-dot))) * alpha
                            for d in range(dim):
                                neu[d] = neu[d] + g * t[d]
                                t[d] = t[d] + g * h[d]
                        for d in range(dim):
                            h[d] = h[d] + neu[d]
                        pairs += 1
            if pairs > 0:
                losses_v[e] = loss_sum / pairs
    return losses


def nearest_centroid(const double[:, :] points, const double[:, :] centroids):
    """Haversine nearest centroid per (lat, lon) row; ties go to the lower index."""
    cdef Py_ssize_t n = points.shape[0], k = centroids.shape[0], i, j
    labels = np.empty(n, dtype=np.int64)
    dists = np.empty(n, dtype=np.float64)
    cdef long long[:] lab = labels
    cdef double[:] dv = dists
    ccos_arr = np.empty(k, dtype=np.float64)
    cdef double[:] ccos = ccos_arr
    cdef double best, a, lat1, lon1, c1, s1, s2
    cdef long long arg
    with nogil:
        for j in range(k):
            ccos[j] = cos(centroids[j, 0] * DEG)
        for i in range(n):
            lat1 = points[i, 0]
            lon1 = points[i, 1]
            c1 = cos(lat1 * DEG)
            best = 1e300
            arg = 0
            # a is monotone in the distance, so compare it and convert once
            for j in range(k):
                s1 = sin((centroids[j, 0] - lat1) * DEG * 0.5)
                s2 = sin((centroids[j, 1] - lon1) * DEG * 0.5)
                a = s1 * s1 + c1 * ccos[j] * s2 * s2
                if a < best:
                    best = a
                    arg = j
            if best > 1.0:
                best = 1.0
            lab[i] = arg
            dv[i] = 2.0 * EARTH_RADIUS_KM * asin(sqrt(best))
    return labels, dists


def best_swap(const double[:, :] U, const double[:] r,
              const long long[:] team, const long long[:] outs):
    """Best single swap over the full neighbourhood.

    Returns ``(pos_in_team, pos_in_outs, gain)`` where gain is the change in
    the team's unordered pair sum. Ties keep the first in row-major order.
    """
    cdef Py_ssize_t ka = team.shape[0], kb = outs.shape[0], i, j
    cdef double best = -1e300, g
    cdef Py_ssize_t bi = -1, bj = -1
    cdef long long a, b
    with nogil:
        for i in range(ka):
            a = team[i]
            for j in range(kb):
                b = outs[j]
                g = r[b] - U[a, b] - r[a]
                if g > best:
                    best = g
                    bi = i
                    bj = j
    return bi, bj, best


def best_swap_sampled(const double[:, :] U, const double[:] r,
                      const long long[:] team, const long long[:] outs,
                      const long long[:] pos_a, const long long[:] pos_b):
    cdef Py_ssize_t m = pos_a.shape[0], t
    cdef double best = -1e300, g
    cdef Py_ssize_t bt = -1
    cdef long long a, b
    with nogil:
        for t in range(m):
            a = team[pos_a[t]]
            b = outs[pos_b[t]]
            g = r[b] - U[a, b] - r[a]
            if g > best:
                best = g
                bt = t
    if bt < 0:
        return -1, -1, best
    return pos_a[bt], pos_b[bt], best


def best_subset(const double[:, :] U, int k):
    """Exhaustive max pair-sum k-subset, lexicographically first on ties."""
    cdef Py_ssize_t n = U.shape[0], i, j, t
    idx_arr = np.arange(k, dtype=np.int64)
    best_arr = np.arange(k, dtype=np.int64)
    cdef long long[:] idx = idx_arr
    cdef long long[:] best_idx = best_arr
    cdef double total, best = -1e300
    cdef bint more = True
    with nogil:
        while more:
            total = 0.0
            for i in range(k):
                for j in range(i + 1, k):
                    total = total + U[idx[i], idx[j]]
            if total > best:
                best = total
                for t in range(k):
                    best_idx[t] = idx[t]
            # next combination
            t = k - 1
            while t >= 0 and idx[t] == n - k + t:
                t -= 1
            if t < 0:
                more = False
            else:
                idx[t] += 1
                for j in range(t + 1, k):
                    idx[j] = idx[j - 1] + 1
    return best_arr, best


def anneal(const double[:, :] U, long long[:] team, long long[:] outs, double[:] r,
           long long iters, double t0, double cooling, u64 seed):
    """Metropolis single-swap annealing on the pair sum, in place.

    ``team``/``outs``/``r`` describe the current state and are mutated.
    Returns (best_team, best_pair_sum, trace of best pair sum per iteration).
    """
    cdef Py_ssize_t k = team.shape[0], m = outs.shape[0], n = U.shape[0]
    cdef Py_ssize_t it, x, i, j
    cdef long long a, b
    cdef double scale = 2.0 / (<double>k * (k - 1))
    cdef double cur = 0.0, best, delta, dq, temp = t0
    cdef u64 state = seed
    cdef bint accept
    trace = np.empty(iters, dtype=np.float64)
    cdef double[:] tr = trace
    best_arr = np.array(team, dtype=np.int64)
    cdef long long[:] bt = best_arr
    for i in range(k):
        cur += r[team[i]]
    cur *= 0.5
    best = cur
    with nogil:
        for it in range(iters):
            i = _below(&state, k)
            j = _below(&state, m)
            a = team[i]
            b = outs[j]
            delta = r[b] - U[a, b] - r[a]
            dq = delta * scale
            if dq >= 0:
                accept = True
            elif temp > 0:
                accept = _uniform(&state) < exp(dq / temp)
            else:
                accept = False
            if accept:
                for x in range(n):
                    r[x] = r[x] + (U[x, b] - U[x, a])
                team[i] = b
                outs[j] = a
                cur = cur + delta
                if cur > best:
                    best = cur
                    for x in range(k):
                        bt[x] = team[x]
            tr[it] = best
            temp = temp * cooling
    return best_arr, best, trace
