"""Pure Python / numpy fallback for ``cmcs._kernels``.

Same signatures and, apart from ``sgns_train``, the same results. The
random-number stream is a splitmix64 generator re-implemented with masked
Python integers so walks and annealing replay exactly.
"""

import math
from itertools import combinations

import numpy as np

EARTH_RADIUS_KM = 6371.0
_MASK = (1 << 64) - 1


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self):
        return (self.next() >> 11) * (1.0 / 9007199254740992.0)

    def below(self, n):
        k = int(self.uniform() * n)
        return n - 1 if k >= n else k


def _has_edge(indptr, indices, u, x):
    lo, hi = indptr[u], indptr[u + 1]
    pos = lo + int(np.searchsorted(indices[lo:hi], x))
    return pos < hi and indices[pos] == x


def random_walks(indptr, indices, starts, seeds, walk_len, p, q):
    indptr = np.asarray(indptr, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    ptr = indptr.tolist()
    idx = indices.tolist()
    out = np.full((len(starts), walk_len), -1, dtype=np.int64)
    inv_p, inv_q = 1.0 / p, 1.0 / q
    upper = max(1.0, inv_p, inv_q)
    unbiased = p == 1.0 and q == 1.0
    for i, (start, seed) in enumerate(zip(np.asarray(starts).tolist(), np.asarray(seeds).tolist())):
        rng = SplitMix64(seed)
        cur, prev = start, -1
        walk = [cur]
        for _ in range(1, walk_len):
            base = ptr[cur]
            deg = ptr[cur + 1] - base
            if deg == 0:
                break
            if prev < 0 or unbiased:
                x = idx[base + rng.below(deg)]
            else:
                while True:
                    x = idx[base + rng.below(deg)]
                    if x == prev:
                        weight = inv_p
                    elif _has_edge(indptr, indices, prev, x):
                        weight = 1.0
                    else:
                        weight = inv_q
                    if rng.uniform() * upper < weight:
                        break
            walk.append(x)
            prev, cur = cur, x
        out[i, : len(walk)] = walk
    return out


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def sgns_train(walks, vin, vout, neg_table, window, negatives, epochs, lr, seed, batch=1024):
    """Mini-batch skip-gram with negative sampling (updates ``vin``/``vout`` in place).

    Pairs are accumulated per batch with ``np.add.at``, so results differ from
    the compiled per-pair SGD, but the contract (finite, decreasing loss) is the same.
    A pair at offset ``off`` is kept with probability ``(window - off + 1) / window``,
    which matches the compiled kernel's randomly shrunk window in expectation.
    """
    walks = np.asarray(walks)
    neg_table = np.asarray(neg_table)
    rng = np.random.default_rng(int(seed) & _MASK)
    centers, contexts = [], []
    L = walks.shape[1]
    for off in range(1, window + 1):
        if off >= L:
            break
        a, b = walks[:, :-off].ravel(), walks[:, off:].ravel()
        ok = (a >= 0) & (b >= 0) & (rng.random(a.shape) < (window - off + 1) / window)
        centers += [a[ok], b[ok]]
        contexts += [b[ok], a[ok]]
    losses = np.zeros(epochs)
    if not centers:
        return losses
    centers = np.concatenate(centers)
    contexts = np.concatenate(contexts)
    n_pairs = len(centers)
    total = max(1, n_pairs * epochs)
    done = 0
    for e in range(epochs):
        order = rng.permutation(n_pairs)
        loss_sum = 0.0
        for s in range(0, n_pairs, batch):
            sel = order[s : s + batch]
            c, o = centers[sel], contexts[sel]
            alpha = max(lr * (1.0 - done / total), lr * 1e-4)
            done += len(sel)
            negs = neg_table[rng.integers(0, len(neg_table), size=(len(sel), negatives))]
            targets = np.concatenate([o[:, None], negs], axis=1)
            labels = np.zeros(targets.shape)
            labels[:, 0] = 1.0
            mask = np.ones(targets.shape)
            mask[:, 1:] = negs != o[:, None]
            h = vin[c]
            t = vout[targets]
            dots = np.einsum("bd,bkd->bk", h, t)
            sign = 2.0 * labels - 1.0
            loss_sum += float(-(_log_sigmoid(sign * dots) * mask).sum())
            g = (labels - 1.0 / (1.0 + np.exp(-dots))) * mask * alpha
            grad_in = np.einsum("bk,bkd->bd", g, t)
            grad_out = g[:, :, None] * h[:, None, :]
            np.add.at(vout, targets.ravel(), grad_out.reshape(-1, h.shape[1]))
            np.add.at(vin, c, grad_in)
        losses[e] = loss_sum / n_pairs
    return losses


def _haversine_matrix(points, centroids):
    lat1 = np.radians(points[:, 0])[:, None]
    lon1 = np.radians(points[:, 1])[:, None]
    lat2 = np.radians(centroids[:, 0])[None, :]
    lon2 = np.radians(centroids[:, 1])[None, :]
    a = np.sin((lat2 - lat1) * 0.5) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) * 0.5) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.minimum(a, 1.0)))


def nearest_centroid(points, centroids, chunk=20000):
    points = np.asarray(points, dtype=np.float64)
    centroids = np.asarray(centroids, dtype=np.float64)
    labels = np.empty(len(points), dtype=np.int64)
    dists = np.empty(len(points))
    for s in range(0, len(points), chunk):
        d = _haversine_matrix(points[s : s + chunk], centroids)
        labels[s : s + chunk] = d.argmin(axis=1)
        dists[s : s + chunk] = d[np.arange(len(d)), labels[s : s + chunk]]
    return labels, dists


def best_swap(U, r, team, outs):
    team = np.asarray(team)
    outs = np.asarray(outs)
    if len(team) == 0 or len(outs) == 0:
        return -1, -1, -1e300
    gains = r[outs][None, :] - U[np.ix_(team, outs)] - r[team][:, None]
    flat = int(gains.argmax())
    i, j = divmod(flat, len(outs))
    return i, j, float(gains[i, j])


def best_swap_sampled(U, r, team, outs, pos_a, pos_b):
    if len(pos_a) == 0:
        return -1, -1, -1e300
    a = np.asarray(team)[pos_a]
    b = np.asarray(outs)[pos_b]
    gains = r[b] - U[a, b] - r[a]
    t = int(gains.argmax())
    return int(pos_a[t]), int(pos_b[t]), float(gains[t])


def best_subset(U, k, chunk=200_000):
    U = np.asarray(U, dtype=np.float64)
    n = U.shape[0]
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    best, best_idx = -1e300, np.arange(k, dtype=np.int64)
    it = combinations(range(n), k)
    while True:
        block = np.array(list(_take(it, chunk)), dtype=np.int64).reshape(-1, k)
        if len(block) == 0:
            break
        total = np.zeros(len(block))
        for i, j in pairs:
            total += U[block[:, i], block[:, j]]
        t = int(total.argmax())
        if total[t] > best:
            best = float(total[t])
            best_idx = block[t].copy()
    return best_idx, best


def _take(it, n):
    for _, item in zip(range(n), it):
        yield item


def anneal(U, team, outs, r, iters, t0, cooling, seed):
    k, m = len(team), len(outs)
    scale = 2.0 / (k * (k - 1))
    rng = SplitMix64(seed)
    cur = 0.0
    for a in team:
        cur += r[a]
    cur *= 0.5
    best = cur
    best_team = np.array(team, dtype=np.int64)
    trace = np.empty(iters)
    temp = t0
    for it in range(iters):
        i = rng.below(k)
        j = rng.below(m)
        a, b = int(team[i]), int(outs[j])
        delta = r[b] - U[a, b] - r[a]
        dq = delta * scale
        if dq >= 0:
            accept = True
        elif temp > 0:
            accept = rng.uniform() < math.exp(dq / temp)
        else:
            accept = False
        if accept:
            r += U[:, b] - U[:, a]
            team[i] = b
            outs[j] = a
            cur = cur + delta
            if cur > best:
                best = cur
                best_team[:] = team
        trace[it] = best
        temp = temp * cooling
    return best_team, best, trace
