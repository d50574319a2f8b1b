"""Pure-Python versions of the compiled kernels (same signatures as ``_core``)."""
import math

import numpy as np


def _closing(ptr, slots, r):
    k = len(ptr) - 1
    return [[tuple(slots[(j * r):(j * r + r)]) for j in range(ptr[d], ptr[d + 1])] for d in range(k)]


def _powers(n, r):
    return [n ** (r - 1 - i) for i in range(r)]


def _count(hdeg, closing, k, adj, gdeg, n, pw):
    x = [0] * k
    used = [False] * n
    total = 0

    def extend(d):
        nonlocal total
        for v in range(n):
            if used[v] or gdeg[v] < hdeg[d]:
                continue
            x[d] = v
            ok = True
            for e in closing[d]:
                if not adj[sum(x[s] * w for s, w in zip(e, pw))]:
                    ok = False
                    break
            if not ok:
                continue
            if d + 1 == k:
                total += 1
            else:
                used[v] = True
                extend(d + 1)
                used[v] = False

    extend(0)
    return total


def injective_count(hdeg, ptr, slots, k, adj, gdeg, n, r):
    closing = _closing(list(ptr), list(slots), r)
    return _count(list(hdeg), closing, k, adj.tolist(), gdeg.tolist(), n, _powers(n, r))


def injective_count_batch(hdeg, ptr, slots, k, graphs, ranks, n, r):
    closing = _closing(list(ptr), list(slots), r)
    hdeg = list(hdeg)
    pw = _powers(n, r)
    valid = ranks >= 0
    out = np.zeros(graphs.shape[0], dtype=np.int64)
    for b in range(graphs.shape[0]):
        adj = np.zeros(n**r, dtype=np.uint8)
        adj[valid] = graphs[b][ranks[valid]]
        gdeg = adj.reshape(n, -1).sum(axis=1) // math.factorial(r - 1)
        out[b] = _count(hdeg, closing, k, adj.tolist(), gdeg.tolist(), n, pw)
    return out


def injective_weighted_sum(ptr, slots, k, weights, n, r):
    closing = _closing(list(ptr), list(slots), r)
    w = weights.tolist()
    pw = _powers(n, r)
    x = [0] * k
    used = [False] * n
    terms = []

    def extend(d, acc):
        for v in range(n):
            if used[v]:
                continue
            x[d] = v
            val = acc
            for e in closing[d]:
                val *= w[sum(x[s] * q for s, q in zip(e, pw))]
                if val == 0.0:
                    break
            if val == 0.0:
                continue
            if d + 1 == k:
                terms.append(val)
            else:
                used[v] = True
                extend(d + 1, val)
                used[v] = False

    extend(0, 1.0)
    return math.fsum(terms)


def cutnorm_pair_exact(f):
    n = f.shape[0]
    best = 0.0
    for mask in range(1 << n):
        u = np.array([(mask >> i) & 1 for i in range(n)], dtype=np.float64)
        g = u @ f
        best = max(best, g[g > 0].sum(), -g[g < 0].sum())
    return float(best)
