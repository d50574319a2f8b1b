"""Hot combinatorial loops, compiled when possible.

The Cython extension ``hyperrate._core`` is used when it imports; otherwise
the pure-Python implementation in ``hyperrate._purecore`` takes over. Set
``HYPERRATE_PURE=1`` to force the fallback. Both expose the same functions
with identical results.
"""
from __future__ import annotations

import math
import os

import numpy as np

from . import _purecore

if os.environ.get("HYPERRATE_PURE"):
    _impl = _purecore
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _purecore
        BACKEND = "python"


def traversal_plan(edges: np.ndarray, k: int):
    """Vertex order for backtracking and the edges closed at each depth.

    Returns ``(order, hdeg, ptr, slots)``: ``order[d]`` is the H-vertex placed
    at depth ``d``, ``hdeg[d]`` its degree, and edges closed at depth ``d``
    occupy ``slots[ptr[d]*r : ptr[d+1]*r]`` as depth indices of their vertices.
    """
    edges = np.asarray(edges, dtype=np.int64)
    m = edges.shape[0]
    r = edges.shape[1] if m else 0
    deg = np.zeros(k, dtype=np.int64)
    for e in edges:
        deg[e] += 1
    placed = []
    remaining = set(range(k))
    while remaining:
        placed_set = set(placed)

        def score(v):
            closes = sum(1 for e in edges if v in e and all(u in placed_set or u == v for u in e))
            touches = sum(1 for e in edges if v in e and any(u in placed_set for u in e))
            return (closes, touches, deg[v], -v)

        v = max(remaining, key=score)
        placed.append(v)
        remaining.remove(v)
    depth = {v: d for d, v in enumerate(placed)}
    closing = [[] for _ in range(k)]
    for e in edges:
        closing[max(depth[v] for v in e)].append([depth[v] for v in e])
    ptr = np.zeros(k + 1, dtype=np.int32)
    slots = []
    for d in range(k):
        ptr[d + 1] = ptr[d] + len(closing[d])
        for e in closing[d]:
            slots.extend(e)
    return (
        np.array(placed, dtype=np.int32),
        deg[placed].astype(np.int32),
        ptr,
        np.array(slots, dtype=np.int32).reshape(-1) if slots else np.zeros(0, dtype=np.int32),
    )


def _vertex_degrees(adj: np.ndarray, n: int, r: int) -> np.ndarray:
    cube = adj.reshape((n,) * r).astype(np.int64)
    # each edge containing v appears (r-1)! times among ordered tuples starting at v
    return cube.reshape(n, -1).sum(axis=1) // math.factorial(r - 1)


def injective_count(edges, k: int, adj: np.ndarray, n: int, r: int) -> int:
    """Injective maps V(H) -> [n] sending every edge onto a present r-set.

    ``adj`` is the flat ``n**r`` 0/1 indicator of the target hypergraph.
    """
    if k > n:
        return 0
    adj = np.ascontiguousarray(adj, dtype=np.uint8)
    order, hdeg, ptr, slots = traversal_plan(edges, k)
    gdeg = _vertex_degrees(adj, n, r).astype(np.int32)
    return int(_impl.injective_count(hdeg, ptr, slots, k, adj, gdeg, n, r))


def injective_count_batch(edges, k: int, graphs: np.ndarray, ranks: np.ndarray, n: int, r: int) -> np.ndarray:
    """:func:`injective_count` for many targets given as rows of subset indicators
    in colex order; ``ranks`` is the ordered-tuple to subset-rank table."""
    graphs = np.ascontiguousarray(graphs, dtype=np.uint8)
    if graphs.ndim != 2:
        raise ValueError("graphs must be a 2-d array")
    if k > n:
        return np.zeros(graphs.shape[0], dtype=np.int64)
    order, hdeg, ptr, slots = traversal_plan(edges, k)
    ranks = np.ascontiguousarray(ranks, dtype=np.int32)
    return np.asarray(_impl.injective_count_batch(hdeg, ptr, slots, k, graphs, ranks, n, r), dtype=np.int64)


def injective_weighted_sum(edges, k: int, weights: np.ndarray, n: int, r: int) -> float:
    """Sum over injective maps V(H) -> [n] of the product of edge weights."""
    if k > n:
        return 0.0
    weights = np.ascontiguousarray(weights, dtype=np.float64).reshape(-1)
    order, hdeg, ptr, slots = traversal_plan(edges, k)
    return float(_impl.injective_weighted_sum(ptr, slots, k, weights, n, r))


def cutnorm_pair_exact(f: np.ndarray) -> float:
    """Exact ``max over u, v in {0,1}^n of |u^T f v|`` for a square matrix."""
    f = np.ascontiguousarray(f, dtype=np.float64)
    return float(_impl.cutnorm_pair_exact(f))
