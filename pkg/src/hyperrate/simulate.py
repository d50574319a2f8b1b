"""Exact and Monte Carlo oracles for copy counts in the random r-graph.

Sample ``i`` under seed ``s`` draws one uniform per r-subset from a Philox
stream keyed by ``(s, i)``, indexed by colex rank; the subset is an edge when
its uniform is below ``p``. The same uniforms at two values of ``p`` give
nested graphs, which couples runs monotonically.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import DomainError, SizeLimitExceeded
from .hypercore import Hypergraph, automorphism_count, expected_count, rank_table, subsets_colex

COUNT_VERTEX_LIMIT = 8
EXACT_SUBSET_LIMIT = 22
_BATCH = 4096


@dataclass
class SampleReport:
    samples: int
    mean: float
    variance: float
    tail_hits: int
    tail_estimate: float
    std_error: float
    threshold: float
    expected: float
    seed: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def uniforms(n: int, r: int, seed: int, index: int = 0) -> np.ndarray:
    """The per-subset uniforms of sample ``index``."""
    gen = np.random.Generator(np.random.Philox(key=[seed, index]))
    return gen.random(math.comb(n, r))


def _indicator(n, r, p, seed, index):
    return (uniforms(n, r, seed, index) < p).astype(np.uint8)


def graph_from_indicator(n: int, r: int, present) -> Hypergraph:
    subs = subsets_colex(n, r)
    return Hypergraph(r, n, tuple(map(tuple, subs[np.flatnonzero(present)])))


def sample_gnp(n: int, r: int, p: float, seed: int, index: int = 0) -> Hypergraph:
    """One draw of the random r-graph on ``n`` vertices."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    return graph_from_indicator(n, r, _indicator(n, r, p, seed, index))


def _adjacency(G: Hypergraph) -> np.ndarray:
    present = np.zeros(math.comb(G.k, G.r), dtype=np.uint8)
    subs_rank = {tuple(s): i for i, s in enumerate(subsets_colex(G.k, G.r).tolist())}
    for e in G.edges:
        present[subs_rank[e]] = 1
    table = rank_table(G.k, G.r)
    adj = np.zeros(G.k**G.r, dtype=np.uint8)
    mask = table >= 0
    adj[mask] = present[table[mask]]
    return adj


def _check_pattern(H: Hypergraph):
    if H.k > COUNT_VERTEX_LIMIT:
        raise SizeLimitExceeded(f"copy counting limited to {COUNT_VERTEX_LIMIT} pattern vertices, H has {H.k}")


def count_copies(H: Hypergraph, G: Hypergraph) -> int:
    """Unlabeled copies of H in G (injective placements over ``|Aut(H)|``)."""
    if H.r != G.r:
        raise DomainError("uniformity mismatch")
    _check_pattern(H)
    placements = kernels.injective_count(H.edge_array, H.k, _adjacency(G), G.k, G.r)
    return placements // automorphism_count(H)


def _batch_counts(H: Hypergraph, n: int, graphs: np.ndarray, aut: int) -> np.ndarray:
    table = rank_table(n, H.r)
    return kernels.injective_count_batch(H.edge_array, H.k, graphs, table, n, H.r) // aut


def _threshold(H, n, p, delta):
    return (1.0 + delta) * expected_count(H, n, p)


def _hit(counts, threshold):
    # guard against the threshold landing a rounding error above an integer
    return counts >= threshold - 1e-9 * max(1.0, abs(threshold))


def sample_counts(H: Hypergraph, n: int, p: float, samples: int, seed: int, threads: int = 1) -> np.ndarray:
    """Copy counts of ``samples`` independent draws.

    Batches run on ``threads`` worker threads (the compiled kernel releases
    the GIL); the result does not depend on the thread count.
    """
    _check_pattern(H)
    aut = automorphism_count(H)

    def batch(start):
        stop = min(samples, start + _BATCH)
        graphs = np.stack([_indicator(n, H.r, p, seed, i) for i in range(start, stop)])
        return _batch_counts(H, n, graphs, aut)

    starts = range(0, samples, _BATCH)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(batch, starts))
    else:
        parts = [batch(s) for s in starts]
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def tail_estimate(H: Hypergraph, n: int, p: float, delta: float, samples: int, seed: int,
                  threads: int = 1) -> SampleReport:
    """Monte Carlo estimate of ``P(X >= (1 + delta) E X)``."""
    if samples < 1:
        raise DomainError("need at least one sample")
    counts = sample_counts(H, n, p, samples, seed, threads)
    thr = _threshold(H, n, p, delta)
    hits = int(_hit(counts, thr).sum())
    q = hits / samples
    return SampleReport(
        samples=samples,
        mean=float(counts.mean()),
        variance=float(counts.var(ddof=1)) if samples > 1 else 0.0,
        tail_hits=hits,
        tail_estimate=q,
        std_error=math.sqrt(q * (1.0 - q) / samples),
        threshold=thr,
        expected=float(expected_count(H, n, p)),
        seed=seed,
    )


def coupled_tail_curve(H: Hypergraph, n: int, ps, min_count: float, samples: int, seed: int) -> list:
    """``P(X >= min_count)`` at each ``p`` from one shared set of uniforms.

    The threshold is an absolute count, so the curve is nondecreasing in
    ``p`` sample by sample.
    """
    _check_pattern(H)
    aut = automorphism_count(H)
    hits = np.zeros(len(ps), dtype=np.int64)
    for start in range(0, samples, _BATCH):
        stop = min(samples, start + _BATCH)
        u = np.stack([uniforms(n, H.r, seed, i) for i in range(start, stop)])
        for j, p in enumerate(ps):
            counts = _batch_counts(H, n, (u < p).astype(np.uint8), aut)
            hits[j] += int(_hit(counts, min_count).sum())
    return (hits / samples).tolist()


def exact_count_distribution(H: Hypergraph, n: int) -> dict:
    """``{(edge_count, copies): number of graphs}`` over all r-graphs on ``n`` vertices."""
    _check_pattern(H)
    N = math.comb(n, H.r)
    if N > EXACT_SUBSET_LIMIT:
        raise SizeLimitExceeded(f"exact enumeration limited to {EXACT_SUBSET_LIMIT} subsets, got {N}")
    aut = automorphism_count(H)
    out = {}
    bits = np.arange(N, dtype=np.int64)
    for start in range(0, 1 << N, _BATCH * 16):
        codes = np.arange(start, min(1 << N, start + _BATCH * 16), dtype=np.int64)
        graphs = ((codes[:, None] >> bits) & 1).astype(np.uint8)
        counts = _batch_counts(H, n, graphs, aut)
        sizes = graphs.sum(axis=1)
        keys, freq = np.unique(np.stack([sizes, counts], axis=1), axis=0, return_counts=True)
        for (e, c), f in zip(keys.tolist(), freq.tolist()):
            out[(e, c)] = out.get((e, c), 0) + f
    return out


def exact_tail(H: Hypergraph, n: int, p, delta):
    """Exact ``P(X >= (1 + delta) E X)`` by enumerating every graph.

    Returns a :class:`~fractions.Fraction` when ``p`` and ``delta`` are
    rationals, else a float.
    """
    N = math.comb(n, H.r)
    dist = exact_count_distribution(H, n)
    exact = isinstance(p, (Fraction, int)) and isinstance(delta, (Fraction, int))
    if exact:
        thr = (1 + Fraction(delta)) * expected_count(H, n, Fraction(p))
        p = Fraction(p)
        total = Fraction(0)
        for (e, c), f in dist.items():
            if c >= thr:
                total += f * p**e * (1 - p) ** (N - e)
        return total
    thr = _threshold(H, n, float(p), float(delta))
    terms = [f * float(p) ** e * (1.0 - float(p)) ** (N - e) for (e, c), f in dist.items() if _hit(np.array(c), thr)]
    return math.fsum(terms)


def importance_tail_estimate(H: Hypergraph, n: int, p: float, delta: float, proposal, samples: int,
                             seed: int, threads: int = 1) -> SampleReport:
    """Tail estimate drawing from per-subset probabilities ``proposal``.

    Each draw is reweighted by its likelihood ratio against the random
    r-graph. The estimate is unbiased whenever every proposal value lies
    strictly inside (0, 1). ``mean`` and ``variance`` refer to the
    reweighted counts. Planted constructions blended toward ``p`` are
    natural proposals.
    """
    _check_pattern(H)
    q = np.asarray(proposal, dtype=np.float64)
    if q.shape != (math.comb(n, H.r),):
        raise DomainError("proposal must hold one probability per r-subset")
    if ((q <= 0) | (q >= 1)).any() or not 0.0 < p < 1.0:
        raise DomainError("need 0 < p < 1 and proposal values in (0, 1)")
    aut = automorphism_count(H)
    log_in = np.log(p / q)
    log_out = np.log((1.0 - p) / (1.0 - q))
    thr = _threshold(H, n, p, delta)

    def batch(start):
        stop = min(samples, start + _BATCH)
        graphs = np.stack([(uniforms(n, H.r, seed, i) < q).astype(np.uint8) for i in range(start, stop)])
        counts = _batch_counts(H, n, graphs, aut)
        logw = graphs @ log_in + (1 - graphs) @ log_out
        return counts, np.exp(logw)

    starts = range(0, samples, _BATCH)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(batch, starts))
    else:
        parts = [batch(s) for s in starts]
    counts = np.concatenate([c for c, _ in parts])
    weights = np.concatenate([w for _, w in parts])
    hits = _hit(counts, thr)
    contrib = weights * hits
    weighted = weights * counts
    return SampleReport(
        samples=samples,
        mean=float(weighted.mean()),
        variance=float(weighted.var(ddof=1)) if samples > 1 else 0.0,
        tail_hits=int(hits.sum()),
        tail_estimate=float(contrib.mean()),
        std_error=float(contrib.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0,
        threshold=thr,
        expected=float(expected_count(H, n, p)),
        seed=seed,
    )
