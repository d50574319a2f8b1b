"""Compiled versus pure-Python kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on identical inputs through both backends; results must
agree exactly before timings are reported.
"""
import argparse
import math
import time

import numpy as np

from hyperrate import _purecore, kernels
from hyperrate.hypercore import clique, rank_table, special3

try:
    from hyperrate import _core
except ImportError:
    _core = None


def _best_of(fn, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases(rng):
    K = clique(4, 3)
    n = 6
    table = rank_table(n, 3)
    graphs = (rng.random((256, math.comb(n, 3))) < 0.5).astype(np.uint8)
    yield "batch count K4(3), n=6, 256 graphs", "injective_count_batch", (K.edge_array, K.k, graphs, table, n, 3)

    S = special3()
    n = 9
    w = rng.random((n,) * 3)
    yield "weighted sum special3, n=9", "injective_weighted_sum", (S.edge_array, S.k, w.reshape(-1), n, 3)

    T = clique(3, 2)
    n = 40
    adj = (rng.random((n, n)) < 0.3).astype(np.uint8)
    adj = np.triu(adj, 1)
    adj = (adj | adj.T).reshape(-1)
    yield "triangle count, n=40", "injective_count", (T.edge_array, T.k, adj, n, 2)

    f = rng.standard_normal((14, 14))
    yield "pair cut norm, n=14", "cutnorm_pair_exact", (f,)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if _core is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}")
    for label, name, argv in cases(rng):
        wrapper = getattr(kernels, name)
        kernels._impl = _purecore
        t_py, a = _best_of(lambda: wrapper(*argv), args.repeat)
        kernels._impl = _core
        t_c, b = _best_of(lambda: wrapper(*argv), args.repeat)
        if not np.array_equal(np.asarray(a), np.asarray(b)) and not np.allclose(a, b, rtol=1e-12, atol=0):
            raise SystemExit(f"{label}: backends disagree ({a} vs {b})")
        print(f"{label:40s} {t_py:10.4f} {t_c:11.5f} {t_py / t_c:7.0f}x")


if __name__ == "__main__":
    main()
