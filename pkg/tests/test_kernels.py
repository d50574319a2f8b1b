import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from hyperrate import _purecore, kernels
from hyperrate import hypercore as hc
from hyperrate import simulate as sm

compiled = pytest.importorskip("hyperrate._core")


@pytest.fixture
def use(monkeypatch):
    def switch(impl):
        monkeypatch.setattr(kernels, "_impl", impl)
    return switch


def random_adj(n, r, p, seed):
    G = sm.sample_gnp(n, r, p, seed)
    return sm._adjacency(G).reshape(-1)


def test_compiled_backend_active():
    if not os.environ.get("HYPERRATE_PURE"):
        assert kernels.BACKEND == "compiled"


@pytest.mark.parametrize("name,n", [("k3", 8), ("c4", 7), ("k4r3", 7), ("special3", 8), ("p3", 6)])
def test_count_parity(use, name, n):
    H = hc.load_hypergraph(name)
    results = []
    for impl in (compiled, _purecore):
        use(impl)
        results.append([kernels.injective_count(H.edge_array, H.k, random_adj(n, H.r, 0.6, s), n, H.r)
                        for s in range(5)])
    assert results[0] == results[1]


def test_batch_parity(use):
    H = hc.clique(4, 3)
    n = 6
    graphs = np.stack([(sm.uniforms(n, 3, 1, i) < 0.5).astype(np.uint8) for i in range(40)])
    ranks = hc.rank_table(n, 3)
    out = []
    for impl in (compiled, _purecore):
        use(impl)
        out.append(kernels.injective_count_batch(H.edge_array, H.k, graphs, ranks, n, 3))
    assert np.array_equal(out[0], out[1])


@pytest.mark.parametrize("name,n", [("k3", 7), ("special3", 6), ("k4r3", 6)])
def test_weighted_sum_parity(use, name, n):
    H = hc.load_hypergraph(name)
    W = hc.WeightedHypergraph(n, H.r, np.random.default_rng(0).random(math.comb(n, H.r)))
    out = []
    for impl in (compiled, _purecore):
        use(impl)
        out.append(kernels.injective_weighted_sum(H.edge_array, H.k, W.dense, n, H.r))
    assert out[0] == pytest.approx(out[1], rel=1e-12)


def test_cutnorm_parity(use):
    rng = np.random.default_rng(3)
    f = rng.standard_normal((9, 9))
    f = f + f.T
    out = []
    for impl in (compiled, _purecore):
        use(impl)
        out.append(kernels.cutnorm_pair_exact(f))
    assert out[0] == pytest.approx(out[1], rel=1e-12)


def test_target_smaller_than_pattern():
    H = hc.clique(4, 3)
    assert kernels.injective_count(H.edge_array, 4, np.ones(27, dtype=np.uint8), 3, 3) == 0
    assert kernels.injective_weighted_sum(H.edge_array, 4, np.ones(27), 3, 3) == 0.0


def test_pure_backend_subprocess():
    code = (
        "import json\n"
        "from hyperrate import kernels, simulate, hypercore as hc\n"
        "G = simulate.sample_gnp(8, 3, 0.6, 4)\n"
        "print(json.dumps([kernels.BACKEND, simulate.count_copies(hc.special3(), G)]))\n"
    )
    env = dict(os.environ, HYPERRATE_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, count = json.loads(out.stdout)
    assert backend == "python"
    assert count == sm.count_copies(hc.special3(), sm.sample_gnp(8, 3, 0.6, 4))
