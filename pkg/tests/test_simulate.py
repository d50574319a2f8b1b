import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from hyperrate import hypercore as hc
from hyperrate import simulate as sm
from hyperrate.errors import DomainError, SizeLimitExceeded
from oracles import brute_copies, brute_exact_tail

F = Fraction


# ---------------------------------------------------------------------------
# sampling

def test_gnp_extremes():
    assert sm.sample_gnp(7, 3, 0.0, seed=1).num_edges == 0
    full = sm.sample_gnp(7, 3, 1.0, seed=1)
    assert full == hc.clique(7, 3)


def test_gnp_reproducible():
    a = sm.sample_gnp(9, 3, 0.4, seed=11, index=3)
    b = sm.sample_gnp(9, 3, 0.4, seed=11, index=3)
    c = sm.sample_gnp(9, 3, 0.4, seed=11, index=4)
    assert a == b and a != c


def test_gnp_mean_edge_count():
    n, r, p, m = 20, 3, 0.5, 10_000
    total = math.comb(n, r)
    counts = np.array([(sm.uniforms(n, r, 5, i) < p).sum() for i in range(m)])
    sigma = math.sqrt(total * p * (1 - p) / m)
    assert abs(counts.mean() - 570) <= 3 * sigma


# ---------------------------------------------------------------------------
# copies

def test_copies_of_itself():
    for H in (hc.clique(4, 3), hc.special3(), hc.cycle(4), hc.path(3)):
        assert sm.count_copies(H, H) == 1


def test_k4_in_k5():
    assert sm.count_copies(hc.clique(4, 3), hc.clique(5, 3)) == 5
    assert sm.count_copies(hc.clique(3, 2), hc.clique(6, 2)) == 20


def test_special_against_brute_force():
    rng = np.random.default_rng(4)
    H = hc.special3()
    for i in range(3):
        G = sm.sample_gnp(10, 3, float(rng.uniform(0.4, 0.8)), seed=2, index=i)
        assert sm.count_copies(H, G) == brute_copies(H.edges, H.k, G.edges, G.k)


@pytest.mark.parametrize("name", ["k3", "c4", "p3", "k4r3", "edge3"])
def test_small_patterns_against_brute_force(name):
    H = hc.load_hypergraph(name)
    for i in range(6):
        G = sm.sample_gnp(H.k + 2, H.r, 0.6, seed=8, index=i)
        assert sm.count_copies(H, G) == brute_copies(H.edges, H.k, G.edges, G.k)


def test_copies_isomorphism_invariant():
    rng = np.random.default_rng(0)
    H = hc.special3()
    G = sm.sample_gnp(9, 3, 0.6, seed=3)
    base = sm.count_copies(H, G)
    for _ in range(5):
        perm = tuple(int(v) for v in rng.permutation(9))
        assert sm.count_copies(H, G.relabel(perm)) == base


def test_copies_size_limits():
    with pytest.raises(SizeLimitExceeded):
        sm.count_copies(hc.clique(9, 2), hc.clique(10, 2))
    with pytest.raises(SizeLimitExceeded):
        sm.count_copies(hc.counterexample(), hc.clique(20, 3))


# ---------------------------------------------------------------------------
# tails

def test_tail_trivial_thresholds():
    K = hc.clique(4, 3)
    assert sm.tail_estimate(K, 6, 0.5, -1.0, 200, seed=0).tail_estimate == 1.0
    assert sm.tail_estimate(K, 6, 0.5, 1000.0, 200, seed=0).tail_estimate == 0.0


def test_tail_report_fields():
    rep = sm.tail_estimate(hc.clique(4, 3), 6, 0.5, 1.0, 500, seed=2)
    assert 0.0 <= rep.tail_estimate <= 1.0 and rep.mean >= 0
    assert rep.expected == pytest.approx(15 / 16)
    assert rep.threshold == pytest.approx(2 * 15 / 16)
    assert rep.tail_hits == round(rep.tail_estimate * rep.samples)
    assert set(rep.to_json()) >= {"samples", "mean", "variance", "tail_hits", "tail_estimate", "std_error", "seed"}


def test_tail_needs_samples():
    with pytest.raises(DomainError):
        sm.tail_estimate(hc.clique(4, 3), 6, 0.5, 1.0, 0, seed=0)


def test_exact_tail_delta_zero():
    K = hc.clique(4, 3)
    exact = sm.exact_tail(K, 5, F(1, 2), 0)
    assert exact == brute_exact_tail(K.edges, K.k, 5, 3, F(1, 2), F(0))
    # X >= 5/16 means at least one K4. Choosing j of the five 4-sets (the
    # complements of j vertices), a triple escapes them all only when it
    # contains those j vertices, so they cover 10 - C(5-j, 3-j) triples.
    def covered(j):
        return 10 - (math.comb(5 - j, 3 - j) if j <= 3 else 0)
    union = sum((-1) ** (j + 1) * math.comb(5, j) * F(1, 2) ** covered(j) for j in range(1, 6))
    assert exact == union
    assert exact == F(1, 4)


def test_exact_tail_p_one():
    # at p = 1 every graph is complete, so any threshold up to 5 copies holds
    assert sm.exact_tail(hc.clique(4, 3), 5, F(1), 0) == 1
    assert sm.exact_tail(hc.clique(4, 3), 5, F(1), F(-1, 2)) == 1
    assert sm.exact_tail(hc.clique(4, 3), 5, F(1, 2), 100) == 0


def test_exact_tail_float_matches_fraction():
    K = hc.clique(4, 3)
    assert sm.exact_tail(K, 5, 0.3, 1.0) == pytest.approx(float(sm.exact_tail(K, 5, F(3, 10), 1)), rel=1e-12)


def test_exact_tail_size_limit():
    with pytest.raises(SizeLimitExceeded):
        sm.exact_tail(hc.clique(4, 3), 7, F(1, 2), 0)


def test_exact_distribution_total():
    dist = sm.exact_count_distribution(hc.clique(3, 2), 5)
    assert sum(dist.values()) == 2**10
    # the complete graph holds C(5,3) triangles
    assert dist[(10, 10)] == 1


@pytest.mark.parametrize("H,p,delta", [(hc.clique(4, 3), 0.5, 0.0), (hc.cycle(4), 0.6, 0.5),
                                       (hc.single_edge(3), 0.3, 0.5)])
def test_monte_carlo_matches_exact(H, p, delta):
    exact = sm.exact_tail(H, 5, p, delta)
    rep = sm.tail_estimate(H, 5, p, delta, 20_000, seed=9)
    se = math.sqrt(exact * (1 - exact) / rep.samples)
    assert abs(rep.tail_estimate - exact) <= 3 * se + 1e-12


@pytest.mark.parametrize("H,n,p", [(hc.clique(4, 3), 6, 0.5), (hc.clique(3, 2), 7, 0.3), (hc.path(3), 6, 0.4)])
def test_mean_count_converges(H, n, p):
    counts = sm.sample_counts(H, n, p, 20_000, seed=1)
    sigma = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - float(hc.expected_count(H, n, p))) <= 3 * sigma


def test_coupled_curve_monotone():
    ps = [0.2, 0.35, 0.5, 0.65, 0.8]
    curve = sm.coupled_tail_curve(hc.clique(4, 3), 6, ps, min_count=2, samples=3000, seed=4)
    assert all(b >= a for a, b in zip(curve, curve[1:]))
    assert curve[0] < curve[-1]


def test_threads_do_not_change_results():
    K = hc.clique(4, 3)
    one = sm.sample_counts(K, 6, 0.5, 9000, seed=3, threads=1)
    four = sm.sample_counts(K, 6, 0.5, 9000, seed=3, threads=4)
    assert np.array_equal(one, four)
    a = sm.tail_estimate(K, 6, 0.5, 1.0, 9000, seed=3, threads=1)
    b = sm.tail_estimate(K, 6, 0.5, 1.0, 9000, seed=3, threads=3)
    assert a == b


# ---------------------------------------------------------------------------
# importance sampling

def test_importance_estimate_unbiased():
    K = hc.clique(4, 3)
    n, p, delta = 5, 0.3, 1.0
    exact = sm.exact_tail(K, n, p, delta)
    q = np.full(math.comb(n, 3), 0.55)
    rep = sm.importance_tail_estimate(K, n, p, delta, q, 20_000, seed=6)
    assert abs(rep.tail_estimate - exact) <= 3 * rep.std_error


def test_importance_at_p_matches_plain():
    K = hc.clique(4, 3)
    q = np.full(math.comb(6, 3), 0.5)
    rep = sm.importance_tail_estimate(K, 6, 0.5, 1.0, q, 4000, seed=2)
    plain = sm.tail_estimate(K, 6, 0.5, 1.0, 4000, seed=2)
    assert rep.tail_estimate == pytest.approx(plain.tail_estimate, abs=1e-12)


def test_importance_proposal_domain():
    K = hc.clique(4, 3)
    with pytest.raises(DomainError):
        sm.importance_tail_estimate(K, 5, 0.3, 1.0, np.ones(10), 100, seed=0)
    with pytest.raises(DomainError):
        sm.importance_tail_estimate(K, 5, 0.3, 1.0, np.full(9, 0.5), 100, seed=0)
