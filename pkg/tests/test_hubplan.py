import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from hyperrate import hubplan as hp
from hyperrate import hypercore as hc
from hyperrate import labelings as lb
from hyperrate.errors import DegenerateWidth, DomainError, NoFeasiblePoint
from oracles import independent_sets

F = Fraction


def perms(*t):
    return {tuple(F(x) for x in p) for p in itertools.permutations(t)}


@pytest.fixture(scope="module")
def special():
    H = hc.special3()
    return H, lb.enumerate_stable_labelings(H)


@pytest.fixture(scope="module")
def counter():
    H = hc.counterexample()
    return H, lb.enumerate_stable_labelings(H)


# ---------------------------------------------------------------------------
# index sets, volume, gain

def test_tuples_clique():
    K = hc.clique(4, 3)
    S = hp.tuples_from_labelings(K, lb.enumerate_stable_labelings(K))
    assert S == perms(1, 0, 0) | perms(F(1, 3), F(1, 3), F(1, 3))


def test_tuples_special(special):
    H, L = special
    S = hp.tuples_from_labelings(H, L)
    assert S == perms(1, 0, 0) | perms(F(1, 2), F(1, 2), 0) | perms(F(1, 3), F(1, 3), F(1, 3))


def test_tuples_counterexample(counter):
    H, L = counter
    S = hp.tuples_from_labelings(H, L)
    assert perms(F(1, 4), F(1, 4), F(1, 2)) <= S
    assert perms(1, 0, 0) | perms(F(1, 2), F(1, 2), 0) <= S


def test_volume_special(special):
    H, L = special
    S = hp.tuples_from_labelings(H, L)
    c1, ch, ct = 0.3, 0.7, 1.9
    M = hp.MixedHubCollection(S, {1: c1, F(1, 2): ch, F(1, 3): ct})
    assert hp.volume(M) == pytest.approx(3 * c1 + 3 * ch**2 + ct**3, rel=1e-14)
    zero = hp.MixedHubCollection(S, {1: 0.0, F(1, 2): 0.0, F(1, 3): 0.0})
    assert hp.volume(zero) == 0.0


def test_volume_counterexample_certificate():
    d = 37.0
    S = perms(1, 0, 0) | perms(F(1, 2), F(1, 2), 0) | perms(F(1, 4), F(1, 4), F(1, 2))
    M = hp.MixedHubCollection(S, {1: 0.0, F(1, 2): d**0.1, F(1, 4): d**0.05})
    assert hp.volume(M) == pytest.approx(6 * d**0.2, rel=1e-13)


def test_gain_polynomial_special(special):
    H, L = special
    h, t = F(1, 2), F(1, 3)
    assert hp.gain_polynomial(H, L) == {
        (): 1, ((F(1), 1),): 6, ((F(1), 2),): 3, ((h, 3),): 4, ((h, 4),): 3, ((t, 6),): 1,
    }
    S = hp.tuples_from_labelings(H, L)
    c1, ch, ct = 0.4, 0.9, 1.3
    M = hp.MixedHubCollection(S, {1: c1, h: ch, t: ct})
    expected = 1 + 6 * c1 + 3 * c1**2 + 4 * ch**3 + 3 * ch**4 + ct**6
    assert hp.p_value(H, L, M) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("k,r", [(4, 3), (5, 3), (5, 4), (4, 2)])
def test_gain_clique(k, r):
    K = hc.clique(k, r)
    L = lb.enumerate_stable_labelings(K)
    S = hp.tuples_from_labelings(K, L)
    c1, cr = 0.7, 1.6
    M = hp.MixedHubCollection(S, {1: c1, F(1, r): cr})
    assert hp.p_value(K, L, M) == pytest.approx(1 + cr**k + k * c1, rel=1e-14)
    assert hp.p_value(K, L, hp.MixedHubCollection(S, {1: 0.0, F(1, r): 0.0})) == 1.0


def test_collection_validation():
    with pytest.raises(DomainError):
        hp.MixedHubCollection({(F(1), F(0), F(0))}, {1: 1.0})
    with pytest.raises(DomainError):
        hp.MixedHubCollection(perms(F(1, 2), F(1, 3), 0), {F(1, 2): 1.0, F(1, 3): 1.0})
    with pytest.raises(DomainError):
        hp.MixedHubCollection(perms(1, 0, 0), {0: 2.0, 1: 1.0})
    with pytest.raises(DomainError):
        hp.MixedHubCollection(perms(1, 0, 0), {1: -1.0})


def test_scaled_volume_is_linear(special):
    H, L = special
    S = hp.tuples_from_labelings(H, L)
    M = hp.MixedHubCollection(S, {1: 0.3, F(1, 2): 0.5, F(1, 3): 0.2})
    assert hp.volume(M.scaled(2.5)) == pytest.approx(2.5 * hp.volume(M), rel=1e-14)


# ---------------------------------------------------------------------------
# rate

def test_rho_examples(special, counter):
    assert hp.rho(hc.clique(4, 3), 1.0).value == pytest.approx(0.75, abs=1e-9)
    H, L = special
    assert hp.rho(H, 1.0, labelings=L).value == pytest.approx(math.sqrt(12) - 3, abs=1e-9)
    assert hp.rho(H, 1.0, labelings=L).value == pytest.approx(0.4641016, abs=1e-7)
    H, L = counter
    assert hp.rho(H, 1.0, labelings=L).value <= 6.0


def test_rho_certificate_is_feasible(special):
    H, L = special
    for delta in (0.3, 4.0, 15.0):
        res = hp.rho(H, delta, labelings=L)
        M = hp.collection_from_certificate(H, res.certificate, L)
        assert hp.p_value(H, L, M) >= (1 + delta) * (1 - 1e-9)
        assert hp.volume(M) == pytest.approx(res.value, rel=1e-9)


def test_rho_restricted(special):
    H, L = special
    for delta in (0.5, 9.0):
        full = hp.rho(H, delta, labelings=L).value
        restricted = hp.rho_restricted(H, delta, [1, F(1, 2), F(1, 3)], labelings=L).value
        assert restricted == pytest.approx(full, abs=1e-12)
    with pytest.raises(NoFeasiblePoint):
        hp.rho_restricted(H, 1.0, [], labelings=L)


def test_rho_only_zero_labeling():
    # any edge gives a single-vertex labeling, so only edgeless H qualifies
    H = hc.Hypergraph(2, 3, ())
    with pytest.raises(NoFeasiblePoint):
        hp.rho(H, 1.0)


def test_rho_monotone_in_delta(special):
    H, L = special
    values = [hp.rho(H, d, labelings=L).value for d in np.linspace(0.1, 20, 25)]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


def test_rho_never_beats_closed_form(special):
    H, L = special
    K = hc.clique(5, 3)
    LK = lb.enumerate_stable_labelings(K)
    for d in np.geomspace(0.01, 100, 15):
        d = float(d)
        assert hp.rho(H, d, labelings=L).value >= hp.closed_form_rho("special3", d) - 1e-6
        assert hp.rho(K, d, labelings=LK).value >= hp.closed_form_rho("clique", d, k=5, r=3) - 1e-6


def test_posynomials_increase(special):
    H, L = special
    S = hp.tuples_from_labelings(H, L)
    base = {1: 0.3, F(1, 2): 0.5, F(1, 3): 0.2}
    M = hp.MixedHubCollection(S, base)
    for t in base:
        bumped = dict(base)
        bumped[t] += 1e-3
        N = hp.MixedHubCollection(S, bumped)
        assert hp.volume(N) > hp.volume(M)
        assert hp.p_value(H, L, N) > hp.p_value(H, L, M)


# ---------------------------------------------------------------------------
# closed forms

def test_closed_form_examples():
    assert hp.closed_form_rho("clique", 1.0, k=4, r=3) == pytest.approx(0.75)
    assert hp.closed_form_rho("twograph", 1.0, graph=hc.clique(3, 2)) == pytest.approx(2 / 3, rel=1e-12)
    assert hp.closed_form_rho("special3", 3.0) == pytest.approx(math.sqrt(18) - 3, rel=1e-14)
    assert hp.closed_form_rho("special3", 3.0) == pytest.approx(1.2426, abs=1e-4)
    with pytest.raises(DomainError):
        hp.closed_form_rho("pentagon", 1.0)
    with pytest.raises(DomainError):
        hp.closed_form_rho("twograph", 1.0, graph=hc.path(2))


@pytest.mark.parametrize("name", ["k3", "c4", "p3", "k4r2"])
def test_independence_polynomial(name):
    H = hc.load_hypergraph(name)
    delta = hc.max_degree(H)
    top = [v for v in range(H.k) if H.degrees[v] == delta]
    inner = [e for e in H.edges if set(e) <= set(top)]
    sets = independent_sets(top, inner)
    coeffs = [sum(1 for s in sets if len(s) == j) for j in range(max(map(len, sets)) + 1)]
    assert hp.independence_polynomial(H) == coeffs


def test_independence_polynomial_values():
    assert hp.independence_polynomial(hc.clique(3, 2)) == [1, 3]
    assert hp.independence_polynomial(hc.cycle(4)) == [1, 4, 2]
    star = hc.Hypergraph(2, 5, ((0, 1), (0, 2), (3, 4)))
    # degree-2 vertices: only vertex 0
    assert hp.independence_polynomial(star) == [1, 1]


# ---------------------------------------------------------------------------
# planting

def test_plant_hub_prefix():
    H = hc.special3()
    L = lb.enumerate_stable_labelings(H)
    n, p, theta = 200, 0.2, 1.5
    M = hp.hub_collection(H, theta, L)
    B = hp.plant(H, M, n, p)
    width = int(math.floor(theta * p**2 * n + 0.5))
    assert B.sizes == (width, n - width)
    W = B.to_weighted()
    subs = hc.subsets_colex(n, 3)
    meets = subs.min(axis=1) < width
    assert (W.values[meets] == 1.0).all() and (W.values[~meets] == p).all()


def test_plant_clique_prefix():
    K = hc.clique(4, 3)
    L = lb.enumerate_stable_labelings(K)
    S = hp.tuples_from_labelings(K, L)
    n, p, d = 300, 0.3, 2.0
    c = d ** (1 / 4)
    M = hp.MixedHubCollection(S, {1: 0.0, F(1, 3): c})
    B = hp.plant(K, M, n, p)
    width = int(math.floor(c * p ** (3 / 3) * n + 0.5))
    assert B.sizes == (width, n - width)
    assert B.table == {(0, 0, 0): 1.0}


def test_plant_empty_collection():
    H = hc.special3()
    M = hp.MixedHubCollection(frozenset(), {})
    B = hp.plant(H, M, 10, 0.3)
    assert B.sizes == (10,) and B.table == {}


def test_plant_degenerate_width():
    H = hc.special3()
    L = lb.enumerate_stable_labelings(H)
    with pytest.raises(DegenerateWidth):
        hp.plant(H, hp.hub_collection(H, 0.1, L), 50, 0.1)
    with pytest.raises(DegenerateWidth):
        hp.plant(H, hp.hub_collection(H, 500.0, L), 50, 0.5)


def test_planted_density_and_entropy_converge(special):
    H, L = special
    delta = 9.0
    res = hp.rho_restricted(H, delta, [1], labelings=L)
    M = hp.collection_from_certificate(H, res.certificate, L)
    vol = hp.volume(M)
    gain = hp.p_value(H, L, M)
    gaps_d, gaps_e = [], []
    # the corrections are of order p, so start where they have peaked
    for n in (3200, 51200, 819200):
        p = n ** (-1 / 4)
        B = hp.plant(H, M, n, p)
        ratio = hc.density_blockwise(H, B) / (gain * p**4)
        ent = hc.relative_entropy(B) / (n**3 * p**2 * math.log(1 / p) / 6)
        gaps_d.append(abs(ratio - 1))
        gaps_e.append(abs(ent / vol - 1))
        assert ratio >= 0.8
    assert gaps_d[0] > gaps_d[1] > gaps_d[2]
    assert gaps_e[0] > gaps_e[1] > gaps_e[2]
