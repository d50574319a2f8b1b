import math

import numpy as np
import pytest

from hyperrate import hypercore as hc
from hyperrate import varsolve as vs
from hyperrate.errors import DomainError, NoFeasiblePoint


def random_weights(n, r, seed, lo=0.0):
    rng = np.random.default_rng(seed)
    return hc.WeightedHypergraph(n, r, lo + (1 - lo) * rng.random(math.comb(n, r)))


def planted_oracle(H, n, p, delta):
    """Least I_p over prefix hub and clique plantings that reach the threshold."""
    tau = (1 + delta) * p**H.num_edges
    subs = hc.subsets_colex(n, H.r)
    best = math.inf
    for mask_of in (lambda s: subs.min(axis=1) < s, lambda s: subs.max(axis=1) < s):
        for s in range(1, n + 1):
            W = hc.WeightedHypergraph(n, H.r, np.where(mask_of(s), 1.0, p), p)
            if hc.density(H, W) >= tau:
                best = min(best, hc.relative_entropy(W))
                break
    return best


# ---------------------------------------------------------------------------
# gradient

@pytest.mark.parametrize("r,n", [(2, 5), (3, 6)])
def test_gradient_single_edge_constant(r, n):
    H = hc.single_edge(r)
    g = vs.density_gradient(H, random_weights(n, r, 1))
    assert np.allclose(g, math.factorial(r) / n**r, rtol=1e-13, atol=0)


def test_gradient_zero_weights():
    for H in (hc.clique(3, 2), hc.special3()):
        g = vs.density_gradient(H, hc.WeightedHypergraph.constant(6, H.r, 0.0))
        assert not g.any()


def test_gradient_matches_brute_force_derivative():
    # derivative of the triangle density in one coordinate, by hand
    n = 5
    W = random_weights(n, 2, 3)
    dense = W.dense
    g = vs.density_gradient(hc.clique(3, 2), W)
    for idx, (a, b) in enumerate(hc.subsets_colex(n, 2).tolist()):
        # each of the 3 edges can land on {a, b} in 2 orientations
        expected = 6 * sum(dense[a, c] * dense[b, c] for c in range(n) if c not in (a, b)) / n**3
        assert g[idx] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("H,n", [(hc.clique(3, 2), 6), (hc.clique(4, 3), 8), (hc.special3(), 6)])
def test_finite_difference_agreement(H, n):
    assert vs.finite_difference_check(H, random_weights(n, H.r, 5), h=1e-6) < 1e-5


def test_finite_difference_linear_exact():
    # h=1e-4 keeps cancellation error below the bound for a linear functional
    assert vs.finite_difference_check(hc.single_edge(3), random_weights(6, 3, 2), h=1e-4) < 1e-9


def test_finite_difference_step_domain():
    W = random_weights(5, 2, 0)
    for h in (1e-9, 1e-2):
        with pytest.raises(DomainError):
            vs.finite_difference_check(hc.clique(3, 2), W, h=h)


# ---------------------------------------------------------------------------
# instances

@pytest.mark.parametrize("kw", [dict(n=2, p=0.3, delta=1.0), dict(n=5, p=0.0, delta=1.0),
                                dict(n=5, p=1.0, delta=1.0), dict(n=5, p=0.3, delta=0.0)])
def test_instance_validation(kw):
    with pytest.raises(DomainError):
        vs.VariationalInstance(hc.clique(3, 2), **kw)


def test_infeasible_threshold_reports_all_ones():
    # K4 in K4^(3) weights on n=4: density with all ones is 4!/4^4
    inst = vs.VariationalInstance(hc.clique(4, 3), n=4, p=0.9, delta=1.0)
    with pytest.raises(NoFeasiblePoint) as err:
        vs.solve_phi(inst)
    best = err.value.best
    assert best is not None and best.start == "all_ones" and not best.feasible
    assert best.constraint_value == pytest.approx(24 / 256)


# ---------------------------------------------------------------------------
# solver

@pytest.fixture(scope="module")
def triangle_solution():
    inst = vs.VariationalInstance(hc.clique(3, 2), n=30, p=0.3, delta=1.0)
    return inst, vs.solve_phi(inst)


def test_triangle_beats_planted(triangle_solution):
    inst, sol = triangle_solution
    oracle = planted_oracle(inst.H, inst.n, inst.p, inst.delta)
    assert sol.feasible
    assert sol.objective <= 1.1 * oracle
    assert sol.objective <= sol.warm_start_objective * (1 + 1e-12)
    assert sol.constraint_value >= inst.threshold * (1 - vs.FEASIBILITY_TOL)


def test_triangle_weights_respect_floor(triangle_solution):
    inst, sol = triangle_solution
    assert sol.W.values.min() >= inst.p - 1e-15 and sol.W.values.max() <= 1.0
    assert sol.objective == pytest.approx(hc.relative_entropy(sol.W), rel=1e-12)
    assert sol.constraint_value == pytest.approx(hc.density(inst.H, sol.W), rel=1e-12)


def test_triangle_normalized_rate(triangle_solution):
    inst, sol = triangle_solution
    assert sol.normalized_rate == pytest.approx(sol.objective / inst.scale)
    assert 1 / 50 <= sol.normalized_rate <= 50


def test_violation_trace_nonincreasing(triangle_solution):
    _, sol = triangle_solution
    viol = sol.trace.get("violations", [])
    assert viol, "expected a logged augmented Lagrangian trace"
    assert all(b <= a + 1e-10 for a, b in zip(viol, viol[1:]))


def uniform_correction(H, n, p, delta):
    """I_p of the constant weight whose density just reaches the threshold."""
    frac = hc.density(H, hc.WeightedHypergraph.constant(n, H.r, 1.0))
    q = p * ((1 + delta) / frac) ** (1 / H.num_edges)
    return math.comb(n, H.r) * hc.entropy_scalar(q, p), q


@pytest.fixture(scope="module")
def special_solution():
    H = hc.special3()
    inst = vs.VariationalInstance(H, n=14, p=0.35, delta=1.0)
    return inst, vs.solve_phi(inst)


def test_special_below_planted(special_solution):
    inst, sol = special_solution
    upper = planted_oracle(inst.H, inst.n, inst.p, inst.delta)
    assert sol.objective <= upper * (1 + 1e-12)
    assert 1 / 50 <= sol.normalized_rate <= 50


def test_special_matches_uniform_correction(special_solution):
    inst, sol = special_solution
    value, q = uniform_correction(inst.H, inst.n, inst.p, inst.delta)
    assert sol.objective <= value * (1 + 1e-9)
    assert np.abs(sol.W.values - q).max() < 1e-6


def test_special_planted_bracket(special_solution):
    inst, sol = special_solution
    upper = planted_oracle(inst.H, inst.n, inst.p, inst.delta)
    assert 0.5 * upper <= sol.objective <= upper * (1 + 1e-12)


@pytest.mark.parametrize("n", [8, 16])
def test_small_delta_limit(n):
    # at finite n the repeated-vertex tuples cost density, so the limit is
    # the uniform correction rather than zero; its rate vanishes as n grows
    H = hc.clique(3, 2)
    sol = vs.solve_phi(vs.VariationalInstance(H, n=n, p=0.4, delta=1e-9, restarts=0))
    value, q = uniform_correction(H, n, 0.4, 1e-9)
    assert sol.feasible
    assert sol.objective == pytest.approx(value, rel=1e-6)
    assert np.ptp(sol.W.values) < 1e-6


def test_small_delta_rate_vanishes():
    H = hc.clique(3, 2)
    rates = [vs.solve_phi(vs.VariationalInstance(H, n=n, p=0.4, delta=1e-9, restarts=0)).normalized_rate
             for n in (8, 16, 32)]
    assert rates[0] > rates[1] > rates[2] and rates[2] < 2e-3


def test_relabel_invariance():
    H = hc.path(3)
    perm = (2, 0, 1)
    a = vs.solve_phi(vs.VariationalInstance(H, n=7, p=0.3, delta=1.0, restarts=1))
    b = vs.solve_phi(vs.VariationalInstance(H.relabel(perm), n=7, p=0.3, delta=1.0, restarts=1))
    assert a.objective == pytest.approx(b.objective, rel=1e-6)


def test_planted_starts_feasible():
    H = hc.special3()
    inst = vs.VariationalInstance(H, n=12, p=0.35, delta=1.0)
    starts = vs.planted_starts(inst)
    assert {"hub", "clique"} <= set(starts)
    for width, vals in starts.values():
        W = hc.WeightedHypergraph(12, 3, vals, 0.35)
        assert hc.density(H, W) >= inst.threshold
        assert 1 <= width <= 12


def test_solution_json():
    inst = vs.VariationalInstance(hc.clique(3, 2), n=6, p=0.3, delta=0.5, restarts=0)
    data = vs.solve_phi(inst).to_json()
    assert set(data) >= {"objective", "constraint_value", "feasible", "normalized_rate", "start"}
