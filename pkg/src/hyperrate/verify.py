"""Cross-check driver: every module against its oracles on bundled instances.

Each check records what was expected, what was observed, the tolerance and
a pass flag. Reports are deterministic for a given seed; wall times are kept
separately so they never leak into the byte-comparable report.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import analysis, hubplan, labelings, simulate, varsolve
from .hypercore import (
    COUNTEREXAMPLE_LABELS,
    Hypergraph,
    density_blockwise,
    load_hypergraph,
    max_degree,
    relative_entropy,
)

DELTA_GRID = tuple(float(d) for d in np.linspace(0.05, 20.0, 50))


@dataclass
class Check:
    name: str
    expected: object
    observed: object
    tolerance: object
    passed: bool

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "expected": self.expected,
            "observed": self.observed,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
        }


@dataclass
class VerifyReport:
    mode: str
    seed: int
    checks: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self, timings: bool = False) -> dict:
        out = {
            "mode": self.mode,
            "seed": self.seed,
            "pass": self.passed,
            "checks": [c.to_json() for c in self.checks],
        }
        if timings:
            out["timings"] = self.timings
        return out


def _frac(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


class _Graphs:
    """Bundled instances, optionally from another directory."""

    def __init__(self, directory=None):
        self.directory = None if directory is None else Path(directory)

    def __call__(self, name: str) -> Hypergraph:
        if self.directory is None:
            return load_hypergraph(name)
        return load_hypergraph(self.directory / f"{name}.json")


# ---------------------------------------------------------------------------
# individual check groups

def check_clique_labelings(graphs, **_):
    out = []
    for k, r in ((4, 3), (5, 3), (5, 4), (4, 2)):
        H = graphs(f"k{k}r{r}")
        found = set(labelings.enumerate_stable_labelings(H))
        expected = {labelings.Labeling((0,) * k), labelings.Labeling((Fraction(1, r),) * k)}
        expected |= {labelings.Labeling(tuple(int(i == v) for i in range(k))) for v in range(k)}
        out.append(Check(f"labelings_clique_k{k}_r{r}", len(expected), len(found), "exact", found == expected))
    return out


SPECIAL_POLY = {
    (): 1,
    ((Fraction(1), 1),): 6,
    ((Fraction(1), 2),): 3,
    ((Fraction(1, 2), 3),): 4,
    ((Fraction(1, 2), 4),): 3,
    ((Fraction(1, 3), 6),): 1,
}


def _poly_str(poly) -> str:
    terms = []
    for mono, coeff in sorted(poly.items()):
        terms.append(str(coeff) + "".join(f"*c[{_frac(t)}]^{e}" for t, e in mono))
    return " + ".join(terms)


def check_special_labelings(graphs, **_):
    H = graphs("special3")
    L = labelings.enumerate_stable_labelings(H)
    groups = sorted(count for _, count in labelings.multiplicity_groups(L))
    poly = hubplan.gain_polynomial(H, L)
    return [
        Check("labelings_special3_count", 18, len(L), "exact", len(L) == 18),
        Check("labelings_special3_multiplicities", [1, 1, 3, 3, 4, 6], groups, "exact", groups == [1, 1, 3, 3, 4, 6]),
        Check("gain_polynomial_special3", _poly_str(SPECIAL_POLY), _poly_str(poly), "exact", poly == SPECIAL_POLY),
    ]


def check_counterexample(graphs, seed=0, **_):
    H = graphs("counterexample")
    L = labelings.enumerate_stable_labelings(H)
    full = labelings.unique_full_labeling_check(H)
    quarter = {"D", "E", "F", "D'", "E'", "F'"}
    expected = tuple(
        Fraction(0) if name.startswith("x") else Fraction(1, 4) if name in quarter else Fraction(1, 2)
        for name in COUNTEREXAMPLE_LABELS
    )
    observed = None if full is None else [_frac(x) for x in full.values]
    out = [Check("counterexample_full_labeling", [_frac(x) for x in expected], observed, "exact",
                 full is not None and full.values == expected)]
    for delta in (1.0, 10.0, 100.0):
        value = hubplan.rho(H, delta, labelings=L, seed=seed).value
        bound = 6.0 * delta**0.2
        out.append(Check(f"counterexample_rho_upper_delta_{delta:g}", f"<= {bound!r}", value, 1e-6,
                         value <= bound + 1e-6))
    delta = 1e6
    full_rate = hubplan.rho(H, delta, labelings=L, seed=seed).value
    restricted = hubplan.rho_restricted(H, delta, [1, Fraction(1, 2), Fraction(1, 3)], labelings=L, seed=seed).value
    out.append(Check("counterexample_restricted_exceeds_rho_delta_1e6", f"> {full_rate!r}", restricted, "strict",
                     restricted > full_rate))
    return out


def check_closed_forms(graphs, seed=0, **_):
    cases = [
        ("k4r3", dict(kind="clique", k=4, r=3)),
        ("k5r3", dict(kind="clique", k=5, r=3)),
        ("special3", dict(kind="special3")),
        ("k3", None),
        ("c4", None),
    ]
    out = []
    for name, spec in cases:
        H = graphs(name)
        L = labelings.enumerate_stable_labelings(H)
        worst = 0.0
        for delta in DELTA_GRID:
            if spec is None:
                truth = hubplan.closed_form_rho("twograph", delta, graph=H)
            else:
                truth = hubplan.closed_form_rho(delta=delta, **spec)
            worst = max(worst, abs(hubplan.rho(H, delta, labelings=L, seed=seed).value - truth))
        out.append(Check(f"rho_closed_form_{name}", 0.0, worst, 1e-6, worst <= 1e-6))
    return out


def check_programs(**_):
    out = []
    for k, r in ((4, 3), (5, 3), (6, 4), (4, 2)):
        worst = max(abs(analysis.solve_clique_program(k, r, d).objective - min(d ** (r / k), r * d / k))
                    for d in DELTA_GRID)
        out.append(Check(f"clique_program_k{k}_r{r}", 0.0, worst, 1e-9, worst <= 1e-9))
    worst = max(abs(analysis.solve_special_program(d).objective - min(math.sqrt(9 + 3 * d) - 3, math.sqrt(d)))
                for d in DELTA_GRID)
    out.append(Check("special_program", 0.0, worst, 1e-9, worst <= 1e-9))

    def gap(d):
        v = analysis.solve_special_program(d, starts=0).vertex_values
        return v["x1"] - v["x3"]

    crossing = brentq(gap, 1.0, 20.0, xtol=1e-12)
    out.append(Check("special_program_crossover", 9.0, crossing, 1e-6, abs(crossing - 9.0) <= 1e-6))
    return out


def check_planting(graphs, seed=0, **_):
    H = graphs("special3")
    n, p, delta = 300, 0.1, 9.0
    L = labelings.enumerate_stable_labelings(H)
    res = hubplan.rho_restricted(H, delta, [1], labelings=L, seed=seed)
    M = hubplan.collection_from_certificate(H, res.certificate, L)
    B = hubplan.plant(H, M, n, p)
    gain = hubplan.p_value(H, L, M)
    ratio = density_blockwise(H, B) / (gain * p ** H.num_edges)
    vol = hubplan.volume(M)
    entropy = relative_entropy(B) / (n**3 * p ** max_degree(H) * math.log(1 / p) / 6.0)
    return [
        Check("planting_density_ratio", ">= 0.85", ratio, 0.85, ratio >= 0.85),
        Check("planting_entropy_vs_volume", vol, entropy, 0.15, abs(entropy - vol) <= 0.15 * vol),
    ]


def check_varsolve(graphs, seed=0, **_):
    out = []
    for name, n, p in (("k3", 30, 0.3), ("special3", 14, 0.35)):
        H = graphs(name)
        inst = varsolve.VariationalInstance(H, n, p, 1.0, seed=seed)
        sol = varsolve.solve_phi(inst)
        fd = varsolve.finite_difference_check(H, sol.W, seed=seed)
        out += [
            Check(f"varsolve_{name}_feasible", True, sol.feasible, varsolve.FEASIBILITY_TOL, sol.feasible),
            Check(f"varsolve_{name}_beats_warm_start", f"<= {sol.warm_start_objective!r}", sol.objective, 0.0,
                  sol.objective <= sol.warm_start_objective),
            Check(f"varsolve_{name}_gradient_fd", 0.0, fd, 1e-5, fd < 1e-5),
            Check(f"varsolve_{name}_normalized_rate", "[0.02, 50]", sol.normalized_rate, "range",
                  1 / 50 <= sol.normalized_rate <= 50),
        ]
    return out


def brute_force_copies(H: Hypergraph, G: Hypergraph) -> int:
    """Copies of H in G by trying every injective vertex map."""
    edges = {tuple(sorted(e)) for e in G.edges}
    maps = sum(
        1 for phi in itertools.permutations(range(G.k), H.k)
        if all(tuple(sorted(phi[v] for v in e)) in edges for e in H.edges)
    )
    autos = sum(
        1 for phi in itertools.permutations(range(H.k))
        if {tuple(sorted(phi[v] for v in e)) for e in H.edges} == {tuple(sorted(e)) for e in H.edges}
    )
    return maps // autos


def check_simulation(graphs, seed=0, mode="quick", threads=1, **_):
    rng = np.random.default_rng(seed)
    patterns = [graphs(name) for name in ("k3", "c4", "p3", "k4r3", "edge3", "special3")]
    mismatches = 0
    for i in range(50):
        H = patterns[i % len(patterns)]
        n = int(rng.integers(H.k, H.k + 3))
        G = simulate.sample_gnp(n, H.r, float(rng.uniform(0.3, 0.9)), seed, i)
        mismatches += simulate.count_copies(H, G) != brute_force_copies(H, G)
    out = [Check("count_copies_brute_force", 0, mismatches, "exact", mismatches == 0)]
    K = graphs("k4r3")
    if mode == "full":
        samples = 100_000
        counts = simulate.sample_counts(K, 6, 0.5, samples, seed, threads)
        z = (counts.mean() - 15 / 16) / (counts.std(ddof=1) / math.sqrt(samples))
        out.append(Check("mean_count_k4r3_n6", 15 / 16, float(counts.mean()), "3 sigma", abs(z) <= 3))
    exact = simulate.exact_tail(K, 5, Fraction(1, 2), 1)
    rep = simulate.tail_estimate(K, 5, 0.5, 1.0, 20_000, seed, threads)
    se = math.sqrt(float(exact) * (1 - float(exact)) / rep.samples)
    out.append(Check("tail_vs_exact_k4r3_n5", _frac(exact), rep.tail_estimate, "3 binomial se",
                     abs(rep.tail_estimate - float(exact)) <= 3 * se))
    return out


def check_holder(graphs, seed=0, **_):
    rng = np.random.default_rng(seed)
    # patterns small enough for the n**k evaluation
    pool = [graphs(name) for name in ("k3", "c4", "p3", "edge2", "edge3", "k4r2", "k4r3", "k5r3", "special3")]
    failures = 0
    for _ in range(200):
        H = pool[int(rng.integers(len(pool)))]
        n = int(rng.integers(2, 6))
        U = rng.random((n,) * H.r) ** rng.uniform(0.5, 4.0)
        U = analysis.SymmetricTensor.from_dense(U).dense
        failures += not analysis.holder_check(H, U).holds
    out = [Check("holder_random_tensors", 0, failures, "1e-12 relative", failures == 0)]
    worst = 0.0
    for H in pool:
        res = analysis.holder_check(H, np.full((4,) * H.r, 0.37))
        worst = max(worst, abs(res.lhs / res.rhs - 1.0))
    out.append(Check("holder_constant_equality", 0.0, worst, 1e-12, worst <= 1e-12))
    return out


def check_entropy(**_):
    rep = analysis.entropy_lemma_checks([1e-3, 1e-4, 1e-5, 1e-6])
    first = rep["first_failure"]
    observed = "all pass" if first is None else f"{first.name} p={first.p!r} x={first.x!r}: {first.observed!r}"
    return [Check("entropy_estimates", "all pass", observed, "[0.9, 1.1] ratios", rep["passed"])]


def check_gaussian_width(graphs, seed=0, **_):
    tri = graphs("k3")
    ratios = []
    for n in (4, 6, 8, 10):
        rep = analysis.disc_gw_estimate(tri, n, gaussian_samples=200, seed=seed)
        ratios.append(rep.bound_estimate / (n ** (tri.k - 2) * n**1.5))
    growth = max(ratios) / ratios[0]
    out = [Check("gw_triangle_scaling", "<= 1.3", growth, 0.3, growth <= 1.3)]
    edge, n = graphs("edge2"), 5
    rep = analysis.disc_gw_estimate(edge, n, gaussian_samples=4000, seed=seed)
    const = math.factorial(edge.r) / n**edge.r
    truth = const * math.sqrt(math.comb(n, edge.r)) / math.sqrt(2 * math.pi)
    out.append(Check("gw_single_edge", truth, rep.direct_estimate, "3 sigma",
                     abs(rep.direct_estimate - truth) <= 3 * rep.direct_std_error))
    return out


GROUPS = [
    ("clique_labelings", check_clique_labelings, "both"),
    ("special_labelings", check_special_labelings, "both"),
    ("counterexample", check_counterexample, "both"),
    ("closed_forms", check_closed_forms, "both"),
    ("programs", check_programs, "both"),
    ("planting", check_planting, "full"),
    ("varsolve", check_varsolve, "both"),
    ("simulation", check_simulation, "both"),
    ("holder", check_holder, "both"),
    ("entropy", check_entropy, "both"),
    ("gaussian_width", check_gaussian_width, "both"),
]


def verify_all(mode: str = "quick", seed: int = 0, threads: int = 1, graphs_dir=None) -> VerifyReport:
    """Run every check group; quick mode skips the large planting and sampling runs."""
    if mode not in ("quick", "full"):
        raise ValueError(f"mode must be quick or full, got {mode!r}")
    graphs = _Graphs(graphs_dir)
    report = VerifyReport(mode, seed)
    for name, fn, when in GROUPS:
        if when == "full" and mode != "full":
            continue
        start = time.perf_counter()
        report.checks += fn(graphs=graphs, seed=seed, mode=mode, threads=threads)
        report.timings[name] = time.perf_counter() - start
    return report
