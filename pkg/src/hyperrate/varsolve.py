"""Numerical solution of the entropic variational problem at small n.

Minimise the total relative entropy of a weighted r-graph ``W`` on ``n``
vertices subject to ``t(H, W) >= (1 + delta) p**|E(H)|``. Weights are kept
in ``[p, 1]``: lowering a weight below ``p`` costs entropy and cannot raise
the density.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import hubplan
from .errors import DegenerateWidth, DomainError, NoFeasiblePoint
from .hypercore import (
    EINSUM_MEMORY,
    _LETTERS,
    Hypergraph,
    WeightedHypergraph,
    check_budget,
    density,
    density_from_dense,
    max_degree,
    rank_table,
    relative_entropy,
    subsets_colex,
)
from .optim import augmented_lagrangian

log = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-10
_CLIP = 1.0 - 1e-15


@dataclass(frozen=True)
class VariationalInstance:
    H: Hypergraph
    n: int
    p: float
    delta: float
    restarts: int = 2
    max_iter: int = 300
    outer: int = 8
    mu0: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.n < self.H.k:
            raise DomainError(f"n={self.n} is smaller than |V(H)|={self.H.k}")
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"p must lie in (0, 1), got {self.p}")
        if self.delta <= 0:
            raise DomainError(f"delta must be positive, got {self.delta}")

    @property
    def threshold(self) -> float:
        return (1.0 + self.delta) * self.p**self.H.num_edges

    @property
    def scale(self) -> float:
        """``n**r p**Delta log(1/p)``, the order of the optimum."""
        return self.n**self.H.r * self.p ** max_degree(self.H) * math.log(1.0 / self.p)


@dataclass
class VariationalSolution:
    W: WeightedHypergraph
    objective: float
    constraint_value: float
    feasible: bool
    normalized_rate: float
    start: str = ""
    warm_start_objective: float = math.inf
    trace: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "objective": self.objective,
            "constraint_value": self.constraint_value,
            "feasible": self.feasible,
            "normalized_rate": self.normalized_rate,
            "start": self.start,
            "warm_start_objective": self.warm_start_objective,
            "trace": self.trace,
        }


# ---------------------------------------------------------------------------
# gradient

@lru_cache(maxsize=256)
def _gradient_plans(H: Hypergraph, n: int):
    plans = []
    for j, e in enumerate(H.edges):
        others = [f for i, f in enumerate(H.edges) if i != j]
        terms = ["".join(_LETTERS[v] for v in f) for f in others]
        out = "".join(_LETTERS[v] for v in e)
        # one all-ones vector per output letter keeps every output index bound
        expr = ",".join(terms + list(out)) + "->" + out
        ops = [np.empty((n,) * H.r)] * len(others) + [np.empty(n)] * H.r
        path = np.einsum_path(expr, *ops, optimize=("greedy", EINSUM_MEMORY))[0]
        plans.append((expr, path, len(others)))
    isolated = sum(1 for d in H.degrees if d == 0)
    return plans, isolated


def _gradient_dense(H: Hypergraph, dense: np.ndarray) -> np.ndarray:
    n, r = dense.shape[0], H.r
    plans, isolated = _gradient_plans(H, n)
    ones = np.ones(n)
    acc = np.zeros((n,) * r)
    for expr, path, count in plans:
        acc += np.einsum(expr, *([dense] * count), *([ones] * r), optimize=path)
    sym = np.zeros_like(acc)
    for perm in itertools.permutations(range(r)):
        sym += acc.transpose(perm)
    subs = subsets_colex(n, r)
    return sym[tuple(subs.T)] * (float(n) ** isolated / float(n) ** H.k)


def density_gradient(H: Hypergraph, W: WeightedHypergraph, budget: int | None = None) -> np.ndarray:
    """Derivative of ``t(H, W)`` with respect to each stored subset weight.

    Every ordered incarnation of a subset is aggregated, so the result is
    indexed like ``W.values`` (colex order).
    """
    if W.r != H.r:
        raise DomainError(f"uniformity mismatch: H is {H.r}-uniform, W is {W.r}-uniform")
    check_budget(W.n**H.k, budget)
    if not H.edges:
        return np.zeros_like(W.values)
    return _gradient_dense(H, W.dense)


def _to_dense(values: np.ndarray, n: int, r: int) -> np.ndarray:
    table = rank_table(n, r)
    out = np.zeros(n**r)
    mask = table >= 0
    out[mask] = values[table[mask]]
    return out.reshape((n,) * r)


def finite_difference_check(H: Hypergraph, W: WeightedHypergraph, h: float = 1e-6,
                            coords: int = 50, seed: int = 0) -> float:
    """Max relative gap between the analytic gradient and central differences."""
    if not 1e-8 < h < 1e-3:
        raise DomainError(f"step must lie in (1e-8, 1e-3), got {h}")
    grad = density_gradient(H, W)
    rng = np.random.default_rng(seed)
    m = W.values.shape[0]
    picks = rng.choice(m, size=min(coords, m), replace=False)
    worst = 0.0
    for i in picks:
        up = W.values.copy()
        down = W.values.copy()
        up[i] += h
        down[i] -= h
        fd = (density_from_dense(H, _to_dense(up, W.n, W.r))
              - density_from_dense(H, _to_dense(down, W.n, W.r))) / (2.0 * h)
        worst = max(worst, abs(grad[i] - fd) / (abs(grad[i]) + 1e-12))
    return worst


# ---------------------------------------------------------------------------
# warm starts

def _entropy_and_grad(x, p):
    xc = np.minimum(x, _CLIP)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.where(x > 0, x * np.log1p((x - p) / p), 0.0) + np.where(
            x < 1, (1 - x) * np.log1p((p - x) / (1 - p)), 0.0)
    grad = np.log(xc / p) - np.log((1.0 - xc) / (1.0 - p))
    return float(math.fsum(val.tolist())), grad


def _prefix_masks(n: int, r: int):
    subs = subsets_colex(n, r)
    # colex rows are sorted ascending, so the max vertex is the last column
    return subs[:, 0], subs[:, -1]


def _smallest_feasible(H, n, p, tau, build):
    """First ``s`` in ``1..n`` whose planted weights reach the threshold."""
    for s in range(1, n + 1):
        try:
            vals = build(s)
        except DegenerateWidth:
            continue
        if vals is None:
            continue
        if density_from_dense(H, _to_dense(vals, n, H.r)) >= tau * (1.0 - FEASIBILITY_TOL):
            return s, vals
    return None, None


def planted_starts(inst: VariationalInstance, labelings=None) -> dict:
    """Feasible planted constructions at the least feasible integer width.

    Keys are ``hub``, ``clique`` and ``mixed``; values ``(width, weights)``.
    """
    H, n, p = inst.H, inst.n, inst.p
    r = H.r
    tau = inst.threshold
    lo, hi = _prefix_masks(n, r)
    out = {}

    def hub(s):
        return np.where(lo < s, 1.0, p)

    def clique(s):
        return np.where(hi < s, 1.0, p)

    for name, build in (("hub", hub), ("clique", clique)):
        s, vals = _smallest_feasible(H, n, p, tau, build)
        if s is not None:
            out[name] = (s, vals)

    try:
        res = hubplan.rho(H, inst.delta, labelings=labelings, seed=inst.seed)
    except NoFeasiblePoint:
        return out
    M = hubplan.collection_from_certificate(H, res.certificate, labelings)
    top = max(M.active_values())
    base = M.c[top] * p ** (float(top) * max_degree(H)) * n

    def mixed(s):
        lam = (s / base) ** (1.0 / float(top))
        B = hubplan.plant(H, M.scaled(lam), n, p)
        return B.to_weighted().values

    s, vals = _smallest_feasible(H, n, p, tau, mixed)
    if s is not None:
        out["mixed"] = (s, vals)
    return out


# ---------------------------------------------------------------------------
# solver

def _repair(H, n, r, x, target, tau):
    """Move toward a feasible point until the constraint holds."""
    def ok(a):
        return density_from_dense(H, _to_dense((1 - a) * x + a * target, n, r)) >= tau
    if ok(0.0):
        return x
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return (1 - hi) * x + hi * target


def solve_phi(inst: VariationalInstance, labelings=None) -> VariationalSolution:
    """Best feasible weights found by multi-start augmented Lagrangian descent.

    The result is never worse than the planted warm starts, which are
    evaluated as candidates in their own right.
    """
    H, n, p, r = inst.H, inst.n, inst.p, inst.H.r
    check_budget(n**H.k)
    tau = inst.threshold
    m = math.comb(n, r)
    ones = np.ones(m)
    top = density_from_dense(H, _to_dense(ones, n, r))
    if top < tau:
        W1 = WeightedHypergraph(n, r, ones, p)
        raise NoFeasiblePoint(
            f"all-ones weights reach density {top:.6g} < threshold {tau:.6g}",
            best=VariationalSolution(W1, relative_entropy(W1), top, False,
                                     relative_entropy(W1) / inst.scale, "all_ones"),
        )
    scale = inst.scale

    def fun(x):
        val, grad = _entropy_and_grad(x, p)
        return val / scale, grad / scale

    def cons(x):
        dense = _to_dense(x, n, r)
        return density_from_dense(H, dense) / tau - 1.0, _gradient_dense(H, dense) / tau

    planted = planted_starts(inst, labelings)
    starts = [("constant", np.full(m, p))]
    starts += [(name, vals) for name, (_, vals) in sorted(planted.items())]
    rng = np.random.default_rng(inst.seed)
    anchor = min(planted.values(), key=lambda sv: _entropy_and_grad(sv[1], p)[0])[1] if planted else ones
    for i in range(inst.restarts):
        noise = rng.uniform(0.0, 0.2, size=m)
        starts.append((f"random{i}", np.clip(anchor - noise + 0.1, p, 1.0)))

    candidates = [(name, vals, {}) for name, vals in starts if name in planted]
    warm = min((_entropy_and_grad(v, p)[0] for _, v, _ in candidates), default=math.inf)
    bounds = [(p, 1.0)] * m
    for name, x0 in starts:
        x, xfeas, trace = augmented_lagrangian(fun, cons, x0, bounds, outer=inst.outer,
                                               mu0=inst.mu0, inner_maxiter=inst.max_iter)
        log.debug("start %s: objective %.6g violation %.3g", name, trace.objectives[-1], trace.violations[-1])
        for z in (x, xfeas):
            z = np.clip(z, p, 1.0)
            z = _repair(H, n, r, z, anchor, tau)
            candidates.append((name, z, trace.to_json()))

    best = None
    for name, vals, trace in candidates:
        t = density_from_dense(H, _to_dense(vals, n, r))
        if t < tau * (1.0 - FEASIBILITY_TOL):
            continue
        obj = _entropy_and_grad(vals, p)[0]
        if best is None or obj < best[0]:
            best = (obj, name, vals, t, trace)
    if best is None:
        raise NoFeasiblePoint("no feasible weights found")
    obj, name, vals, t, trace = best
    W = WeightedHypergraph(n, r, vals, p)
    objective = relative_entropy(W)
    return VariationalSolution(W, objective, density(H, W), True, objective / scale, name, warm, trace)
