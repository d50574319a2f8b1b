"""Counting function, cut norm, Gaussian width and reduced convex programs.

Also houses numerical checks of the generalised Hölder inequality and of the
relative-entropy estimates used in the clique lower bound.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from . import kernels
from .errors import DomainError
from .hypercore import (
    Hypergraph,
    WeightedHypergraph,
    _entropy_array,
    check_budget,
    max_degree,
)

# ---------------------------------------------------------------------------
# symmetric tensors


def _multisets(n: int, r: int) -> list:
    return list(itertools.combinations_with_replacement(range(n), r))


class SymmetricTensor:
    """Real function on ``[n]**r`` invariant under permuting coordinates.

    One value is stored per multiset (including repeated indices).
    """

    def __init__(self, n: int, r: int, values):
        values = np.array(values, dtype=np.float64).reshape(-1)
        expected = math.comb(n + r - 1, r)
        if values.shape[0] != expected:
            raise DomainError(f"expected {expected} multiset values, got {values.shape[0]}")
        if not np.isfinite(values).all():
            raise DomainError("tensor values must be finite")
        values.flags.writeable = False
        self.n, self.r, self.values = n, r, values

    @classmethod
    def from_function(cls, n: int, r: int, fn):
        return cls(n, r, [fn(m) for m in _multisets(n, r)])

    @classmethod
    def from_weighted(cls, W: WeightedHypergraph):
        """Zero on repeated indices, the subset weight elsewhere."""
        return cls.from_dense(W.dense)

    @classmethod
    def from_dense(cls, dense: np.ndarray):
        n, r = dense.shape[0], dense.ndim
        return cls(n, r, [dense[m] for m in _multisets(n, r)])

    @property
    def dense(self) -> np.ndarray:
        out = np.empty((self.n,) * self.r)
        for m, v in zip(_multisets(self.n, self.r), self.values):
            for perm in set(itertools.permutations(m)):
                out[perm] = v
        return out


def _as_dense(f) -> np.ndarray:
    if isinstance(f, SymmetricTensor):
        return f.dense
    if isinstance(f, WeightedHypergraph):
        return np.asarray(f.dense)
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim < 1 or any(s != arr.shape[0] for s in arr.shape):
        raise DomainError("tensor must have equal side lengths")
    return arr


# ---------------------------------------------------------------------------
# counting function and discrete Lipschitz constant

def counting_function(H: Hypergraph, x, budget: int | None = None) -> float:
    """Sum over tuples of distinct vertices of the product of ``x`` over edges."""
    dense = _as_dense(x)
    n = dense.shape[0]
    if dense.ndim != H.r:
        raise DomainError("uniformity mismatch")
    check_budget(math.perm(n, H.k) if n >= H.k else 0, budget)
    return kernels.injective_weighted_sum(H.edge_array, H.k, dense.reshape(-1), n, H.r)


def _derivative_at(H, n, x_values, rank):
    from .hypercore import rank_table

    table = rank_table(n, H.r)
    mask = table >= 0

    def count(vals):
        adj = np.zeros(n**H.r)
        adj[mask] = vals[table[mask]]
        return kernels.injective_weighted_sum(H.edge_array, H.k, adj, n, H.r)

    up = x_values.copy()
    down = x_values.copy()
    up[rank] = 1.0
    down[rank] = 0.0
    return count(up) - count(down)


def disc_lip(H: Hypergraph, n: int, mode: str = "exact", scale: float = 1.0,
             exhaustive_limit: int = 12) -> float:
    """Largest single-coordinate jump of ``scale * n**-k * T_H`` on the cube.

    ``mode="bound"`` returns ``scale * n**-k * |E| * r! * n**(k-r)``.
    ``mode="exact"`` evaluates the jump at the all-ones point, which is the
    maximiser because ``T_H`` has nonnegative coefficients; when there are at
    most ``exhaustive_limit`` coordinates every point of the cube is checked.
    """
    k, r = H.k, H.r
    norm = scale / float(n) ** k
    if mode == "bound":
        return norm * H.num_edges * math.factorial(r) * float(n) ** (k - r)
    if mode != "exact":
        raise DomainError(f"unknown mode {mode!r}")
    N = math.comb(n, r)
    if N <= exhaustive_limit:
        best = 0.0
        for bits in itertools.product((0.0, 1.0), repeat=N):
            x = np.array(bits)
            for i in range(N):
                best = max(best, _derivative_at(H, n, x, i))
        return norm * best
    # all subsets are equivalent at the all-ones point
    return norm * _derivative_at(H, n, np.ones(N), 0)


# ---------------------------------------------------------------------------
# cut norm

def _selector_index(n: int, r: int):
    """For each axis k: map from ordered ``[n]**r`` tuples to the multiset id
    of the tuple with coordinate k removed."""
    ms = _multisets(n, r - 1)
    ids = {m: i for i, m in enumerate(ms)}
    grids = np.indices((n,) * r).reshape(r, -1).T
    out = []
    for k in range(r):
        rest = np.delete(grids, k, axis=1)
        rest.sort(axis=1)
        out.append(np.array([ids[tuple(row)] for row in rest.tolist()], dtype=np.int64))
    return len(ms), out


def _cut_value(flat, index, sels, skip=None):
    prod = flat.copy()
    for k, sel in enumerate(sels):
        if k != skip:
            prod = prod * sel[index[k]]
    return prod


def cut_norm_exact(f, budget: int | None = None) -> float:
    """Exact cut norm: all symmetric 0/1 selectors on the first ``r-1`` axes,
    closed form for the last one."""
    dense = _as_dense(f)
    n, r = dense.shape[0], dense.ndim
    if r == 2:
        check_budget(2**n, budget)
        return kernels.cutnorm_pair_exact(np.ascontiguousarray(dense))
    M, index = _selector_index(n, r)
    check_budget(2 ** (M * (r - 1)), budget)
    flat = dense.reshape(-1)
    best = 0.0
    choices = [np.array(bits, dtype=np.float64) for bits in itertools.product((0.0, 1.0), repeat=M)]
    for sels in itertools.product(choices, repeat=r - 1):
        sels = list(sels) + [None]
        prod = _cut_value(flat, index, sels, skip=r - 1)
        g = np.bincount(index[r - 1], weights=prod, minlength=M)
        best = max(best, g[g > 0].sum(), -g[g < 0].sum())
    return float(best)


def cut_norm_heuristic(f, restarts: int = 50, seed: int = 0, max_sweeps: int = 100) -> float:
    """Lower bound on the cut norm by alternating maximisation over selectors."""
    dense = _as_dense(f)
    n, r = dense.shape[0], dense.ndim
    if not np.any(dense):
        return 0.0
    M, index = _selector_index(n, r)
    flat = dense.reshape(-1)
    rng = np.random.default_rng(seed)
    best = 0.0
    for i in range(restarts):
        for sign in (1.0, -1.0):
            sels = [np.ones(M) if i == 0 else rng.integers(0, 2, M).astype(np.float64) for _ in range(r)]
            value = sign * _cut_value(flat, index, sels).sum()
            for _ in range(max_sweeps):
                improved = False
                for k in range(r):
                    g = sign * np.bincount(index[k], weights=_cut_value(flat, index, sels, skip=k), minlength=M)
                    sels[k] = (g > 0).astype(np.float64)
                    new = g[g > 0].sum()
                    if new > value * (1.0 + 1e-14) + 1e-300:
                        improved = True
                    value = max(value, new)
                if not improved:
                    break
            best = max(best, value)
    return float(best)


# ---------------------------------------------------------------------------
# Gaussian width

@dataclass
class GaussianWidthReport:
    bound_estimate: float
    bound_std_error: float
    direct_estimate: float | None = None
    direct_std_error: float | None = None
    samples: int = 0
    seed: int = 0
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _gradient_points(H: Hypergraph, n: int, scale: float, limit: int):
    """Gradients of ``scale * n**-k * T_H`` over the cube, or ``None`` if too many."""
    from .hypercore import rank_table

    N = math.comb(n, H.r)
    norm = scale / float(n) ** H.k
    if H.num_edges == 1:
        # linear: a single constant gradient
        return np.full((1, N), norm * math.factorial(H.r))
    if N > limit:
        return None
    table = rank_table(n, H.r)
    mask = table >= 0
    pts = []
    for bits in itertools.product((0.0, 1.0), repeat=N):
        x = np.array(bits)
        row = []
        for i in range(N):
            row.append(_derivative_at(H, n, x, i))
        pts.append(row)
    del table, mask
    return norm * np.unique(np.array(pts), axis=0)


def disc_gw_estimate(H: Hypergraph, n: int, gaussian_samples: int = 200, seed: int = 0,
                     scale: float = 1.0, restarts: int = 10, enumerate_limit: int = 10) -> GaussianWidthReport:
    """Monte Carlo estimates around the Gaussian width of the gradient set.

    ``bound_estimate`` averages ``|E| n**(k-r) ||Gamma||_cut`` over i.i.d.
    Gaussian tensors on ``[n]**r``: an estimated upper bound, not the width
    itself (cut norms are exact for r = 2 and heuristic otherwise). When the
    gradient set is small enough to list, ``direct_estimate`` averages
    ``max(0, max_g <g, Gamma>)`` over Gaussian vectors indexed by subsets.
    """
    rng = np.random.default_rng(seed)
    report = GaussianWidthReport(0.0, 0.0, samples=gaussian_samples, seed=seed)
    if H.num_edges == 0:
        report.direct_estimate, report.direct_std_error = 0.0, 0.0
        return report
    r, k = H.r, H.k
    vals = []
    for _ in range(gaussian_samples):
        gamma = rng.standard_normal((n,) * r)
        if r == 2 and n <= 20:
            cn = kernels.cutnorm_pair_exact(gamma)
        else:
            cn = cut_norm_heuristic(gamma, restarts=restarts, seed=int(rng.integers(2**31)))
        vals.append(H.num_edges * float(n) ** (k - r) * cn)
    vals = np.array(vals)
    report.bound_estimate = float(vals.mean())
    report.bound_std_error = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    if r != 2 or n > 20:
        report.notes.append("cut norms from alternating maximisation (lower bounds)")
    pts = _gradient_points(H, n, scale, enumerate_limit)
    if pts is not None:
        g = rng.standard_normal((gaussian_samples, pts.shape[1]))
        sup = np.maximum((g @ pts.T).max(axis=1), 0.0)
        report.direct_estimate = float(sup.mean())
        report.direct_std_error = float(sup.std(ddof=1) / math.sqrt(len(sup))) if len(sup) > 1 else 0.0
    return report


# ---------------------------------------------------------------------------
# Hölder checks

@dataclass
class HolderResult:
    lhs: float
    rhs: float
    holds: bool
    variant: str

    def to_json(self) -> dict:
        return dict(self.__dict__)


def holder_check(H: Hypergraph, U, blocks=None) -> HolderResult:
    """Both sides of the generalised Hölder bound for a nonnegative symmetric U.

    Integrals use the uniform probability measure on ``[n]``, diagonals
    included. ``blocks[v]`` restricts vertex ``v`` to a subset of ``[n]``;
    complete H without blocks uses the clique form.
    """
    dense = _as_dense(U)
    n, r = dense.shape[0], dense.ndim
    if r != H.r:
        raise DomainError("uniformity mismatch")
    if (dense < 0).any():
        raise DomainError("U must be nonnegative")
    check_budget(n**H.k)
    delta = max_degree(H)
    masks = [np.ones(n, dtype=bool)] * H.k
    if blocks is not None:
        masks = []
        for b in blocks:
            m = np.zeros(n, dtype=bool)
            m[list(b)] = True
            masks.append(m)
    from .hypercore import _LETTERS

    letters = _LETTERS
    ops, terms = [], []
    for e in H.edges:
        ops.append(dense)
        terms.append("".join(letters[v] for v in e))
    for v in range(H.k):
        ops.append(masks[v].astype(np.float64))
        terms.append(letters[v])
    lhs = float(np.einsum(",".join(terms) + "->", *ops, optimize=True)) / float(n) ** H.k
    powered = dense**delta
    factors = []
    for e in H.edges:
        sub = powered
        for axis, v in enumerate(e):
            shape = [1] * r
            shape[axis] = n
            sub = sub * masks[v].reshape(shape)
        factors.append((sub.sum() / float(n) ** r) ** (1.0 / delta))
    if blocks is None and H.is_complete():
        variant = "clique"
        base = powered.sum() / float(n) ** r
        rhs = base ** (H.k / r)
    else:
        variant = "bounded_degree"
        rhs = math.prod(factors)
    rhs = float(rhs)
    return HolderResult(lhs, rhs, bool(lhs <= rhs * (1.0 + 1e-12)), variant)


# ---------------------------------------------------------------------------
# entropy estimates

def _ip(p, x):
    return float(_entropy_array(np.array([x]), p)[0])


def _ip_shift(p, x):
    """``I_p(p + x)`` evaluated without forming ``p + x``."""
    if x == 0:
        return 0.0
    a = (p + x) * math.log1p(x / p)
    q = 1.0 - p - x
    b = q * math.log1p(-x / (1.0 - p)) if q > 0 else 0.0
    return a + b


@dataclass
class EntropyCheck:
    p: float
    name: str
    x: float
    b: float | None
    observed: float
    bound: float
    passed: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def entropy_lemma_checks(p_grid, grid: int = 20) -> dict:
    """Quadratic and log regimes of ``I_p(p + x)`` and two lower bounds.

    Ratios are checked within [0.9, 1.1] at ``x = p**2`` (quadratic regime)
    and ``x = sqrt(p)`` (log regime). The inequality checks use a ``grid``
    by ``grid`` mesh. Returns ``{"passed", "checks", "first_failure"}``.
    """
    checks = []
    for p in p_grid:
        p = float(p)
        if not 0.0 < p <= 0.01:
            raise DomainError(f"p must lie in (0, 0.01], got {p}")
        x = p * p
        ratio = _ip_shift(p, x) / (x * x / (2.0 * p))
        checks.append(EntropyCheck(p, "quadratic_regime", x, None, ratio, 1.0, 0.9 <= ratio <= 1.1))
        x = math.sqrt(p)
        ratio = _ip_shift(p, x) / (x * math.log(x / p))
        checks.append(EntropyCheck(p, "log_regime", x, None, ratio, 1.0, 0.9 <= ratio <= 1.1))
        top = 1.0 - p - 1.0 / math.log(1.0 / p)
        bs = np.linspace(0.0, top, grid + 1)[1:]
        for b in bs:
            ib = _ip_shift(p, b)
            for x in np.linspace(0.0, b, grid):
                lhs = _ip_shift(p, x)
                rhs = (x / b) ** 2 * ib
                checks.append(EntropyCheck(p, "scaled_lower_bound", float(x), float(b), lhs, rhs,
                                           lhs >= rhs * (1.0 - 1e-12)))
        c = _ip(p, 1.0 - 1.0 / math.log(1.0 / p))
        for x in np.linspace(0.0, 1.0 - p, grid * grid):
            lhs = _ip_shift(p, x)
            rhs = x * x * c
            checks.append(EntropyCheck(p, "quadratic_lower_bound", float(x), None, lhs, rhs,
                                       lhs >= rhs * (1.0 - 1e-12)))
    failures = [c for c in checks if not c.passed]
    return {
        "passed": not failures,
        "checks": checks,
        "first_failure": failures[0] if failures else None,
    }


# ---------------------------------------------------------------------------
# reduced convex programs

@dataclass
class ReducedProgramSolution:
    variables: dict
    objective: float
    active_branch: str | None
    vertex_values: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def solve_clique_program(k: int, r: int, delta: float) -> ReducedProgramSolution:
    """Minimise ``a + r b`` subject to ``a**(k/r) + k b >= delta``, ``a, b >= 0``."""
    if not k > r >= 2:
        raise DomainError("need k > r >= 2")
    if delta <= 0:
        raise DomainError("delta must be positive")
    q = k / r
    vertices = {"a": delta ** (1.0 / q), "b": r * delta / k}
    branch = min(vertices, key=vertices.get)
    # on the boundary b = (delta - a**q)/k the objective is concave in a
    res = minimize_scalar(lambda a: a + r * (delta - a**q) / k, bounds=(0.0, delta ** (1.0 / q)),
                          method="bounded", options={"xatol": 1e-12})
    if res.fun < vertices[branch] - 1e-9 * max(1.0, vertices[branch]):
        raise AssertionError("interior point beats both vertices")
    a, b = (vertices["a"], 0.0) if branch == "a" else (0.0, delta / k)
    return ReducedProgramSolution({"a": a, "b": b}, vertices[branch], branch, vertices)


def _special_theta2(delta: float) -> float:
    return brentq(lambda t: 4.0 * t**1.5 + 3.0 * t * t - delta, 0.0, max(1.0, delta), xtol=1e-15,
                  rtol=4 * np.finfo(float).eps)


def solve_special_program(delta: float, starts: int = 8, seed: int = 0) -> ReducedProgramSolution:
    """Minimise ``3x1 + 3x2 + 3y + x3`` subject to
    ``6x1 + 3x1**2 + 4x2**1.5 + 3x2**2 + x3**2 + 3y**2 >= delta``."""
    if delta <= 0:
        raise DomainError("delta must be positive")
    x1 = math.sqrt(1.0 + delta / 3.0) - 1.0
    x2 = _special_theta2(delta)
    vertices = {
        "x1": 3.0 * x1,
        "x2": 3.0 * x2,
        "x3": math.sqrt(delta),
        "y": 3.0 * math.sqrt(delta / 3.0),
    }
    point = {"x1": x1, "x2": x2, "x3": math.sqrt(delta), "y": math.sqrt(delta / 3.0)}
    branch = min(("x1", "x3", "y", "x2"), key=lambda key: vertices[key])
    if vertices["x2"] < min(vertices["x1"], vertices["x3"]) - 1e-12:
        raise AssertionError("the x2 vertex should never be optimal")

    def constraint(v):
        a, b, c, d = np.maximum(v, 0.0)
        return 6 * a + 3 * a * a + 4 * b**1.5 + 3 * b * b + c * c + 3 * d * d - delta

    weights = np.array([3.0, 3.0, 1.0, 3.0])
    rng = np.random.default_rng(seed)
    best = vertices[branch]
    for _ in range(starts):
        x0 = rng.uniform(0.0, 1.0, 4) * math.sqrt(delta)
        res = minimize(lambda v: weights @ v, x0, method="SLSQP", bounds=[(0.0, None)] * 4,
                       constraints=[{"type": "ineq", "fun": constraint}], options={"ftol": 1e-14, "maxiter": 500})
        if res.success and constraint(res.x) >= -1e-9 and res.fun < best - 1e-9 * max(1.0, best):
            raise AssertionError(f"interior point {res.x} beats the best vertex")
    variables = {"x1": 0.0, "x2": 0.0, "x3": 0.0, "y": 0.0}
    variables[branch] = point[branch]
    return ReducedProgramSolution(variables, vertices[branch], branch, vertices)
