"""Exact enumeration of edge-sum labelings and their stable members.

A labeling assigns a rational in [0, 1] to every vertex so that each edge
sums to exactly 0 or 1, with every vertex of less than maximum degree at 0.
It is *stable* when its own zero set, equality pattern and edge sums pin it
down uniquely. All arithmetic is over :class:`fractions.Fraction`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetExceeded
from .hypercore import Hypergraph, evaluation_budget, max_degree

MAX_EDGES = 20
_ZERO = Fraction(0)
_ONE = Fraction(1)


class AffineSystem:
    """Incrementally maintained reduced row echelon form of ``A x = b``.

    Rows are stored by pivot column. ``add`` returns ``False`` when the new
    equation is inconsistent with the current ones.
    """

    __slots__ = ("nvars", "rows")

    def __init__(self, nvars: int):
        self.nvars = nvars
        self.rows = {}

    def copy(self) -> "AffineSystem":
        out = AffineSystem(self.nvars)
        out.rows = dict(self.rows)
        return out

    @property
    def dimension(self) -> int:
        return self.nvars - len(self.rows)

    def reduce(self, coeffs, rhs):
        coeffs = list(coeffs)
        rhs = Fraction(rhs)
        for piv, (row, b) in self.rows.items():
            c = coeffs[piv]
            if c:
                coeffs = [x - c * y for x, y in zip(coeffs, row)]
                rhs -= c * b
        return coeffs, rhs

    def add(self, coeffs, rhs) -> bool:
        coeffs, rhs = self.reduce(coeffs, rhs)
        piv = next((i for i, c in enumerate(coeffs) if c), None)
        if piv is None:
            return rhs == 0
        c = coeffs[piv]
        coeffs = tuple(x / c for x in coeffs)
        rhs = rhs / c
        rows = {}
        for p, (row, b) in self.rows.items():
            m = row[piv]
            if m:
                row = tuple(x - m * y for x, y in zip(row, coeffs))
                b = b - m * rhs
            rows[p] = (row, b)
        rows[piv] = (coeffs, rhs)
        self.rows = rows
        return True

    def is_independent(self, coeffs) -> bool:
        red, _ = self.reduce(coeffs, 0)
        return any(red)

    def parametrize(self):
        """Return ``(x0, basis)`` with solutions ``x0 + sum_j t_j basis[j]``."""
        free = [j for j in range(self.nvars) if j not in self.rows]
        x0 = [_ZERO] * self.nvars
        for piv, (_, b) in self.rows.items():
            x0[piv] = b
        basis = []
        for j in free:
            vec = [_ZERO] * self.nvars
            vec[j] = _ONE
            for piv, (row, _) in self.rows.items():
                vec[piv] = -row[j]
            basis.append(vec)
        return x0, basis

    def out_of_range(self) -> bool:
        """True if some fully determined variable lies outside [0, 1]."""
        for _, (row, b) in self.rows.items():
            if sum(1 for c in row if c) == 1 and not _ZERO <= b <= _ONE:
                return True
        return False


# ---------------------------------------------------------------------------
# types

@dataclass(frozen=True, order=True)
class Labeling:
    """Exact vertex labeling; ``values[v]`` is the label of vertex ``v``."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(Fraction(v) for v in self.values))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, v):
        return self.values[v]

    @property
    def is_zero(self) -> bool:
        return not any(self.values)

    def edge_sums(self, H: Hypergraph) -> tuple:
        return tuple(sum((self.values[v] for v in e), _ZERO) for e in H.edges)

    def value_multiset(self) -> tuple:
        return tuple(sorted(self.values))

    def relabel(self, perm) -> "Labeling":
        """Labeling ``g`` with ``g(perm[v]) = f(v)``."""
        out = [_ZERO] * len(self.values)
        for v, x in enumerate(self.values):
            out[perm[v]] = x
        return Labeling(tuple(out))

    def to_json(self) -> dict:
        return {str(v): f"{x.numerator}/{x.denominator}" for v, x in enumerate(self.values)}


@dataclass(frozen=True)
class LabelingPattern:
    zero_set: frozenset
    equality_partition: tuple
    edge_sum_vector: tuple


def pattern_of(H: Hypergraph, f: Labeling) -> LabelingPattern:
    blocks = {}
    for v, x in enumerate(f.values):
        if x:
            blocks.setdefault(x, []).append(v)
    return LabelingPattern(
        frozenset(v for v, x in enumerate(f.values) if not x),
        tuple(tuple(b) for _, b in sorted(blocks.items())),
        f.edge_sums(H),
    )


def canonical_key(f: Labeling):
    return (sum(1 for x in f.values if x), f.value_multiset(), f.values)


# ---------------------------------------------------------------------------
# membership and stability

def is_in_gamma_tilde(H: Hypergraph, f: Labeling) -> bool:
    if len(f) != H.k:
        return False
    if any(not _ZERO <= x <= _ONE for x in f.values):
        return False
    delta = max_degree(H)
    if any(x and d < delta for x, d in zip(f.values, H.degrees)):
        return False
    return all(s in (_ZERO, _ONE) for s in f.edge_sums(H))


def _pattern_system(H: Hypergraph, f: Labeling) -> AffineSystem:
    k = H.k
    delta = max_degree(H)
    sys = AffineSystem(k)
    for v in range(k):
        if not f.values[v] or H.degrees[v] < delta:
            sys.add([_ONE if u == v else _ZERO for u in range(k)], 0)
    for e, s in zip(H.edges, f.edge_sums(H)):
        sys.add([_ONE if u in e else _ZERO for u in range(k)], s)
    for block in pattern_of(H, f).equality_partition:
        for u, w in zip(block, block[1:]):
            row = [_ZERO] * k
            row[u], row[w] = _ONE, -_ONE
            sys.add(row, 0)
    return sys


def is_stable(H: Hypergraph, f: Labeling) -> bool:
    """True if f is the only solution of the system fixed by its own pattern."""
    if not is_in_gamma_tilde(H, f):
        return False
    return _pattern_system(H, f).dimension == 0


# ---------------------------------------------------------------------------
# enumeration

def _edge_order(H: Hypergraph) -> list:
    # keep overlapping edges adjacent so inconsistencies surface early
    order, seen = [], set()
    remaining = list(range(H.num_edges))
    while remaining:
        best = max(remaining, key=lambda i: (len(seen.intersection(H.edges[i])), -i))
        order.append(best)
        seen.update(H.edges[best])
        remaining.remove(best)
    return order


class _Budget:
    def __init__(self, budget):
        self.budget = evaluation_budget() if budget is None else budget
        self.used = 0

    def tick(self, amount=1):
        self.used += amount
        if self.used > self.budget:
            raise BudgetExceeded(self.used, self.budget)


def _leaf_systems(H: Hypergraph, budget: _Budget, fixed_sums=None):
    """Yield ``(free_vertices, system)`` for every consistent edge-sum vector."""
    delta = max_degree(H)
    free = [v for v in range(H.k) if H.degrees[v] == delta]
    index = {v: i for i, v in enumerate(free)}
    m = len(free)
    order = _edge_order(H)

    def unit(v):
        row = [_ZERO] * m
        row[index[v]] = _ONE
        return row

    def rec(depth, sys):
        budget.tick()
        if depth == len(order):
            yield sys
            return
        e = H.edges[order[depth]]
        choices = (0, 1) if fixed_sums is None else (fixed_sums,)
        for b in choices:
            nxt = sys.copy()
            if b == 0:
                ok = all(nxt.add(unit(v), 0) for v in e if v in index)
            else:
                row = [_ZERO] * m
                for v in e:
                    if v in index:
                        row[index[v]] = _ONE
                ok = nxt.add(row, 1)
            if ok and not nxt.out_of_range():
                yield from rec(depth + 1, nxt)

    for sys in rec(0, AffineSystem(m)):
        yield free, sys


def _hyperplanes(x0, basis):
    """Pattern hyperplanes ``f(v) = 0`` and ``f(u) = f(w)`` in parameter space.

    Returns distinct ``(coeffs, rhs)`` pairs, dropping those that hold
    identically or never hold on the affine space.
    """
    m = len(x0)
    d = len(basis)
    rows = []
    for v in range(m):
        rows.append(([basis[j][v] for j in range(d)], -x0[v]))
    for u, w in itertools.combinations(range(m), 2):
        rows.append(([basis[j][u] - basis[j][w] for j in range(d)], x0[w] - x0[u]))
    seen = set()
    out = []
    for coeffs, rhs in rows:
        piv = next((c for c in coeffs if c), None)
        if piv is None:
            continue
        key = (tuple(c / piv for c in coeffs), rhs / piv)
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out


def _arrangement_vertices(x0, basis, budget: _Budget):
    """Points of the affine space cut out by ``dim`` independent hyperplanes."""
    d = len(basis)
    if d == 0:
        yield tuple(x0)
        return
    planes = _hyperplanes(x0, basis)

    def rec(start, sys):
        budget.tick()
        if sys.dimension == 0:
            t = [sys.rows[j][1] for j in range(d)]
            yield tuple(x0[v] + sum((t[j] * basis[j][v] for j in range(d)), _ZERO) for v in range(len(x0)))
            return
        for i in range(start, len(planes)):
            coeffs, rhs = planes[i]
            if not sys.is_independent(coeffs):
                continue
            nxt = sys.copy()
            nxt.add(coeffs, rhs)
            yield from rec(i + 1, nxt)

    yield from rec(0, AffineSystem(d))


def _candidates(H: Hypergraph, budget: _Budget, fixed_sums=None):
    for free, sys in _leaf_systems(H, budget, fixed_sums):
        x0, basis = sys.parametrize()
        for point in _arrangement_vertices(x0, basis, budget):
            if all(_ZERO <= x <= _ONE for x in point):
                values = [_ZERO] * H.k
                for v, x in zip(free, point):
                    values[v] = x
                yield Labeling(tuple(values))


def enumerate_stable_labelings(H: Hypergraph, budget: int | None = None) -> list:
    """All stable labelings of H together with the zero labeling.

    Every consistent edge-sum vector is visited depth first; within each
    solution space, points fixed by a full set of zero/equality constraints
    are collected, filtered for stability and deduplicated. Output is sorted
    by number of nonzero labels, then by value multiset.
    """
    if H.num_edges > MAX_EDGES:
        raise BudgetExceeded(2**H.num_edges, 2**MAX_EDGES)
    tracker = _Budget(budget)
    found = {f for f in _candidates(H, tracker) if is_stable(H, f)}
    found.add(Labeling((_ZERO,) * H.k))
    return sorted(found, key=canonical_key)


def multiplicity_groups(labelings) -> list:
    """Group labelings by sorted value multiset: ``[(multiset, count), ...]``."""
    counts = {}
    for f in labelings:
        key = f.value_multiset()
        counts[key] = counts.get(key, 0) + 1
    return sorted(counts.items(), key=lambda kv: (sum(1 for x in kv[0] if x), kv[0]))


def unique_full_labeling_check(H: Hypergraph, budget: int | None = None):
    """The labeling with every edge summing to 1, if exactly one exists."""
    tracker = _Budget(budget)
    for free, sys in _leaf_systems(H, tracker, fixed_sums=1):
        if sys.dimension == 0:
            x0, _ = sys.parametrize()
            if all(_ZERO <= x <= _ONE for x in x0):
                values = [_ZERO] * H.k
                for v, x in zip(free, x0):
                    values[v] = x
                return Labeling(tuple(values))
            return None
        return _unique_point_in_box(H, free, sys, tracker)
    return None


def _unique_point_in_box(H, free, sys, tracker):
    # a positive-dimensional solution space can still meet [0,1]^V in one point
    from scipy.optimize import linprog

    x0, basis = sys.parametrize()
    d = len(basis)
    A = [[float(basis[j][v]) for j in range(d)] for v in range(len(x0))]
    lo = [-float(x) for x in x0]
    hi = [1.0 - float(x) for x in x0]
    A_ub = [row for row in A] + [[-c for c in row] for row in A]
    b_ub = hi + [-x for x in lo]
    for v in range(len(x0)):
        spans = []
        for sign in (1.0, -1.0):
            res = linprog([sign * c for c in A[v]], A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * d)
            if res.status != 0:
                return None
            spans.append(sign * res.fun)
        if abs(spans[0] - spans[1]) > 1e-9:
            return None
    points = {p for p in _arrangement_vertices(x0, basis, tracker) if all(_ZERO <= x <= _ONE for x in p)}
    if len(points) != 1:
        return None
    values = [_ZERO] * H.k
    for v, x in zip(free, points.pop()):
        values[v] = x
    return Labeling(tuple(values))
