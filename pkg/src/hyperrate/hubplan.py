"""Mixed-hub collections, their volume and gain polynomials, and the rate.

A collection is an index set ``S`` of ordered r-tuples of labels summing to
1 plus a width map ``c`` with ``c(0) = 1``. Its volume is
``sum over S of prod c(t_i)``; the gain polynomial sums
``prod_v c(f(v))`` over stable labelings whose edge tuples lie in ``S``.
The rate is the least volume whose gain reaches ``1 + delta``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateWidth, DomainError, NoFeasiblePoint
from .hypercore import BlockModel, Hypergraph, max_degree
from .labelings import Labeling, enumerate_stable_labelings
from .optim import augmented_lagrangian

_ZERO = Fraction(0)
_ONE = Fraction(1)
LOG_BOUNDS = (-60.0, 30.0)


# ---------------------------------------------------------------------------
# types

@dataclass(frozen=True)
class MixedHubCollection:
    """Index set of label tuples and widths ``c`` (``c[0] == 1``)."""

    tuples: frozenset
    c: dict = field(hash=False)

    def __post_init__(self):
        S = frozenset(tuple(Fraction(x) for x in t) for t in self.tuples)
        for t in S:
            if sum(t) != 1 or min(t) < 0:
                raise DomainError(f"tuple {t} must be nonnegative and sum to 1")
            for perm in itertools.permutations(t):
                if perm not in S:
                    raise DomainError(f"index set is not closed under permutation at {t}")
        c = {Fraction(k): float(v) for k, v in self.c.items()}
        c.setdefault(_ZERO, 1.0)
        if c[_ZERO] != 1.0:
            raise DomainError("c(0) must equal 1")
        if any(v < 0 for v in c.values()):
            raise DomainError("widths must be nonnegative")
        for t in S:
            for x in t:
                if x not in c:
                    raise DomainError(f"no width for label {x}")
        object.__setattr__(self, "tuples", S)
        object.__setattr__(self, "c", c)

    @property
    def values(self) -> list:
        """Nonzero labels occurring in the index set, ascending."""
        return sorted({x for t in self.tuples for x in t if x})

    def active_values(self) -> list:
        return [t for t in self.values if self.c.get(t, 0.0) > 0.0]

    def scaled(self, lam: float) -> "MixedHubCollection":
        """Widths ``c(t) * lam**t``; the volume scales by exactly ``lam``."""
        return MixedHubCollection(self.tuples, {t: (v if t == 0 else v * lam ** float(t)) for t, v in self.c.items()})


@dataclass
class RateResult:
    value: float
    certificate: dict
    method: str
    delta: float = 0.0
    gain: float = 0.0

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "rho": self.value,
            "method": self.method,
            "certificate": {f"{t.numerator}/{t.denominator}": v for t, v in sorted(self.certificate.items()) if t},
        }


# ---------------------------------------------------------------------------
# index sets, volume and gain

def tuples_from_labelings(H: Hypergraph, labelings) -> frozenset:
    """Permutation closure of all nonzero edge tuples of the given labelings."""
    labelings = list(labelings)
    if not labelings:
        raise DomainError("need at least one labeling")
    out = set()
    for f in labelings:
        for e in H.edges:
            t = tuple(f[v] for v in e)
            if sum(t):
                out.update(itertools.permutations(t))
    return frozenset(out)


def volume(M: MixedHubCollection) -> float:
    terms = [math.prod(M.c[x] for x in t) for t in M.tuples]
    return math.fsum(terms)


def _respects(H: Hypergraph, f: Labeling, S) -> bool:
    for e in H.edges:
        t = tuple(f[v] for v in e)
        if sum(t) and t not in S:
            return False
    return True


def p_value(H: Hypergraph, labelings, M: MixedHubCollection) -> float:
    """Gain polynomial: zero labeling contributes 1, the rest ``prod c(f(v))``."""
    terms = []
    for f in labelings:
        if _respects(H, f, M.tuples):
            terms.append(math.prod(M.c.get(x, 0.0) for x in f.values))
    return math.fsum(terms)


class _Problem:
    """Exponent matrices of the volume and gain posynomials over labels."""

    def __init__(self, H: Hypergraph, labelings, allowed=None):
        S = tuples_from_labelings(H, labelings)
        if allowed is not None:
            ok = {Fraction(a) for a in allowed} | {_ZERO}
            S = frozenset(t for t in S if set(t) <= ok)
            labelings = [f for f in labelings if set(f.values) <= ok]
        self.H = H
        self.S = S
        self.labelings = [f for f in labelings if _respects(H, f, S)]
        self.values = sorted({x for t in S for x in t if x})
        ix = {t: i for i, t in enumerate(self.values)}
        tuples = sorted(S)
        self.tuples = tuples
        self.vol_exp = np.zeros((len(tuples), len(self.values)))
        for row, t in enumerate(tuples):
            for x in t:
                if x:
                    self.vol_exp[row, ix[x]] += 1
        gain = [f for f in self.labelings if not f.is_zero]
        self.gain_labelings = gain
        self.gain_exp = np.zeros((len(gain), len(self.values)))
        for row, f in enumerate(gain):
            for x in f.values:
                if x:
                    self.gain_exp[row, ix[x]] += 1
        self.label_weights = np.array([float(t) for t in self.values])

    def monomials(self, exp, c):
        with np.errstate(divide="ignore"):
            logc = np.log(c)
        # 0 ** 0 = 1: absent labels do not zero a monomial
        logs = np.multiply(exp, logc, out=np.zeros_like(exp), where=exp > 0)
        return np.exp(logs.sum(axis=1))

    def vol(self, c) -> float:
        return math.fsum(self.monomials(self.vol_exp, c).tolist())

    def gain(self, c) -> float:
        return 1.0 + math.fsum(self.monomials(self.gain_exp, c).tolist())

    def collection(self, c) -> MixedHubCollection:
        cmap = {t: float(v) for t, v in zip(self.values, c)}
        return MixedHubCollection(self.S, cmap)

    def rescale(self, c, target):
        """Scale ``c(t) -> lam**t c(t)`` so that the gain equals ``target``."""
        c = np.asarray(c, dtype=np.float64)
        if not (c > 0).any() or self.gain(c) <= 1.0:
            return None
        if self.gain(c) == target:
            return c

        def excess(loglam):
            gain = self.gain(c * np.exp(loglam * self.label_weights)) - 1.0
            return math.log(max(gain, 1e-300)) - math.log(target - 1.0)

        lo, hi = -1.0, 1.0
        while excess(lo) > 0:
            lo *= 2.0
        while excess(hi) < 0:
            hi *= 2.0
        loglam = brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        out = c * np.exp(loglam * self.label_weights)
        # nudge up until the constraint holds in floating point
        for _ in range(60):
            if self.gain(out) >= target:
                break
            out = out * np.exp(1e-15 * self.label_weights * 10.0)
        return out


def _active_count(c) -> int:
    return int(np.count_nonzero(c))


def _better(a, b) -> bool:
    """Is candidate ``a = (value, c)`` preferable to ``b``?"""
    if b is None:
        return True
    va, vb = a[0], b[0]
    if va < vb * (1.0 - 1e-12):
        return True
    if va <= vb * (1.0 + 1e-12):
        return _active_count(a[1]) < _active_count(b[1])
    return False


def _scan(prob: _Problem, delta: float):
    """One-parameter families ``c(t) = s**t`` on the labels of one labeling."""
    seen = set()
    best = None
    for f in prob.gain_labelings:
        active = frozenset(x for x in f.values if x)
        if active in seen:
            continue
        seen.add(active)
        mask = np.array([t in active for t in prob.values])
        c = np.where(mask, 1.0, 0.0)
        c = prob.rescale(c, 1.0 + delta)
        if c is None:
            continue
        cand = (prob.vol(c), c)
        if _better(cand, best):
            best = cand
    return best


def _polish(prob: _Problem, delta: float, starts, rng, restarts: int):
    m = len(prob.values)
    target = math.log1p(delta)

    def logsumexp_grad(exp, z, shift):
        logs = exp @ z
        top = max(logs.max(), shift) if len(logs) else shift
        terms = np.exp(logs - top)
        base = math.exp(shift - top)
        total = terms.sum() + base
        return top + math.log(total), (terms @ exp) / total

    def fun(z):
        return logsumexp_grad(prob.vol_exp, z, -np.inf)

    def cons(z):
        val, grad = logsumexp_grad(prob.gain_exp, z, 0.0)
        return val - target, grad

    bounds = [LOG_BOUNDS] * m
    x0s = [np.log(np.maximum(c, math.exp(LOG_BOUNDS[0] + 1.0))) for c in starts]
    for _ in range(restarts):
        x0s.append(rng.uniform(-4.0, 2.0, size=m))
    best = None
    for x0 in x0s:
        x, xfeas, _ = augmented_lagrangian(fun, cons, x0, bounds, outer=8)
        for z in (x, xfeas):
            c = np.exp(z)
            c[z <= LOG_BOUNDS[0] + 1e-9] = 0.0
            for cand_c in _sparsify(prob, c, delta):
                cand = (prob.vol(cand_c), cand_c)
                if _better(cand, best):
                    best = cand
    return best


def _sparsify(prob: _Problem, c, delta):
    """Rescaled ``c`` plus variants with negligible widths switched off."""
    out = []
    full = prob.rescale(c, 1.0 + delta)
    if full is not None:
        out.append(full)
    small = [i for i in range(len(c)) if 0 < c[i] < 1e-6 * max(c.max(), 1e-300)]
    if small:
        trimmed = c.copy()
        trimmed[small] = 0.0
        alt = prob.rescale(trimmed, 1.0 + delta)
        if alt is not None:
            out.append(alt)
    return out


def _optimize(prob: _Problem, delta: float, seed: int, restarts: int) -> RateResult:
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    if not prob.gain_labelings:
        raise NoFeasiblePoint("no nonzero stable labeling is available")
    scan = _scan(prob, delta)
    rng = np.random.default_rng(seed)
    starts = [scan[1]] if scan is not None else []
    polish = _polish(prob, delta, starts, rng, restarts)
    best, method = scan, "single_labeling_scan"
    if polish is not None and (best is None or polish[0] < best[0] * (1.0 - 1e-12)):
        best, method = polish, "optimizer"
    if best is None:
        raise NoFeasiblePoint("no feasible collection found")
    value, c = best
    cert = {_ZERO: 1.0}
    cert.update({t: float(v) for t, v in zip(prob.values, c)})
    return RateResult(value, cert, method, delta, prob.gain(c))


def rho(H: Hypergraph, delta: float, labelings=None, seed: int = 0, restarts: int = 4) -> RateResult:
    """Least volume of a compatible collection with gain at least ``1 + delta``."""
    labelings = enumerate_stable_labelings(H) if labelings is None else labelings
    return _optimize(_Problem(H, labelings), float(delta), seed, restarts)


def rho_restricted(H: Hypergraph, delta: float, allowed, labelings=None, seed: int = 0,
                   restarts: int = 4) -> RateResult:
    """:func:`rho` with every label outside ``allowed`` forced to width 0."""
    allowed = {Fraction(a) for a in allowed}
    if not allowed - {_ZERO}:
        raise NoFeasiblePoint("no labels allowed")
    labelings = enumerate_stable_labelings(H) if labelings is None else labelings
    return _optimize(_Problem(H, labelings, allowed), float(delta), seed, restarts)


def gain_polynomial(H: Hypergraph, labelings=None) -> dict:
    """Gain polynomial as ``{monomial: coefficient}``.

    A monomial is a sorted tuple of ``(label, exponent)`` pairs; the constant
    term has the empty monomial.
    """
    labelings = enumerate_stable_labelings(H) if labelings is None else labelings
    S = tuples_from_labelings(H, labelings)
    poly = {}
    for f in labelings:
        if not _respects(H, f, S):
            continue
        counts = {}
        for x in f.values:
            if x:
                counts[x] = counts.get(x, 0) + 1
        key = tuple(sorted(counts.items()))
        poly[key] = poly.get(key, 0) + 1
    return poly


def volume_polynomial(S) -> dict:
    poly = {}
    for t in S:
        counts = {}
        for x in t:
            if x:
                counts[x] = counts.get(x, 0) + 1
        key = tuple(sorted(counts.items()))
        poly[key] = poly.get(key, 0) + 1
    return poly


# ---------------------------------------------------------------------------
# closed forms

def independence_polynomial(H2: Hypergraph) -> list:
    """Independent-set counts by size in the subgraph on max-degree vertices."""
    if H2.r != 2:
        raise DomainError("independence polynomial needs a 2-graph")
    delta = max_degree(H2)
    core = [v for v in range(H2.k) if H2.degrees[v] == delta]
    adj = {v: set() for v in core}
    for u, w in H2.edges:
        if u in adj and w in adj:
            adj[u].add(w)
            adj[w].add(u)
    counts = [0] * (len(core) + 1)
    for size in range(len(core) + 1):
        for subset in itertools.combinations(core, size):
            if all(w not in adj[u] for u, w in itertools.combinations(subset, 2)):
                counts[size] += 1
    while len(counts) > 1 and counts[-1] == 0:
        counts.pop()
    return counts


def _is_connected(H: Hypergraph) -> bool:
    seen, stack = {0}, [0]
    nbrs = {v: set() for v in range(H.k)}
    for e in H.edges:
        for u in e:
            nbrs[u].update(e)
    while stack:
        for w in nbrs[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == H.k


def closed_form_rho(kind: str, delta: float, *, k: int | None = None, r: int | None = None,
                    graph: Hypergraph | None = None) -> float:
    """Known values of the rate: ``clique`` (needs k, r), ``special3``, ``twograph``."""
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    if kind == "clique":
        if k is None or r is None or not k > r >= 2:
            raise DomainError("clique closed form needs k > r >= 2")
        return min(delta ** (r / k), r * delta / k)
    if kind == "special3":
        return min(math.sqrt(9.0 + 3.0 * delta) - 3.0, math.sqrt(delta))
    if kind == "twograph":
        if graph is None or graph.r != 2:
            raise DomainError("twograph closed form needs a 2-graph")
        if max_degree(graph) < 2 or not _is_connected(graph):
            raise DomainError("twograph closed form needs a connected graph with max degree >= 2")
        coeffs = independence_polynomial(graph)

        def excess(theta):
            return sum(a * theta**j for j, a in enumerate(coeffs)) - (1.0 + delta)

        hi = 1.0
        while excess(hi) < 0:
            hi *= 2.0
        theta = brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        regular = len(set(graph.degrees)) == 1
        return min(2.0 * theta, delta ** (2.0 / graph.k)) if regular else 2.0 * theta
    raise DomainError(f"unknown closed form kind {kind!r}")


# ---------------------------------------------------------------------------
# planting

def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def prefix_widths(H: Hypergraph, M: MixedHubCollection, n: int, p: float) -> dict:
    """Width ``round(c(t) p**(t Delta) n)`` for each active nonzero label."""
    delta = max_degree(H)
    out = {}
    for t in M.active_values():
        out[t] = _round_half_up(M.c[t] * p ** (float(t) * delta) * n)
    return out


def plant(H: Hypergraph, M: MixedHubCollection, n: int, p: float) -> BlockModel:
    """Block model with weight 1 on every edge fitting some tuple's prefixes.

    Classes are the nested prefixes cut at the distinct widths. A class
    multiset gets weight 1 when some ordering of it matches an active tuple
    of ``S`` with each class inside the corresponding prefix.
    """
    widths = prefix_widths(H, M, n, p)
    for t, w in widths.items():
        if w < 1 or w > n:
            raise DegenerateWidth(f"prefix width for label {t} is {w}, outside [1, {n}]")
    cuts = sorted(set(widths.values()) | {n})
    sizes = [b - a for a, b in zip([0] + cuts[:-1], cuts)]
    # class j covers vertices [cuts[j-1], cuts[j]); it lies inside prefix w iff cuts[j] <= w
    prefix = {t: w for t, w in widths.items()}
    prefix[_ZERO] = n
    active = [t for t in M.tuples if all(x in prefix for x in t)]
    table = {}
    for combo in itertools.combinations_with_replacement(range(len(sizes)), H.r):
        for t in active:
            if any(all(cuts[j] <= prefix[x] for j, x in zip(perm, t)) for perm in set(itertools.permutations(combo))):
                table[combo] = 1.0
                break
    return BlockModel(tuple(sizes), H.r, p, table)


def hub_collection(H: Hypergraph, c1: float, labelings=None) -> MixedHubCollection:
    """Only the label 1 active: the plain hub construction."""
    labelings = enumerate_stable_labelings(H) if labelings is None else labelings
    S = tuples_from_labelings(H, labelings)
    c = {t: (c1 if t == 1 else 0.0) for s in S for t in s}
    c[_ZERO] = 1.0
    return MixedHubCollection(S, c)


def collection_from_certificate(H: Hypergraph, certificate: dict, labelings=None) -> MixedHubCollection:
    labelings = enumerate_stable_labelings(H) if labelings is None else labelings
    S = tuples_from_labelings(H, labelings)
    c = {t: 0.0 for s in S for t in s}
    c.update({Fraction(t): v for t, v in certificate.items() if Fraction(t) in c})
    c[_ZERO] = 1.0
    return MixedHubCollection(S, c)
