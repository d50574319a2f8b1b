"""Hypergraphs, weighted hypergraphs and the quantities defined on them.

Weighted hypergraphs store one value per r-subset of ``range(n)`` in
colexicographic order; the dense ``n**r`` view used for contractions is
built on demand and vanishes on every tuple with a repeated vertex.
"""
from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np

from . import kernels
from .errors import BudgetExceeded, DomainError, GraphFormatError, SizeLimitExceeded

DEFAULT_BUDGET = 10**9
AUTOMORPHISM_VERTEX_LIMIT = 12
# element cap for einsum intermediates (the default caps them at the input size)
EINSUM_MEMORY = 2**26
_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def evaluation_budget() -> int:
    """Maximum number of terms a brute-force evaluation may touch."""
    raw = os.environ.get("HYPERRATE_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        return int(float(raw))
    except ValueError:
        raise DomainError(f"HYPERRATE_BUDGET must be a number, got {raw!r}") from None


def check_budget(required: int, budget: int | None = None) -> None:
    budget = evaluation_budget() if budget is None else budget
    if required > budget:
        raise BudgetExceeded(required, budget)


# ---------------------------------------------------------------------------
# colexicographic ranking of r-subsets

def colex_rank(subset) -> int:
    """Rank of a set of distinct vertices among r-subsets in colex order."""
    return sum(math.comb(v, i + 1) for i, v in enumerate(sorted(subset)))


@lru_cache(maxsize=64)
def subsets_colex(n: int, r: int) -> np.ndarray:
    """All r-subsets of ``range(n)`` as rows, sorted colexicographically."""
    combos = sorted(itertools.combinations(range(n), r), key=lambda c: c[::-1])
    out = np.array(combos, dtype=np.int64).reshape(len(combos), r)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=64)
def rank_table(n: int, r: int) -> np.ndarray:
    """Flat ``n**r`` table mapping ordered tuples to subset ranks (-1 on repeats)."""
    table = np.full(n**r, -1, dtype=np.int32)
    subs = subsets_colex(n, r)
    ranks = np.arange(len(subs), dtype=np.int32)
    strides = n ** np.arange(r - 1, -1, -1)
    for perm in itertools.permutations(range(r)):
        table[subs[:, perm] @ strides] = ranks
    table.flags.writeable = False
    return table


# ---------------------------------------------------------------------------
# types

@dataclass(frozen=True)
class Hypergraph:
    """A finite r-uniform hypergraph on vertices ``0..k-1``.

    Edges are stored as sorted tuples in sorted order, so two hypergraphs with
    the same edge set compare equal.
    """

    r: int
    k: int
    edges: tuple
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.r < 2:
            raise GraphFormatError(f"uniformity must be >= 2, got {self.r}")
        if self.k < self.r:
            raise GraphFormatError(f"need at least r={self.r} vertices, got {self.k}")
        canon = []
        for e in self.edges:
            e = tuple(sorted(int(v) for v in e))
            if len(e) != self.r or len(set(e)) != self.r:
                raise GraphFormatError(f"edge {e} is not a set of {self.r} distinct vertices")
            if e[0] < 0 or e[-1] >= self.k:
                raise GraphFormatError(f"edge {e} has a vertex outside 0..{self.k - 1}")
            canon.append(e)
        canon.sort()
        if len(set(canon)) != len(canon):
            raise GraphFormatError("duplicate edges")
        object.__setattr__(self, "edges", tuple(canon))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> tuple:
        deg = [0] * self.k
        for e in self.edges:
            for v in e:
                deg[v] += 1
        return tuple(deg)

    @cached_property
    def edge_array(self) -> np.ndarray:
        arr = np.array(self.edges, dtype=np.int32).reshape(len(self.edges), self.r)
        arr.flags.writeable = False
        return arr

    def is_complete(self) -> bool:
        return self.num_edges == math.comb(self.k, self.r)

    def to_json(self) -> dict:
        return {"r": self.r, "vertices": self.k, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, data: dict, name: str = "") -> "Hypergraph":
        try:
            return cls(int(data["r"]), int(data["vertices"]), tuple(map(tuple, data["edges"])), name=name)
        except (KeyError, TypeError) as exc:
            raise GraphFormatError(f"malformed hypergraph JSON: {exc}") from None

    def relabel(self, perm) -> "Hypergraph":
        """Image of this hypergraph under the vertex map ``v -> perm[v]``."""
        return Hypergraph(self.r, self.k, tuple(tuple(perm[v] for v in e) for e in self.edges), self.name)


class WeightedHypergraph:
    """Symmetric edge weights in [0, 1] on the r-subsets of ``range(n)``."""

    def __init__(self, n: int, r: int, values, base_p: float | None = None):
        values = np.array(values, dtype=np.float64).reshape(-1)
        if values.shape[0] != math.comb(n, r):
            raise DomainError(f"expected {math.comb(n, r)} weights, got {values.shape[0]}")
        if values.size and (values.min() < 0.0 or values.max() > 1.0 or not np.isfinite(values).all()):
            raise DomainError("weights must lie in [0, 1]")
        if base_p is not None and not 0.0 < base_p < 1.0:
            raise DomainError(f"base_p must lie in (0, 1), got {base_p}")
        values.flags.writeable = False
        self.n = n
        self.r = r
        self.values = values
        self.base_p = base_p

    @classmethod
    def constant(cls, n: int, r: int, q: float, base_p: float | None = None):
        return cls(n, r, np.full(math.comb(n, r), q), base_p)

    @classmethod
    def from_dense(cls, dense: np.ndarray, base_p: float | None = None):
        n, r = dense.shape[0], dense.ndim
        subs = subsets_colex(n, r)
        return cls(n, r, dense[tuple(subs.T)], base_p)

    @cached_property
    def dense(self) -> np.ndarray:
        """The ``n**r`` array view; zero wherever an index repeats."""
        out = np.zeros(self.n**self.r)
        table = rank_table(self.n, self.r)
        mask = table >= 0
        out[mask] = self.values[table[mask]]
        out = out.reshape((self.n,) * self.r)
        out.flags.writeable = False
        return out

    def evaluate(self, *idx) -> float:
        if len(set(idx)) < len(idx):
            return 0.0
        return float(self.values[colex_rank(idx)])

    def relabel(self, perm) -> "WeightedHypergraph":
        subs = subsets_colex(self.n, self.r)
        image = np.asarray(perm)[subs]
        image.sort(axis=1)
        ranks = [colex_rank(row) for row in image]
        vals = np.empty_like(self.values)
        vals[ranks] = self.values
        return WeightedHypergraph(self.n, self.r, vals, self.base_p)

    def with_values(self, values) -> "WeightedHypergraph":
        return WeightedHypergraph(self.n, self.r, values, self.base_p)


@dataclass(frozen=True)
class BlockModel:
    """Weights constant on products of vertex classes.

    ``sizes`` are integer class sizes in vertex order (class 0 holds the
    first ``sizes[0]`` vertices). ``table`` maps sorted tuples of class
    indices to a weight; multisets missing from the table get ``p``.
    """

    sizes: tuple
    r: int
    p: float
    table: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or min(sizes) <= 0:
            raise DomainError(f"class sizes must be positive, got {sizes}")
        object.__setattr__(self, "sizes", sizes)
        canon = {}
        for key, w in self.table.items():
            skey = tuple(sorted(key))
            if len(skey) != self.r or not all(0 <= j < len(sizes) for j in skey):
                raise DomainError(f"bad class multiset {key}")
            if not 0.0 <= w <= 1.0:
                raise DomainError(f"weight {w} outside [0, 1]")
            if skey in canon and canon[skey] != w:
                raise DomainError(f"asymmetric weight table at {skey}")
            canon[skey] = float(w)
        object.__setattr__(self, "table", canon)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def num_classes(self) -> int:
        return len(self.sizes)

    def weight(self, classes) -> float:
        return self.table.get(tuple(sorted(classes)), self.p)

    def class_of(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.sizes)), self.sizes)

    def to_weighted(self) -> WeightedHypergraph:
        subs = subsets_colex(self.n, self.r)
        cls = self.class_of()[subs]
        cls.sort(axis=1)
        vals = np.array([self.weight(tuple(row)) for row in cls]) if len(cls) else np.zeros(0)
        return WeightedHypergraph(self.n, self.r, vals, self.p)


# ---------------------------------------------------------------------------
# operations on hypergraphs

def max_degree(H: Hypergraph) -> int:
    return max(H.degrees) if H.edges else 0


def automorphism_count(H: Hypergraph, limit: int = AUTOMORPHISM_VERTEX_LIMIT) -> int:
    """Number of vertex permutations that map the edge set onto itself."""
    if H.k > limit:
        raise SizeLimitExceeded(f"automorphism search limited to {limit} vertices, H has {H.k}")
    adj = np.zeros(H.k**H.r, dtype=np.uint8)
    table = rank_table(H.k, H.r)
    present = np.zeros(math.comb(H.k, H.r), dtype=np.uint8)
    present[[colex_rank(e) for e in H.edges]] = 1
    mask = table >= 0
    adj[mask] = present[table[mask]]
    # injective edge-preserving self-maps of a finite hypergraph are bijective
    return kernels.injective_count(H.edge_array, H.k, adj, H.k, H.r)


@lru_cache(maxsize=256)
def _einsum_plan(H: Hypergraph, n: int):
    if H.k > len(_LETTERS):
        raise SizeLimitExceeded(f"contractions support at most {len(_LETTERS)} vertices")
    terms = ["".join(_LETTERS[v] for v in e) for e in H.edges]
    isolated = sum(1 for d in H.degrees if d == 0)
    expr = ",".join(terms) + "->"
    dummy = [np.empty((n,) * H.r)] * len(terms)
    path = np.einsum_path(expr, *dummy, optimize=("greedy", EINSUM_MEMORY))[0] if len(terms) > 1 else False
    return expr, path, isolated


def density(H: Hypergraph, W: WeightedHypergraph, budget: int | None = None) -> float:
    """Homomorphism density: average over all ``n**k`` vertex tuples.

    Tuples that repeat a vertex inside some edge contribute zero; two
    H-vertices that share no edge may coincide.
    """
    if W.r != H.r:
        raise DomainError(f"uniformity mismatch: H is {H.r}-uniform, W is {W.r}-uniform")
    check_budget(W.n**H.k, budget)
    return density_from_dense(H, W.dense)


def density_from_dense(H: Hypergraph, dense: np.ndarray) -> float:
    """:func:`density` for an explicit ``n**r`` array (no validation)."""
    n, k = dense.shape[0], H.k
    if not H.edges:
        return 1.0
    expr, path, isolated = _einsum_plan(H, n)
    total = np.einsum(expr, *([dense] * H.num_edges), optimize=path)
    return float(total) * float(n) ** isolated / float(n) ** k


@lru_cache(maxsize=128)
def _partition_counts(H: Hypergraph):
    """For each vertex subset (bitmask): counts of partitions into j
    pairwise non-adjacent blocks, adjacency meaning "share an edge"."""
    k = H.k
    nbr = [0] * k
    for e in H.edges:
        for u in e:
            for w in e:
                if u != w:
                    nbr[u] |= 1 << w
    independent = [True] * (1 << k)
    for mask in range(1, 1 << k):
        low = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << low)
        independent[mask] = independent[rest] and not (nbr[low] & rest)

    @lru_cache(maxsize=None)
    def counts(mask):
        if mask == 0:
            return (1,)
        low = mask & -mask
        rest = mask & ~low
        acc = {}
        sub = rest
        while True:
            block = sub | low
            if independent[block]:
                for j, c in enumerate(counts(mask & ~block)):
                    if c:
                        acc[j + 1] = acc.get(j + 1, 0) + c
            if sub == 0:
                break
            sub = (sub - 1) & rest
        top = max(acc)
        return tuple(acc.get(j, 0) for j in range(top + 1))

    return counts


def _proper_placements(counts, mask: int, size: int) -> int:
    """Tuples placing the vertices of ``mask`` into ``size`` slots with
    vertices sharing an edge kept distinct (a chromatic polynomial value)."""
    total = 0
    for j, c in enumerate(counts(mask)):
        if c:
            total += c * math.perm(size, j)
    return total


def density_blockwise(H: Hypergraph, B: BlockModel, max_classes: int = 8) -> float:
    """Exact density of a block model without materialising the tensor."""
    if B.num_classes > max_classes:
        raise DomainError(f"at most {max_classes} classes supported, got {B.num_classes}")
    k, m = H.k, B.num_classes
    check_budget(m**k)
    counts = _partition_counts(H)
    n = B.n
    terms = []
    for assign in itertools.product(range(m), repeat=k):
        w = 1.0
        for e in H.edges:
            w *= B.weight(tuple(assign[v] for v in e))
            if w == 0.0:
                break
        if w == 0.0:
            continue
        masks = [0] * m
        for v, j in enumerate(assign):
            masks[j] |= 1 << v
        ways = 1
        for j in range(m):
            if masks[j]:
                ways *= _proper_placements(counts, masks[j], B.sizes[j])
                if ways == 0:
                    break
        if ways:
            terms.append(w * (ways / n**k))
    return math.fsum(terms)


def _entropy_array(x: np.ndarray, p: float) -> np.ndarray:
    # log1p keeps precision for x near p; plain logs avoid log1p(-1) far from it
    x = np.asarray(x, dtype=np.float64)
    q = 1.0 - p
    near = np.abs(x - p) < 0.5 * min(p, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        la = np.where(near, np.log1p((x - p) / p), np.log(x) - math.log(p))
        lb = np.where(near, np.log1p((p - x) / q), np.log1p(-x) - math.log1p(-p))
        a = np.where(x > 0.0, x * la, 0.0)
        b = np.where(x < 1.0, (1.0 - x) * lb, 0.0)
    return a + b


def entropy_scalar(x: float, p: float) -> float:
    """Relative entropy ``I_p(x)`` of Bernoulli(x) with respect to Bernoulli(p)."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    return float(_entropy_array(np.array(x), p))


def relative_entropy(W, p: float | None = None) -> float:
    """Total relative entropy, one term per r-subset.

    Accepts a :class:`WeightedHypergraph` (uses ``base_p`` unless ``p`` is
    given) or a :class:`BlockModel`, which is summed class-multiset-wise.
    """
    if isinstance(W, BlockModel):
        p = W.p if p is None else p
        terms = []
        for combo in itertools.combinations_with_replacement(range(W.num_classes), W.r):
            count = 1
            for j in set(combo):
                count *= math.comb(W.sizes[j], combo.count(j))
            if count:
                terms.append(count * entropy_scalar(W.weight(combo), p))
        return math.fsum(terms)
    p = W.base_p if p is None else p
    if p is None:
        raise DomainError("relative entropy needs a reference probability")
    return math.fsum(_entropy_array(W.values, p).tolist())


def expected_count(H: Hypergraph, n: int, p):
    """Expected number of unlabeled copies of H in the random r-graph.

    Copies are injective placements divided by ``|Aut(H)|``. Exact when
    ``p`` is a :class:`~fractions.Fraction`.
    """
    if n < H.k:
        raise DomainError(f"n={n} is smaller than |V(H)|={H.k}")
    copies = Fraction(math.perm(n, H.k), automorphism_count(H))
    if isinstance(p, Fraction):
        return copies * p**H.num_edges
    return float(copies) * float(p) ** H.num_edges


# ---------------------------------------------------------------------------
# named instances

def clique(k: int, r: int) -> Hypergraph:
    return Hypergraph(r, k, tuple(itertools.combinations(range(k), r)), name=f"K_{k}^({r})")


def cycle(k: int) -> Hypergraph:
    return Hypergraph(2, k, tuple((i, (i + 1) % k) for i in range(k)), name=f"C_{k}")


def path(k: int) -> Hypergraph:
    return Hypergraph(2, k, tuple((i, i + 1) for i in range(k - 1)), name=f"P_{k}")


def single_edge(r: int) -> Hypergraph:
    return Hypergraph(r, r, (tuple(range(r)),), name=f"edge^({r})")


def special3() -> Hypergraph:
    """The 6-vertex 3-graph with 4 edges, any two meeting in one vertex."""
    return Hypergraph(3, 6, ((0, 2, 5), (1, 3, 5), (0, 1, 4), (2, 3, 4)), name="special3")


COUNTEREXAMPLE_LABELS = (
    "A", "B", "C", "D", "E", "F", "A'", "B'", "C'", "D'", "E'", "F'", "G",
    "x1", "x2", "x3", "x4", "x5", "x6",
)


def counterexample() -> Hypergraph:
    """13 degree-3 vertices plus six degree-1 vertices completing the pairs."""
    ix = {name: i for i, name in enumerate(COUNTEREXAMPLE_LABELS)}
    triples = [
        ("A", "B", "x1"), ("B", "C", "x2"), ("A", "C", "x3"),
        ("A", "D", "F"), ("B", "D", "E"), ("C", "E", "F"),
        ("A'", "B'", "x4"), ("B'", "C'", "x5"), ("A'", "C'", "x6"),
        ("A'", "D'", "F'"), ("B'", "D'", "E'"), ("C'", "E'", "F'"),
        ("D", "D'", "G"), ("E", "E'", "G"), ("F", "F'", "G"),
    ]
    return Hypergraph(3, 19, tuple(tuple(ix[v] for v in t) for t in triples), name="counterexample")


_DATA = Path(__file__).with_name("data")


def bundled_names() -> list:
    return sorted(p.stem for p in _DATA.glob("*.json"))


def load_hypergraph(source) -> Hypergraph:
    """Load from a JSON path, falling back to a bundled instance name."""
    path_ = Path(source)
    if not path_.exists():
        stem = path_.name[:-5] if path_.name.endswith(".json") else path_.name
        bundled = _DATA / f"{stem}.json"
        if path_.parent != Path(".") or not bundled.exists():
            raise FileNotFoundError(str(source))
        path_ = bundled
    try:
        data = json.loads(path_.read_text())
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"{path_}: invalid JSON ({exc})") from None
    return Hypergraph.from_json(data, name=path_.stem)
