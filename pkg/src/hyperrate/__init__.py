"""Upper-tail rates for subgraph counts in sparse random hypergraphs.

Submodules: :mod:`hypercore` (hypergraphs, densities, entropy),
:mod:`labelings` (stable labelings), :mod:`hubplan` (mixed-hub rate and
planting), :mod:`varsolve` (numerical variational problem),
:mod:`simulate` (exact and Monte Carlo tails), :mod:`analysis` (cut norm,
Gaussian width, reduced programs) and :mod:`cli`.
"""
from .errors import (
    BudgetExceeded,
    DegenerateWidth,
    DomainError,
    GraphFormatError,
    HyperrateError,
    NoFeasiblePoint,
    SizeLimitExceeded,
)
from .hubplan import MixedHubCollection, RateResult, closed_form_rho, plant, rho, rho_restricted
from .hypercore import (
    BlockModel,
    Hypergraph,
    WeightedHypergraph,
    density,
    density_blockwise,
    load_hypergraph,
    relative_entropy,
)
from .kernels import BACKEND
from .labelings import Labeling, enumerate_stable_labelings, unique_full_labeling_check

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BlockModel",
    "BudgetExceeded",
    "DegenerateWidth",
    "DomainError",
    "GraphFormatError",
    "Hypergraph",
    "HyperrateError",
    "Labeling",
    "MixedHubCollection",
    "NoFeasiblePoint",
    "RateResult",
    "SizeLimitExceeded",
    "WeightedHypergraph",
    "closed_form_rho",
    "density",
    "density_blockwise",
    "enumerate_stable_labelings",
    "load_hypergraph",
    "plant",
    "relative_entropy",
    "rho",
    "rho_restricted",
    "unique_full_labeling_check",
]
