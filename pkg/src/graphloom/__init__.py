"""graphloom: model and reshape multivariate networks from tabular data.

Two layers do the work: a lazily evaluated table network (static and
derived tables plus key links) underneath an interpreted network model
(classes read as generic items, nodes, or edges). Wrangling operations
are transactions over both layers and every applied operation is
recorded for deterministic replay.
"""

from graphloom.errors import GraphLoomError
from graphloom.expr import ExprSpec, PredicateSpec
from graphloom.model import Interpretation, ItemRef
from graphloom.ops import Engine, OpRecord, PathSpec
from graphloom.sampler import NetworkSample, SampleSpec

__all__ = [
    "Engine",
    "ExprSpec",
    "GraphLoomError",
    "Interpretation",
    "ItemRef",
    "NetworkSample",
    "OpRecord",
    "PathSpec",
    "PredicateSpec",
    "SampleSpec",
]

__version__ = "0.1.0"
