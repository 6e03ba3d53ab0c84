"""Chemical-graph feature vectors, Lasso property prediction and
MILP-based inverse design under topological specifications."""

from .decompose import decompose
from .descriptors import build_space, featurize, normalize
from .graph import ChemicalGraph, build_graph, graph_from_json, graph_to_json, rank
from .milp.build import build_milp, polish_solution
from .milp.decode import decode
from .milp.solve import ExternalBackend, default_external_backend, solve
from .regression import cross_validate, lasso_fit, predict, r_squared
from .sdf import parse_sdf
from .topospec import check_graph_satisfies, parse_spec, spec_from_graph

__version__ = "0.1.0"

__all__ = [
    "ChemicalGraph",
    "ExternalBackend",
    "build_graph",
    "build_milp",
    "build_space",
    "check_graph_satisfies",
    "cross_validate",
    "decode",
    "decompose",
    "default_external_backend",
    "featurize",
    "graph_from_json",
    "graph_to_json",
    "lasso_fit",
    "normalize",
    "parse_sdf",
    "parse_spec",
    "polish_solution",
    "predict",
    "r_squared",
    "rank",
    "solve",
    "spec_from_graph",
    "__version__",
]
