"""Exact edge percolation on bunkbed graphs: probabilities in exact
rational arithmetic, cut-vertex reductions, and bunkbed inequality
verification."""

from .graphs import (
    BunkbedGraph,
    Graph,
    SplitAtCutVertex,
    all_splits,
    bunkbed,
    connected_in_subset,
    cut_vertices,
    format_graph,
    glue,
    parse_graph,
    split_at,
    two_connected,
)
from .percolation import (
    DEFAULT_ENUMERATION_CAP,
    ConnectivityDistribution,
    ConnectivitySpec,
    EnumerationCapError,
    ProbabilityReport,
    SymmetricWeight,
    Weight,
    atom_probability,
    connection_probability,
    connectivity_distribution,
    connectivity_distributions,
    event_probability,
    sum_over_all_atoms,
)
from .reduction import (
    BunkbedSplit,
    CollapsedSide,
    CrossSideTerms,
    bunkbed_split,
    collapse_side,
    cross_side_probability,
    two_point_probability,
    zero_post_weight,
)
from .checker import (
    BunkbedDelta,
    CheckReport,
    WeightSource,
    bunkbed_delta,
    check_graph,
    enumerate_trees,
    search_candidates,
    verify_gluing_closure,
)

__all__ = [
    "BunkbedDelta",
    "BunkbedGraph",
    "BunkbedSplit",
    "CheckReport",
    "CollapsedSide",
    "ConnectivityDistribution",
    "ConnectivitySpec",
    "CrossSideTerms",
    "DEFAULT_ENUMERATION_CAP",
    "EnumerationCapError",
    "Graph",
    "ProbabilityReport",
    "SplitAtCutVertex",
    "SymmetricWeight",
    "Weight",
    "all_splits",
    "atom_probability",
    "bunkbed",
    "bunkbed_delta",
    "bunkbed_split",
    "check_graph",
    "collapse_side",
    "connected_in_subset",
    "connection_probability",
    "connectivity_distribution",
    "connectivity_distributions",
    "cross_side_probability",
    "cut_vertices",
    "enumerate_trees",
    "event_probability",
    "format_graph",
    "glue",
    "parse_graph",
    "search_candidates",
    "split_at",
    "sum_over_all_atoms",
    "two_connected",
    "two_point_probability",
    "verify_gluing_closure",
    "zero_post_weight",
]
