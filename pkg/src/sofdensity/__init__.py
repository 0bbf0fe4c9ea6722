"""Sum-over-Forests (SoF) density index on weighted directed graphs."""

from .baselines import NodeIndexVector, clustering_coefficient, degree, strength
from .datasets import (
    AffinityGraph,
    Component,
    PointCloud,
    epsilon_graph,
    generate_communities,
    knn_graph,
    pairwise_affinity,
    to_cost_graph,
)
from .engine import (
    EdgeExpectation,
    SofResult,
    edge_expectations,
    free_energy,
    log_partition_function,
    sof_density,
    solve_z,
)
from .estimators import EpsilonGraph, KNNGraph, SofDensity
from .evaluation import EvalReport, export_report, spearman, theta_grid_search, true_density
from .exceptions import (
    DegenerateInputError,
    IllConditionedWarning,
    InconsistencyError,
    InvalidGraphError,
    NumericalError,
    OracleCapError,
    SofError,
)
from .graph import CostGraph, ValidationReport, laplacian, read_edge_list, validate, weight_matrix, write_edge_list
from .oracle import enumerate_forests, oracle_density, oracle_distribution, oracle_edge_expectation

__version__ = "0.1.0"

__all__ = [
    "AffinityGraph",
    "Component",
    "CostGraph",
    "DegenerateInputError",
    "EdgeExpectation",
    "EpsilonGraph",
    "EvalReport",
    "IllConditionedWarning",
    "InconsistencyError",
    "InvalidGraphError",
    "KNNGraph",
    "NodeIndexVector",
    "NumericalError",
    "OracleCapError",
    "PointCloud",
    "SofDensity",
    "SofError",
    "SofResult",
    "ValidationReport",
    "clustering_coefficient",
    "degree",
    "edge_expectations",
    "enumerate_forests",
    "epsilon_graph",
    "export_report",
    "free_energy",
    "generate_communities",
    "knn_graph",
    "laplacian",
    "log_partition_function",
    "oracle_density",
    "oracle_distribution",
    "oracle_edge_expectation",
    "pairwise_affinity",
    "read_edge_list",
    "sof_density",
    "solve_z",
    "spearman",
    "strength",
    "theta_grid_search",
    "to_cost_graph",
    "true_density",
    "validate",
    "weight_matrix",
    "write_edge_list",
]
