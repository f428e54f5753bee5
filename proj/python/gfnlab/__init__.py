"""Graph classification with GCN, GFN and GLN models (C++ core)."""

from ._core import (
    ContractViolation,
    Dataset,
    Graph,
    ParseError,
    StructuralError,
    ValidationError,
    augment,
    collapse_linear_gcn,
    degree_one_hot,
    generate_dense_dataset,
    generate_synthetic_dataset,
    node_degrees,
    normalized_adjacency,
    parameter_count,
    parse_tu_dataset,
    run_cv,
    set_warnings_enabled,
    spmm,
    stratified_kfold,
    summary_line,
)

__all__ = [
    "ContractViolation",
    "Dataset",
    "Graph",
    "ParseError",
    "StructuralError",
    "ValidationError",
    "augment",
    "collapse_linear_gcn",
    "degree_one_hot",
    "generate_dense_dataset",
    "generate_synthetic_dataset",
    "node_degrees",
    "normalized_adjacency",
    "parameter_count",
    "parse_tu_dataset",
    "run_cv",
    "set_warnings_enabled",
    "spmm",
    "stratified_kfold",
    "summary_line",
]
