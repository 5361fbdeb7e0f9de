from .space import (
    DgSpace,
    FeCombination,
    FeFunction,
    LocalValues,
    common_mesh,
    dump_function,
    evaluate_local,
    field_degree,
    inner_product_with_basis,
    integrate_squared,
    l2_norm,
    l2_project_callable,
    quadrature,
    sample,
    transfer,
)
from .traces import EdgeTrace, edge_traces

__all__ = [
    "DgSpace",
    "EdgeTrace",
    "FeCombination",
    "FeFunction",
    "LocalValues",
    "common_mesh",
    "dump_function",
    "edge_traces",
    "evaluate_local",
    "field_degree",
    "inner_product_with_basis",
    "integrate_squared",
    "l2_norm",
    "l2_project_callable",
    "quadrature",
    "sample",
    "transfer",
]
