"""Hierarchical triangular meshes of the unit square."""
from .forest import BisectionForest
from .triangulation import (
    Mesh,
    bisect,
    coarsen,
    dump_mesh,
    edge_size,
    element_size,
    face_weight,
    finest_common_coarsening,
    host_positions,
    is_conforming,
    overlay,
    quasi_uniformity_ratio,
    unit_square_mesh,
)

__all__ = [
    "BisectionForest",
    "Mesh",
    "bisect",
    "coarsen",
    "dump_mesh",
    "edge_size",
    "element_size",
    "face_weight",
    "finest_common_coarsening",
    "host_positions",
    "is_conforming",
    "overlay",
    "quasi_uniformity_ratio",
    "unit_square_mesh",
]
