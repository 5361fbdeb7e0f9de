import logging

import numpy as np

from mesh import Mesh, coarsen

logger = logging.getLogger(__name__)


def dorfler_mark(indicators, xi_refine: float) -> np.ndarray:
    """Dörfler marking: positions of the largest indicators, in descending order,
    marked while the sum before them is still below xi_refine * total.

    Ties keep ascending position order. Returns sorted positions.
    """
    values = np.asarray(indicators, dtype=float)
    if not 0.0 < xi_refine <= 1.0:
        raise ValueError(f"xi_refine must lie in (0, 1], got {xi_refine}")
    if values.size and values.min() < 0.0:
        raise ValueError("Marking indicators must be nonnegative")
    total = float(values.sum())
    if total <= 0.0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(-values, kind="stable")
    before = np.cumsum(values[order]) - values[order]
    count = int(np.count_nonzero(before < xi_refine * total))
    return np.sort(order[:count])


def space_coarsening(mesh: Mesh, indicators, tol_coarse: float) -> Mesh:
    """Coarsen leaves whose indicator is below tol_coarse times the mean indicator"""
    values = np.asarray(indicators, dtype=float)
    if values.shape[0] != mesh.n_elements:
        raise ValueError(f"Got {values.shape[0]} indicators for {mesh.n_elements} elements")
    if tol_coarse <= 0.0:
        return mesh
    threshold = tol_coarse * values.sum() / mesh.n_elements
    marked = mesh.leaves[values < threshold]
    coarse = coarsen(mesh, marked)
    logger.debug(f"[adapt] coarsening marked {marked.size} elements, {mesh.n_elements} -> {coarse.n_elements}")
    return coarse
