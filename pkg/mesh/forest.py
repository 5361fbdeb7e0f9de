"""
Bisection forest shared by every mesh of a run.

Elements are stored append-only as vertex triples ``(v0, v1, v2)`` in
counterclockwise order, where ``v0`` is the newest vertex and ``(v1, v2)`` is
the refinement edge. Bisecting an element is memoized, so two meshes that
refine the same element always see the same children and the same midpoint.
"""
import logging
import threading
import uuid
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from shared.errors import DegenerateElementError

logger = logging.getLogger(__name__)

MACRO_KINDS = ("criss-cross", "diagonal")


def _signed_area(a, b, c) -> float:
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))


def _macro(kind: str):
    if kind == "criss-cross":
        # centre first, so the square's sides are the refinement edges
        vertices = [(0.5, 0.5), (0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        elements = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 1)]
    elif kind == "diagonal":
        vertices = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        elements = [(0, 1, 3), (2, 3, 1)]
    else:
        raise ValueError(f"Unknown macro mesh '{kind}', expected one of {MACRO_KINDS}")
    return vertices, elements


class BisectionForest:
    """Newest-vertex bisection trees rooted at a macro triangulation of the unit square"""

    def __init__(self, macro: str = "criss-cross"):
        self.tag = uuid.uuid4().hex[:8]
        self.macro = macro
        self._lock = threading.Lock()
        vertices, elements = _macro(macro)
        self._vertices: List[Tuple[float, float]] = list(vertices)
        self._elements: List[Tuple[int, int, int]] = []
        self._parent: List[int] = []
        self._children: List[Optional[Tuple[int, int]]] = []
        self._level: List[int] = []
        self._midpoints: Dict[Tuple[int, int], int] = {}
        for element in elements:
            self._append(element, parent=-1, level=0)
        self.n_roots = len(elements)
        logger.debug(f"[mesh] forest {self.tag} created from {macro} macro mesh")

    def _append(self, element: Tuple[int, int, int], parent: int, level: int) -> int:
        a, b, c = (self._vertices[v] for v in element)
        if _signed_area(a, b, c) <= 0.0:
            raise DegenerateElementError(f"Element {element} has non-positive signed area")
        self._elements.append(tuple(element))
        self._parent.append(parent)
        self._children.append(None)
        self._level.append(level)
        return len(self._elements) - 1

    @property
    def n_elements(self) -> int:
        return len(self._elements)

    @property
    def n_vertices(self) -> int:
        return len(self._vertices)

    @property
    def roots(self) -> np.ndarray:
        return np.arange(self.n_roots)

    def element(self, k: int) -> Tuple[int, int, int]:
        return self._elements[k]

    def parent(self, k: int) -> int:
        return self._parent[k]

    def children(self, k: int) -> Optional[Tuple[int, int]]:
        return self._children[k]

    def level(self, k: int) -> int:
        return self._level[k]

    def refinement_edge(self, k: int) -> Tuple[int, int]:
        _, v1, v2 = self._elements[k]
        return (v1, v2) if v1 < v2 else (v2, v1)

    def midpoint(self, v1: int, v2: int) -> int:
        key = (v1, v2) if v1 < v2 else (v2, v1)
        vertex = self._midpoints.get(key)
        if vertex is None:
            (x1, y1), (x2, y2) = self._vertices[v1], self._vertices[v2]
            self._vertices.append((0.5 * (x1 + x2), 0.5 * (y1 + y2)))
            vertex = len(self._vertices) - 1
            self._midpoints[key] = vertex
        return vertex

    def bisect_element(self, k: int) -> Tuple[int, int]:
        """Children of ``k``, created on first request"""
        with self._lock:
            children = self._children[k]
            if children is not None:
                return children
            v0, v1, v2 = self._elements[k]
            m = self.midpoint(v1, v2)
            level = self._level[k] + 1
            first = self._append((m, v0, v1), parent=k, level=level)
            second = self._append((m, v2, v0), parent=k, level=level)
            self._children[k] = (first, second)
            return first, second

    def coordinates(self) -> np.ndarray:
        return np.array(self._vertices, dtype=float)

    def element_array(self, ids: Sequence[int]) -> np.ndarray:
        return np.array([self._elements[k] for k in ids], dtype=np.int64).reshape(-1, 3)

    def parent_array(self) -> np.ndarray:
        return np.array(self._parent, dtype=np.int64)

    def level_array(self) -> np.ndarray:
        return np.array(self._level, dtype=np.int64)

    def tree_mask(self, leaves: np.ndarray) -> np.ndarray:
        """Boolean mask over forest nodes: the leaves and all their ancestors"""
        parents = self.parent_array()
        mask = np.zeros(parents.shape[0], dtype=bool)
        current = np.unique(np.asarray(leaves, dtype=np.int64))
        while current.size:
            current = current[~mask[current]]
            mask[current] = True
            current = parents[current]
            current = np.unique(current[current >= 0])
        return mask
