"""
Immutable mesh snapshots over a :class:`BisectionForest`.

A :class:`Mesh` is a sorted array of leaf ids into the forest. Refinement,
coarsening, finest common coarsening and overlay all return new snapshots
over the same forest; nothing is ever removed from the forest itself.
"""
import logging
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Set, Tuple

import numpy as np

from shared.errors import DegenerateElementError, IncompatibleMeshError
from .forest import BisectionForest

logger = logging.getLogger(__name__)

MAX_UNIFORM_LEVEL = 24


def _edge_key(a: int, b: int) -> Tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _local_edges(element: Tuple[int, int, int]) -> List[Tuple[int, int]]:
    v0, v1, v2 = element
    return [_edge_key(v1, v2), _edge_key(v2, v0), _edge_key(v0, v1)]


class Mesh:
    """Conforming leaf set of a bisection forest.

    Per-element arrays (``elements``, ``areas``, ``h``...) are indexed by
    position in ``leaves``; element ids in the public operations are forest
    ids. Edge ``e`` joins ``edge_elements[e, 0]`` (the + side, lower position)
    and ``edge_elements[e, 1]`` (the - side, ``-1`` on the boundary).
    """

    def __init__(self, forest: BisectionForest, leaves: Iterable[int]):
        leaves = np.unique(np.fromiter(leaves, dtype=np.int64))
        if leaves.size == 0:
            raise ValueError("Mesh needs at least one element")
        self.forest = forest
        self.leaves = leaves
        self.leaves.setflags(write=False)
        # vertices are append-only, so a snapshot of the current table is enough
        self.vertices = forest.coordinates()

    @property
    def tag(self) -> str:
        return self.forest.tag

    @property
    def n_elements(self) -> int:
        return int(self.leaves.shape[0])

    def __len__(self) -> int:
        return self.n_elements

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mesh):
            return NotImplemented
        return self.forest is other.forest and np.array_equal(self.leaves, other.leaves)

    def __hash__(self) -> int:
        return hash((self.forest.tag, self.leaves.tobytes()))

    def __repr__(self) -> str:
        return f"Mesh(tag={self.tag}, elements={self.n_elements})"

    def positions(self, element_ids: Iterable[int]) -> np.ndarray:
        """Positions in ``leaves`` of the given forest ids"""
        ids = np.asarray(list(element_ids), dtype=np.int64)
        pos = np.searchsorted(self.leaves, ids)
        pos = np.minimum(pos, self.n_elements - 1)
        missing = ids[self.leaves[pos] != ids]
        if missing.size:
            raise ValueError(f"Elements {missing.tolist()} are not leaves of {self!r}")
        return pos

    def contains(self, element_id: int) -> bool:
        pos = np.searchsorted(self.leaves, element_id)
        return bool(pos < self.n_elements and self.leaves[pos] == element_id)

    # geometry
    @cached_property
    def elements(self) -> np.ndarray:
        return self.forest.element_array(self.leaves)

    @cached_property
    def coords(self) -> np.ndarray:
        """Vertex coordinates per element, shape (n, 3, 2)"""
        return self.vertices[self.elements]

    @cached_property
    def areas(self) -> np.ndarray:
        c = self.coords
        e1, e2 = c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]
        areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        if np.any(areas <= 0.0):
            bad = self.leaves[areas <= 0.0]
            raise DegenerateElementError(f"Degenerate elements {bad.tolist()} in {self!r}")
        return areas

    @cached_property
    def h(self) -> np.ndarray:
        """Element sizes h_K = sqrt(|K|)"""
        return np.sqrt(self.areas)

    @cached_property
    def centers(self) -> np.ndarray:
        return self.coords.mean(axis=1)

    @cached_property
    def levels(self) -> np.ndarray:
        return self.forest.level_array()[self.leaves]

    def map_points(self, reference_points: np.ndarray) -> np.ndarray:
        """Physical images of reference-triangle points, shape (n, nq, 2)"""
        xi, eta = reference_points[:, 0], reference_points[:, 1]
        bary = np.stack([1.0 - xi - eta, xi, eta], axis=1)
        return np.einsum("qj,kjd->kqd", bary, self.coords)

    # edges
    @cached_property
    def _edge_data(self):
        el = self.elements
        local = np.stack([el[:, [1, 2]], el[:, [2, 0]], el[:, [0, 1]]], axis=1).reshape(-1, 2)
        pairs = np.sort(local, axis=1)
        edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        counts = np.bincount(inverse, minlength=edges.shape[0])
        if counts.max() > 2:
            raise ValueError(f"Edge shared by more than two elements in {self!r}")
        order = np.argsort(inverse, kind="stable")
        starts = np.cumsum(counts) - counts
        plus = order[starts] // 3
        second = order[np.minimum(starts + 1, order.shape[0] - 1)] // 3
        minus = np.where(counts == 2, second, -1)
        return edges, np.stack([plus, minus], axis=1), inverse.reshape(-1, 3)

    @property
    def edges(self) -> np.ndarray:
        """Vertex pairs (sorted) of all leaf edges, shape (ne, 2)"""
        return self._edge_data[0]

    @property
    def edge_elements(self) -> np.ndarray:
        return self._edge_data[1]

    @property
    def element_edges(self) -> np.ndarray:
        """Edge index of local edge j (opposite vertex j), shape (n, 3)"""
        return self._edge_data[2]

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        return self.edge_elements[:, 1] < 0

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        a, b = self.vertices[self.edges[:, 0]], self.vertices[self.edges[:, 1]]
        return np.linalg.norm(b - a, axis=1)

    @cached_property
    def edge_normals(self) -> np.ndarray:
        """Unit normals pointing out of the + element"""
        a, b = self.vertices[self.edges[:, 0]], self.vertices[self.edges[:, 1]]
        tangent = b - a
        normals = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1) / self.edge_lengths[:, None]
        outward = 0.5 * (a + b) - self.centers[self.edge_elements[:, 0]]
        flip = np.einsum("ed,ed->e", normals, outward) < 0.0
        normals[flip] *= -1.0
        return normals

    @cached_property
    def face_weights(self) -> np.ndarray:
        """Edge weight h: mean of the adjacent h_K inside, h_K on the boundary"""
        plus, minus = self.edge_elements[:, 0], self.edge_elements[:, 1]
        h_plus = self.h[plus]
        h_minus = np.where(minus >= 0, self.h[np.maximum(minus, 0)], h_plus)
        return 0.5 * (h_plus + h_minus)

    def edge_points(self, reference_points: np.ndarray) -> np.ndarray:
        """Points along each edge from its lower to its higher vertex id, shape (ne, nq, 2)"""
        a, b = self.vertices[self.edges[:, 0]], self.vertices[self.edges[:, 1]]
        s = np.asarray(reference_points)[None, :, None]
        return a[:, None, :] + s * (b - a)[:, None, :]


def element_size(mesh: Mesh, element: int) -> float:
    """h_K of a leaf given by forest id"""
    return float(mesh.h[mesh.positions([element])[0]])


def edge_size(mesh: Mesh, edge: int) -> float:
    """h_e = |e| of edge index ``edge``"""
    if not 0 <= edge < mesh.n_edges:
        raise ValueError(f"Edge {edge} out of range for {mesh!r}")
    return float(mesh.edge_lengths[edge])


def face_weight(mesh: Mesh, edge: int) -> float:
    if not 0 <= edge < mesh.n_edges:
        raise ValueError(f"Edge {edge} out of range for {mesh!r}")
    return float(mesh.face_weights[edge])


def unit_square_mesh(level: int, forest: Optional[BisectionForest] = None, macro: str = "criss-cross") -> Mesh:
    """Macro mesh of the unit square after ``level`` uniform bisection sweeps"""
    if not 0 <= level <= MAX_UNIFORM_LEVEL:
        raise ValueError(f"Uniform level {level} outside 0..{MAX_UNIFORM_LEVEL}")
    forest = forest if forest is not None else BisectionForest(macro)
    mesh = Mesh(forest, forest.roots)
    for _ in range(level):
        mesh = bisect(mesh, mesh.leaves)
    return mesh


def _check_marks(mesh: Mesh, marked: Iterable[int]) -> Set[int]:
    marks = {int(k) for k in marked}
    if marks:
        mesh.positions(sorted(marks))
    return marks


def bisect(mesh: Mesh, marked: Iterable[int]) -> Mesh:
    """Newest-vertex bisection of the marked leaves with conforming closure"""
    marks = _check_marks(mesh, marked)
    if not marks:
        return mesh
    forest = mesh.forest
    leaves: Set[int] = set(mesh.leaves.tolist())
    edge_map: Dict[Tuple[int, int], Set[int]] = {}
    for pos, (a, b) in enumerate(mesh.edges.tolist()):
        edge_map[(a, b)] = {int(mesh.leaves[k]) for k in mesh.edge_elements[pos] if k >= 0}

    def split(k: int) -> None:
        for e in _local_edges(forest.element(k)):
            edge_map[e].discard(k)
        leaves.discard(k)
        for child in forest.bisect_element(k):
            leaves.add(child)
            for e in _local_edges(forest.element(child)):
                edge_map.setdefault(e, set()).add(child)

    def refine(k: int) -> None:
        while k in leaves:
            edge = forest.refinement_edge(k)
            others = [j for j in edge_map[edge] if j != k]
            neighbour = others[0] if others else None
            if neighbour is None or forest.refinement_edge(neighbour) == edge:
                split(k)
                if neighbour is not None:
                    split(neighbour)
                return
            refine(neighbour)

    for k in sorted(marks):
        refine(k)
    refined = Mesh(forest, np.fromiter(leaves, dtype=np.int64))
    logger.debug(f"[mesh] bisect: {len(marks)} marked, {mesh.n_elements} -> {refined.n_elements} elements")
    return refined


def coarsen(mesh: Mesh, marked: Iterable[int]) -> Mesh:
    """One sweep of conforming sibling merges among the marked leaves"""
    marks = _check_marks(mesh, marked)
    if not marks:
        return mesh
    forest = mesh.forest
    vertex_leaves: Dict[int, List[int]] = {}
    for k, element in zip(mesh.leaves.tolist(), mesh.elements.tolist()):
        for v in element:
            vertex_leaves.setdefault(v, []).append(k)

    candidates = sorted({forest.element(k)[0] for k in marks if forest.parent(k) >= 0})
    removed: Set[int] = set()
    added: Set[int] = set()
    for m in candidates:
        patch = vertex_leaves[m]
        if any(k not in marks or forest.element(k)[0] != m or forest.parent(k) < 0 for k in patch):
            continue
        parents = {forest.parent(k) for k in patch}
        if any(set(forest.children(p)) - set(patch) for p in parents):
            continue
        removed.update(patch)
        added.update(parents)
    if not added:
        return mesh
    leaves = (set(mesh.leaves.tolist()) - removed) | added
    coarse = Mesh(forest, np.fromiter(leaves, dtype=np.int64))
    logger.debug(f"[mesh] coarsen: {len(marks)} marked, {mesh.n_elements} -> {coarse.n_elements} elements")
    return coarse


def check_compatible(a: Mesh, b: Mesh) -> None:
    if a.forest is not b.forest:
        raise IncompatibleMeshError(f"Meshes {a.tag} and {b.tag} do not share a bisection forest")


def finest_common_coarsening(a: Mesh, b: Mesh) -> Mesh:
    """Leaves of the intersection of the two forest trees"""
    check_compatible(a, b)
    if a == b:
        return a
    in_a, in_b = a.forest.tree_mask(a.leaves), a.forest.tree_mask(b.leaves)
    leaves = np.union1d(a.leaves[in_b[a.leaves]], b.leaves[in_a[b.leaves]])
    return Mesh(a.forest, leaves)


def overlay(a: Mesh, b: Mesh) -> Mesh:
    """Leaves of the union of the two forest trees (common refinement)"""
    check_compatible(a, b)
    if a == b:
        return a
    forest = a.forest
    in_a, in_b = forest.tree_mask(a.leaves), forest.tree_mask(b.leaves)
    leaf_a = np.zeros_like(in_a)
    leaf_b = np.zeros_like(in_b)
    leaf_a[a.leaves] = True
    leaf_b[b.leaves] = True
    # a leaf of one mesh survives unless the other mesh refines it further
    keep_a = a.leaves[~in_b[a.leaves] | leaf_b[a.leaves]]
    keep_b = b.leaves[~in_a[b.leaves] | leaf_a[b.leaves]]
    return Mesh(forest, np.union1d(keep_a, keep_b))


def host_positions(fine: Mesh, coarse: Mesh) -> np.ndarray:
    """Position in ``coarse`` of the ancestor-or-self of every ``fine`` leaf"""
    check_compatible(fine, coarse)
    parents = fine.forest.parent_array()
    ids = fine.leaves.copy()
    hosts = np.full(fine.n_elements, -1, dtype=np.int64)
    pending = np.arange(fine.n_elements)
    while pending.size:
        pos = np.minimum(np.searchsorted(coarse.leaves, ids[pending]), coarse.n_elements - 1)
        found = coarse.leaves[pos] == ids[pending]
        hosts[pending[found]] = pos[found]
        pending = pending[~found]
        ids[pending] = parents[ids[pending]]
        if np.any(ids[pending] < 0):
            raise IncompatibleMeshError(f"Mesh {fine!r} does not refine {coarse!r}")
    return hosts


def is_conforming(mesh: Mesh) -> bool:
    """Every edge with a single element lies on the boundary of the unit square"""
    single = mesh.boundary_mask
    a, b = mesh.vertices[mesh.edges[single, 0]], mesh.vertices[mesh.edges[single, 1]]
    on_side = np.zeros(a.shape[0], dtype=bool)
    for axis in (0, 1):
        for value in (0.0, 1.0):
            on_side |= (a[:, axis] == value) & (b[:, axis] == value)
    return bool(np.all(on_side))


def quasi_uniformity_ratio(mesh: Mesh) -> float:
    """Largest h ratio across interior edges"""
    interior = ~mesh.boundary_mask
    if not np.any(interior):
        return 1.0
    h_plus = mesh.h[mesh.edge_elements[interior, 0]]
    h_minus = mesh.h[mesh.edge_elements[interior, 1]]
    return float(np.max(np.maximum(h_plus / h_minus, h_minus / h_plus)))


def dump_mesh(mesh: Mesh) -> str:
    """Plain-text dump: vertices, elements and edges sections"""
    used = np.unique(mesh.elements)
    parents = mesh.forest.parent_array()
    lines = ["vertices"]
    lines += [f"{v} {mesh.vertices[v, 0]!r} {mesh.vertices[v, 1]!r}" for v in used.tolist()]
    lines.append("elements")
    for k, (v0, v1, v2), level in zip(mesh.leaves.tolist(), mesh.elements.tolist(), mesh.levels.tolist()):
        lines.append(f"{k} {v0} {v1} {v2} {level} {parents[k]}")
    lines.append("edges")
    for (v0, v1), boundary in zip(mesh.edges.tolist(), mesh.boundary_mask.tolist()):
        lines.append(f"{v0} {v1} {'boundary' if boundary else 'interior'}")
    return "\n".join(lines) + "\n"
