"""
Two-sided traces on mesh edges with the jump/average conventions.

Interior edge with normals n+ = -n-:
    [[v]] = v+ n+ + v- n-          {{v}} = (v+ + v-) / 2
    [[q]] = q+ . n+ + q- . n-      {{q}} = (q+ + q-) / 2
On the boundary only the + side exists: [[v]] = v+ n, {{q}} = q+.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from mesh import Mesh
from quadrature.rules import QuadRule, edge_rule
from .space import field_degree, sample

TRACE_QUANTITIES = ("value", "grad", "lap", "gradlap")


@dataclass(frozen=True)
class EdgeTrace:
    """Per edge and quadrature point traces, shapes (ne, nq) or (ne, nq, 2)"""

    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    boundary: np.ndarray
    value_plus: np.ndarray
    value_minus: np.ndarray
    grad_plus: np.ndarray
    grad_minus: np.ndarray
    lap_plus: np.ndarray
    lap_minus: np.ndarray
    gradlap_plus: np.ndarray
    gradlap_minus: np.ndarray

    def _average(self, plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
        mask = self.boundary.reshape((-1,) + (1,) * (plus.ndim - 1))
        return np.where(mask, plus, 0.5 * (plus + minus))

    def _normal_component(self, vector: np.ndarray) -> np.ndarray:
        return np.einsum("eqd,ed->eq", vector, self.normals)

    # scalar differences across the edge, oriented by n+
    @property
    def value_difference(self) -> np.ndarray:
        return self.value_plus - self.value_minus

    @property
    def lap_difference(self) -> np.ndarray:
        return self.lap_plus - self.lap_minus

    @property
    def value_jump(self) -> np.ndarray:
        """[[v]] as a vector, shape (ne, nq, 2)"""
        return self.value_difference[..., None] * self.normals[:, None, :]

    @property
    def grad_jump(self) -> np.ndarray:
        """[[grad v]] = (grad v+ - grad v-) . n+"""
        return self._normal_component(self.grad_plus - self.grad_minus)

    @property
    def gradlap_jump(self) -> np.ndarray:
        return self._normal_component(self.gradlap_plus - self.gradlap_minus)

    @property
    def lap_jump(self) -> np.ndarray:
        """[[lap v]] as a vector, shape (ne, nq, 2)"""
        return self.lap_difference[..., None] * self.normals[:, None, :]

    @property
    def value_average(self) -> np.ndarray:
        return self._average(self.value_plus, self.value_minus)

    @property
    def grad_average(self) -> np.ndarray:
        return self._average(self.grad_plus, self.grad_minus)

    @property
    def lap_average(self) -> np.ndarray:
        return self._average(self.lap_plus, self.lap_minus)

    @property
    def gradlap_average(self) -> np.ndarray:
        return self._average(self.gradlap_plus, self.gradlap_minus)


def edge_traces(f, mesh: Optional[Mesh] = None, rule: Optional[QuadRule] = None) -> EdgeTrace:
    """Traces of f (an FeFunction or FeCombination) on every edge of ``mesh``.

    ``mesh`` defaults to the mesh of f and must refine every mesh f lives on.
    """
    if mesh is None:
        mesh = f.meshes[0]
    if rule is None:
        rule = edge_rule(2 * field_degree(f))
    points = mesh.edge_points(rule.points)
    plus, minus = mesh.edge_elements[:, 0], mesh.edge_elements[:, 1]
    boundary = minus < 0
    interior = ~boundary
    traces = {}
    for name in TRACE_QUANTITIES:
        traces[f"{name}_plus"] = sample(f, mesh, points, derivative=name, positions=plus)
        values_minus = np.zeros_like(traces[f"{name}_plus"])
        if np.any(interior):
            values_minus[interior] = sample(f, mesh, points[interior], derivative=name, positions=minus[interior])
        traces[f"{name}_minus"] = values_minus
    weights = mesh.edge_lengths[:, None] * rule.weights[None, :]
    return EdgeTrace(points=points, weights=weights, normals=mesh.edge_normals, boundary=boundary, **traces)