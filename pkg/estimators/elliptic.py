"""
Residual L2 estimator for the dG biharmonic problem.

    E^2 = C^2 [ ||h^(4 - l/2) (phi - lap_h^2 v)||^2
               + ||h^((7 - l)/2) [[grad lap v]]||^2_int + ||h^((5 - l)/2) [[lap v]]||^2_int
               + sum_e h_e^(3 - l) (1 + xi0^2) ||[[grad v]]||^2_e + h_e^(1 - l) (1 + sigma0^2) ||[[v]]||^2_e ]

with l = 2 (2 - min(2, r - 1)). The integrals run over the leaves and edges of
an evaluation mesh, while h and h_e are read from a (possibly coarser)
weight mesh that the evaluation mesh refines.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from dg_space import DgSpace, common_mesh, edge_traces, quadrature, sample
from mesh import Mesh, host_positions
from quadrature.rules import edge_rule, triangle_rule
from shared.config import settings
from shared.schemas import PenaltyConfig

logger = logging.getLogger(__name__)

TERMS = ("volume", "gradlap_jump", "lap_jump", "grad_jump", "value_jump")


def estimator_lambda(degree: int) -> int:
    return 2 * (2 - min(2, degree - 1))


@dataclass(frozen=True)
class EstimatorConstants:
    """Single multiplier for every constant of the bounds"""

    constant: float = 1.0

    def __post_init__(self):
        if not self.constant > 0:
            raise ValueError(f"Estimator constant must be positive, got {self.constant}")


@dataclass(frozen=True)
class EllipticIndicatorField:
    """Squared per-element contributions of each term on ``mesh``"""

    mesh: Mesh
    terms: Dict[str, np.ndarray]
    constant: float
    lam: int

    @property
    def indicators(self) -> np.ndarray:
        """Local squared indicators (without the constant)"""
        return sum(self.terms[name] for name in TERMS)

    @property
    def total_squared(self) -> float:
        return self.constant ** 2 * float(np.sum(self.indicators))

    @property
    def total(self) -> float:
        return float(np.sqrt(self.total_squared))

    def term_total(self, name: str) -> float:
        return float(np.sum(self.terms[name]))


def _degree_of(field) -> int:
    if hasattr(field, "terms"):
        return max(f.space.degree for _, f in field.terms)
    return field.space.degree


def _containing_edges(weight_mesh: Mesh, hosts: np.ndarray, midpoints: np.ndarray) -> np.ndarray:
    """Weight-mesh edge of each host element that contains the given midpoint"""
    candidates = weight_mesh.element_edges[hosts]
    a = weight_mesh.vertices[weight_mesh.edges[candidates, 0]]
    b = weight_mesh.vertices[weight_mesh.edges[candidates, 1]]
    ab = b - a
    s = np.einsum("kjd,kjd->kj", midpoints[:, None, :] - a, ab) / np.einsum("kjd,kjd->kj", ab, ab)
    closest = a + np.clip(s, 0.0, 1.0)[..., None] * ab
    distance = np.linalg.norm(midpoints[:, None, :] - closest, axis=-1)
    return candidates[np.arange(hosts.shape[0]), np.argmin(distance, axis=1)]


def estimate_on(weight_mesh: Mesh, v, phi, penalty: PenaltyConfig,
                constants: Optional[EstimatorConstants] = None) -> EllipticIndicatorField:
    """Estimator of (v, phi) with weights from ``weight_mesh``, integrated on the overlay of all meshes"""
    constants = constants or EstimatorConstants(settings.estimator_constant)
    degree = _degree_of(v)
    lam = estimator_lambda(degree)
    meshes = [weight_mesh] + list(v.meshes) + list(getattr(phi, "meshes", []))
    eval_mesh = common_mesh(meshes)
    hosts = host_positions(eval_mesh, weight_mesh)
    h = weight_mesh.h
    n = weight_mesh.n_elements
    terms = {name: np.zeros(n) for name in TERMS}

    points, weights = quadrature(eval_mesh, triangle_rule(settings.volume_quadrature_degree(degree)))
    residual = sample(phi, eval_mesh, points) - sample(v, eval_mesh, points, derivative="bilap")
    volume = h[hosts] ** (8 - lam) * np.sum(weights * residual ** 2, axis=1)
    np.add.at(terms["volume"], hosts, volume)

    trace = edge_traces(v, eval_mesh, edge_rule(2 * degree))
    plus = hosts[eval_mesh.edge_elements[:, 0]]
    minus_pos = eval_mesh.edge_elements[:, 1]
    boundary = minus_pos < 0
    minus = np.where(boundary, plus, hosts[np.maximum(minus_pos, 0)])
    inside = ~boundary & (plus == minus)
    across = ~boundary & ~inside

    # weights: face weight h and edge length h_e of the weight-mesh entity
    face_h = h[plus].copy()
    edge_h = h[plus].copy()
    on_weight_edge = boundary | across
    if np.any(on_weight_edge):
        midpoints = 0.5 * (eval_mesh.vertices[eval_mesh.edges[on_weight_edge, 0]]
                           + eval_mesh.vertices[eval_mesh.edges[on_weight_edge, 1]])
        weight_edges = _containing_edges(weight_mesh, plus[on_weight_edge], midpoints)
        edge_h[on_weight_edge] = weight_mesh.edge_lengths[weight_edges]
        face_h[on_weight_edge] = weight_mesh.face_weights[weight_edges]

    def integral(values):
        return np.sum(trace.weights * values, axis=1)

    interior = ~boundary
    edge_terms = {
        "gradlap_jump": np.where(interior, face_h ** (7 - lam) * integral(trace.gradlap_jump ** 2), 0.0),
        "lap_jump": np.where(interior, face_h ** (5 - lam) * integral(trace.lap_difference ** 2), 0.0),
        "grad_jump": edge_h ** (3 - lam) * (1.0 + penalty.xi0 ** 2) * integral(trace.grad_jump ** 2),
        "value_jump": edge_h ** (1 - lam) * (1.0 + penalty.sigma0 ** 2) * integral(trace.value_difference ** 2),
    }
    share = np.where(across, 0.5, 1.0)
    for name, values in edge_terms.items():
        np.add.at(terms[name], plus, share * values)
        np.add.at(terms[name], minus[across], 0.5 * values[across])
    return EllipticIndicatorField(mesh=weight_mesh, terms=terms, constant=constants.constant, lam=lam)


def elliptic_estimate(space: DgSpace, v, phi, penalty: PenaltyConfig,
                      constants: Optional[EstimatorConstants] = None) -> EllipticIndicatorField:
    """Estimator of a discrete function v on its own mesh for the load phi"""
    return estimate_on(space.mesh, v, phi, penalty, constants)
