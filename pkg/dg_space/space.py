"""
Discontinuous piecewise-polynomial spaces, functions on them and L2 projections.

Anything that can be sampled on a mesh is a "field": a plain callable
``phi(x, y)`` working on numpy arrays, or an object with an ``evaluate_on``
method (finite element functions, their combinations, g representations).
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from mesh import Mesh, host_positions, overlay
from quadrature.rules import QuadRule, triangle_rule
from shared.config import settings
from shared.errors import QuadratureError
from .basis import ElementBasis, local_dimension

logger = logging.getLogger(__name__)

SUPPORTED_DEGREES = (2, 3)


class DgSpace:
    """Fully discontinuous P_r space on the leaves of a mesh.

    Dofs are element-block contiguous: element at position k owns
    ``k * n_local .. (k + 1) * n_local - 1``.
    """

    def __init__(self, mesh: Mesh, degree: int):
        if degree not in SUPPORTED_DEGREES:
            raise ValueError(f"Polynomial degree {degree} not supported, expected one of {SUPPORTED_DEGREES}")
        self.mesh = mesh
        self.degree = degree
        self.n_local = local_dimension(degree)
        self._operators = {}

    def __repr__(self) -> str:
        return f"DgSpace(degree={self.degree}, elements={self.mesh.n_elements}, tag={self.mesh.tag})"

    @cached_property
    def basis(self) -> ElementBasis:
        mesh = self.mesh
        return ElementBasis.build(mesh.centers, mesh.h, mesh.coords, mesh.areas, self.degree)

    @property
    def dim(self) -> int:
        return self.mesh.n_elements * self.n_local

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(self.mesh.n_elements) * self.n_local

    def dofs(self, positions: np.ndarray) -> np.ndarray:
        """Global dof indices of the given element positions, shape (k, n_local)"""
        return np.asarray(positions)[:, None] * self.n_local + np.arange(self.n_local)[None, :]

    def volume_rule(self, degree: Optional[int] = None) -> QuadRule:
        return triangle_rule(degree if degree is not None else settings.volume_quadrature_degree(self.degree))

    def operator_cache(self) -> dict:
        """Per-space storage for assembled matrices and factorizations"""
        return self._operators


def quadrature(mesh: Mesh, rule: QuadRule) -> Tuple[np.ndarray, np.ndarray]:
    """Physical points (n, nq, 2) and weights (n, nq) of ``rule`` on every leaf"""
    points = mesh.map_points(rule.points)
    weights = 2.0 * mesh.areas[:, None] * rule.weights[None, :]
    return points, weights


def sample(field, mesh: Mesh, points: np.ndarray, derivative: str = "value",
           positions: Optional[np.ndarray] = None) -> np.ndarray:
    """Values of a field at ``points`` lying in the leaves ``positions`` of ``mesh``"""
    if hasattr(field, "evaluate_on"):
        return field.evaluate_on(mesh, points, derivative=derivative, positions=positions)
    if derivative != "value":
        raise ValueError(f"Plain callables can only be sampled for values, not '{derivative}'")
    values = np.broadcast_to(np.asarray(field(points[..., 0], points[..., 1]), dtype=float),
                             points.shape[:-1])
    if not np.all(np.isfinite(values)):
        raise QuadratureError("Integrand returned non-finite values")
    return values


class FeFunction:
    """Coefficients (n_elements, n_local) of a function in a :class:`DgSpace`"""

    def __init__(self, space: DgSpace, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=float).reshape(space.mesh.n_elements, space.n_local)
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("FeFunction coefficients must be finite")
        self.space = space
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, space: DgSpace) -> "FeFunction":
        return cls(space, np.zeros((space.mesh.n_elements, space.n_local)))

    @property
    def mesh(self) -> Mesh:
        return self.space.mesh

    @property
    def vector(self) -> np.ndarray:
        return self.coeffs.reshape(-1)

    @property
    def meshes(self) -> List[Mesh]:
        return [self.space.mesh]

    def evaluate_on(self, mesh: Mesh, points: np.ndarray, derivative: str = "value",
                    positions: Optional[np.ndarray] = None) -> np.ndarray:
        if positions is None:
            positions = np.arange(mesh.n_elements)
        if mesh is self.space.mesh or mesh == self.space.mesh:
            hosts = np.asarray(positions)
        else:
            hosts = host_positions(mesh, self.space.mesh)[positions]
        basis = self.space.basis.evaluate(points, hosts, derivative)
        if basis.ndim == 4:
            return np.einsum("kqid,ki->kqd", basis, self.coeffs[hosts])
        return np.einsum("kqi,ki->kq", basis, self.coeffs[hosts])

    def __add__(self, other):
        if isinstance(other, FeFunction) and other.space is self.space:
            return FeFunction(self.space, self.coeffs + other.coeffs)
        return FeCombination.of(self) + other

    def __sub__(self, other):
        if isinstance(other, FeFunction) and other.space is self.space:
            return FeFunction(self.space, self.coeffs - other.coeffs)
        return FeCombination.of(self) - other

    def __mul__(self, scalar: float) -> "FeFunction":
        return FeFunction(self.space, float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "FeFunction":
        return FeFunction(self.space, -self.coeffs)


@dataclass(frozen=True)
class FeCombination:
    """Linear combination of FeFunctions living on different meshes of one forest"""

    terms: Tuple[Tuple[float, FeFunction], ...]

    @classmethod
    def of(cls, f) -> "FeCombination":
        if isinstance(f, FeCombination):
            return f
        return cls(((1.0, f),))

    @property
    def meshes(self) -> List[Mesh]:
        return [f.mesh for _, f in self.terms]

    def evaluate_on(self, mesh: Mesh, points: np.ndarray, derivative: str = "value",
                    positions: Optional[np.ndarray] = None) -> np.ndarray:
        return sum(coef * f.evaluate_on(mesh, points, derivative, positions) for coef, f in self.terms)

    def __add__(self, other) -> "FeCombination":
        return FeCombination(self.terms + FeCombination.of(other).terms)

    def __sub__(self, other) -> "FeCombination":
        return self + (-1.0) * FeCombination.of(other)

    def __mul__(self, scalar: float) -> "FeCombination":
        return FeCombination(tuple((float(scalar) * coef, f) for coef, f in self.terms))

    __rmul__ = __mul__


class LocalValues(NamedTuple):
    value: float
    gradient: np.ndarray
    laplacian: float
    grad_laplacian: np.ndarray


def evaluate_local(f: FeFunction, element: int, point: Sequence[float]) -> LocalValues:
    """Value and derivatives of f on leaf ``element`` at a reference-triangle point"""
    xi, eta = float(point[0]), float(point[1])
    if xi < -1e-12 or eta < -1e-12 or xi + eta > 1.0 + 1e-12:
        raise ValueError(f"Point ({xi}, {eta}) is outside the reference triangle")
    position = f.mesh.positions([element])
    physical = np.einsum("j,jd->d", np.array([1.0 - xi - eta, xi, eta]), f.mesh.coords[position[0]])
    points = physical[None, None, :]
    values = {
        name: f.evaluate_on(f.mesh, points, derivative=name, positions=position)[0, 0]
        for name in ("value", "grad", "lap", "gradlap")
    }
    return LocalValues(
        value=float(values["value"]),
        gradient=np.asarray(values["grad"]),
        laplacian=float(values["lap"]),
        grad_laplacian=np.asarray(values["gradlap"]),
    )


def l2_project_callable(space: DgSpace, phi: Callable, degree: Optional[int] = None) -> FeFunction:
    """Orthogonal L2 projection; with an orthonormal basis the coefficients are the moments"""
    return FeFunction(space, inner_product_with_basis(phi, space, degree))


def common_mesh(meshes: Sequence[Mesh]) -> Mesh:
    """Overlay of several meshes of one forest"""
    result = meshes[0]
    for mesh in meshes[1:]:
        result = overlay(result, mesh)
    return result


def transfer(f: FeFunction, target: DgSpace) -> FeFunction:
    """L2 projection of f onto ``target``, integrated exactly on the overlay"""
    if target.mesh == f.mesh:
        return FeFunction(target, f.coeffs.copy())
    fine = overlay(f.mesh, target.mesh)
    points, weights = quadrature(fine, triangle_rule(f.space.degree + target.degree))
    values = f.evaluate_on(fine, points)
    hosts = host_positions(fine, target.mesh)
    basis = target.basis.evaluate(points, hosts)
    coeffs = np.zeros((target.mesh.n_elements, target.n_local))
    np.add.at(coeffs, hosts, np.einsum("kq,kqi->ki", weights * values, basis))
    return FeFunction(target, coeffs)


def integrate_squared(field, mesh: Mesh, degree: int) -> float:
    """Integral of field^2 over the unit square, on the leaves of ``mesh``"""
    points, weights = quadrature(mesh, triangle_rule(degree))
    values = sample(field, mesh, points)
    return float(np.sum(weights * values ** 2))


def field_degree(field) -> Optional[int]:
    """Polynomial degree of a discrete field, None for plain callables"""
    if isinstance(field, FeFunction):
        return field.space.degree
    if isinstance(field, FeCombination):
        return max(f.space.degree for _, f in field.terms)
    return None


def l2_norm(field, mesh: Mesh, degree: Optional[int] = None) -> float:
    """||field|| on the leaves of ``mesh``; exact for discrete fields, over-integrated otherwise"""
    if degree is None:
        own = field_degree(field)
        degree = 2 * own if own is not None else settings.volume_quadrature_degree(max(SUPPORTED_DEGREES))
    return float(np.sqrt(integrate_squared(field, mesh, degree)))


def inner_product_with_basis(field, space: DgSpace, degree: Optional[int] = None) -> np.ndarray:
    """<field, b_i> for every basis function, integrated on overlay(field meshes, space mesh)"""
    meshes = list(getattr(field, "meshes", [])) + [space.mesh]
    fine = common_mesh(meshes)
    points, weights = quadrature(fine, space.volume_rule(degree))
    values = sample(field, fine, points)
    hosts = host_positions(fine, space.mesh)
    basis = space.basis.evaluate(points, hosts)
    vector = np.zeros((space.mesh.n_elements, space.n_local))
    np.add.at(vector, hosts, np.einsum("kq,kqi->ki", weights * values, basis))
    return vector.reshape(-1)


def dump_function(f: FeFunction) -> str:
    """Header with degree and mesh tag, then one ``element-id coefficients`` line per leaf"""
    lines = [f"degree {f.space.degree} tag {f.mesh.tag} elements {f.mesh.n_elements}"]
    for k, row in zip(f.mesh.leaves.tolist(), f.coeffs):
        lines.append(f"{k} " + " ".join(repr(float(c)) for c in row))
    return "\n".join(lines) + "\n"
