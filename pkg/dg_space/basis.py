"""
Element-local L2-orthonormal polynomial bases.

On each element the basis is the Cholesky orthonormalisation of the scaled
monomials ((x - x_K) / h_K)^p ((y - y_K) / h_K)^q with p + q <= r. Derivatives
of every order are exact: they are taken on the monomials and pushed through
the same change of basis.
"""
from dataclasses import dataclass
from math import perm
from typing import Optional

import numpy as np

from quadrature.rules import triangle_rule

DERIVATIVES = ("value", "grad", "lap", "gradlap", "bilap")

# derivative name -> list of (coefficient, dx, dy) per output component
_STENCILS = {
    "value": [[(1.0, 0, 0)]],
    "grad": [[(1.0, 1, 0)], [(1.0, 0, 1)]],
    "lap": [[(1.0, 2, 0), (1.0, 0, 2)]],
    "gradlap": [[(1.0, 3, 0), (1.0, 1, 2)], [(1.0, 2, 1), (1.0, 0, 3)]],
    "bilap": [[(1.0, 4, 0), (2.0, 2, 2), (1.0, 0, 4)]],
}


def local_dimension(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


def monomial_exponents(degree: int) -> np.ndarray:
    """Exponents (p, q) ordered by total degree"""
    return np.array([(d - q, q) for d in range(degree + 1) for q in range(d + 1)], dtype=np.int64)


@dataclass(frozen=True)
class ElementBasis:
    degree: int
    exponents: np.ndarray
    centers: np.ndarray
    h: np.ndarray
    change: np.ndarray  # (n, nb, nb), basis_i = sum_j change[k, i, j] monomial_j

    @classmethod
    def build(cls, centers: np.ndarray, h: np.ndarray, coords: np.ndarray, areas: np.ndarray, degree: int):
        exponents = monomial_exponents(degree)
        rule = triangle_rule(2 * degree)
        bary = rule.barycentric
        points = np.einsum("qj,kjd->kqd", bary, coords)
        m = _scaled_monomials(points, centers, h, exponents, 0, 0)
        weights = 2.0 * areas[:, None] * rule.weights[None, :]
        gram = np.einsum("kq,kqi,kqj->kij", weights, m, m)
        lower = np.linalg.cholesky(gram)
        change = np.linalg.inv(lower)
        return cls(degree=degree, exponents=exponents, centers=centers, h=h, change=change)

    @property
    def size(self) -> int:
        return int(self.exponents.shape[0])

    def evaluate(self, points: np.ndarray, positions: Optional[np.ndarray] = None, derivative: str = "value"):
        """Basis derivatives at physical ``points`` of shape (k, nq, 2).

        Scalar derivatives have shape (k, nq, nb), vector ones (k, nq, nb, 2).
        """
        if derivative not in _STENCILS:
            raise ValueError(f"Unknown derivative '{derivative}', expected one of {DERIVATIVES}")
        if positions is None:
            positions = np.arange(self.centers.shape[0])
        centers, h, change = self.centers[positions], self.h[positions], self.change[positions]
        components = []
        for stencil in _STENCILS[derivative]:
            m = sum(
                coef * _scaled_monomials(points, centers, h, self.exponents, dx, dy)
                for coef, dx, dy in stencil
            )
            components.append(np.einsum("kij,kqj->kqi", change, m))
        if len(components) == 1:
            return components[0]
        return np.stack(components, axis=-1)


def _scaled_monomials(points, centers, h, exponents, dx: int, dy: int) -> np.ndarray:
    xi = (points[..., 0] - centers[:, None, 0]) / h[:, None]
    eta = (points[..., 1] - centers[:, None, 1]) / h[:, None]
    columns = []
    for p, q in exponents.tolist():
        if p < dx or q < dy:
            columns.append(np.zeros_like(xi))
        else:
            columns.append(perm(p, dx) * perm(q, dy) * xi ** (p - dx) * eta ** (q - dy))
    scale = h[:, None, None] ** (dx + dy)
    return np.stack(columns, axis=-1) / scale
