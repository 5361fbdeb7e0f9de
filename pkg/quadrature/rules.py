"""
Fixed-degree quadrature on the reference triangle, the reference edge [0, 1]
and the reference time interval [0, 1].

Triangle rules are collapsed (Duffy) products of Gauss-Jacobi and
Gauss-Legendre nodes, so every rule has positive weights and interior points.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_TRIANGLE_DEGREE = 20
MAX_TIME_POINTS = 5


@dataclass(frozen=True)
class QuadRule:
    """Points and weights on a reference domain.

    ``points`` has shape (nq, 2) in reference coordinates (xi, eta) for the
    triangle with vertices (0, 0), (1, 0), (0, 1), and shape (nq,) on [0, 1].
    """

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def barycentric(self) -> np.ndarray:
        """Barycentric coordinates of triangle points, shape (nq, 3)"""
        xi, eta = self.points[:, 0], self.points[:, 1]
        return np.stack([1.0 - xi - eta, xi, eta], axis=1)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=float)
    array.setflags(write=False)
    return array


def _gauss_legendre_unit(n: int):
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadRule:
    """Rule exact for bivariate polynomials of total degree <= ``degree``"""
    if not 1 <= degree <= MAX_TRIANGLE_DEGREE:
        raise ValueError(f"Triangle quadrature of degree {degree} not supported (1..20)")
    if degree == 1:
        return QuadRule(
            points=_frozen(np.array([[1 / 3, 1 / 3]])), weights=_frozen(np.array([0.5])), exact_degree=1
        )
    if degree == 2:
        points = np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]])
        return QuadRule(points=_frozen(points), weights=_frozen(np.full(3, 1 / 6)), exact_degree=2)
    n = (degree + 2) // 2
    # s carries the (1 - s) Jacobian of the collapse x = s, y = t (1 - s)
    sx, sw = roots_jacobi(n, 1.0, 0.0)
    s, ws = 0.5 * (sx + 1.0), 0.25 * sw
    t, wt = _gauss_legendre_unit(n)
    S, T = np.meshgrid(s, t, indexing="ij")
    WS, WT = np.meshgrid(ws, wt, indexing="ij")
    points = np.stack([S.ravel(), (T * (1.0 - S)).ravel()], axis=1)
    weights = (WS * WT).ravel()
    return QuadRule(points=_frozen(points), weights=_frozen(weights), exact_degree=degree)


@lru_cache(maxsize=None)
def edge_rule(degree: int) -> QuadRule:
    """Gauss-Legendre rule on [0, 1] exact up to ``degree``"""
    if degree < 1:
        raise ValueError(f"Edge quadrature degree must be >= 1, got {degree}")
    n = (degree + 2) // 2
    points, weights = _gauss_legendre_unit(n)
    return QuadRule(points=_frozen(points), weights=_frozen(weights), exact_degree=2 * n - 1)


@lru_cache(maxsize=None)
def time_rule(points: int) -> QuadRule:
    """``points``-point Gauss-Legendre rule on [0, 1]"""
    if not 1 <= points <= MAX_TIME_POINTS:
        raise ValueError(f"Time quadrature with {points} points not supported (1..5)")
    nodes, weights = _gauss_legendre_unit(points)
    return QuadRule(points=_frozen(nodes), weights=_frozen(weights), exact_degree=2 * points - 1)
