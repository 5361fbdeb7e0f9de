"""
Discrete elliptic operator, the reconstructed load g and the backward Euler step.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from dg_space import DgSpace, FeFunction, l2_project_callable, sample, transfer
from mesh import Mesh
from quadrature.rules import time_rule
from shared.errors import SingularSystemError
from shared.schemas import PenaltyConfig
from .assembly import assemble_load, assemble_mass, stiffness
from .solvers import SpdSolver

logger = logging.getLogger(__name__)

MAX_CACHED_STEP_SOLVERS = 2


@dataclass(frozen=True)
class TimeAverage:
    """f~(x, y) = (t1 - t0)^-1 int_{t0}^{t1} f(x, y, t) dt by Gauss quadrature"""

    f: Callable
    t0: float
    t1: float
    points: int = 3

    def __call__(self, x, y):
        rule = time_rule(self.points)
        length = self.t1 - self.t0
        return sum(w * self.f(x, y, self.t0 + length * s) for s, w in zip(rule.points, rule.weights))


@dataclass(frozen=True)
class TimeSlice:
    """f(x, y, t) at a fixed time"""

    f: Callable
    t: float

    def __call__(self, x, y):
        return self.f(x, y, self.t)


def time_average(f: Callable, t0: float, t1: float, points: int = 3) -> TimeAverage:
    if not t1 > t0:
        raise ValueError(f"Empty time interval [{t0}, {t1}]")
    return TimeAverage(f, t0, t1, points)


def apply_discrete_elliptic(U: FeFunction, penalty: PenaltyConfig) -> FeFunction:
    """A U with <A U, chi> = B(U, chi); coefficients are B u under the orthonormal basis"""
    return FeFunction(U.space, stiffness(U.space, penalty) @ U.vector)


@dataclass(frozen=True)
class GRepresentation:
    """g = A U - Pi f~ + f~, kept as a finite element part plus the analytic f~"""

    fe_part: FeFunction
    analytic_part: Callable
    tag: str

    @property
    def meshes(self) -> List[Mesh]:
        return self.fe_part.meshes

    def evaluate_on(self, mesh: Mesh, points: np.ndarray, derivative: str = "value", positions=None):
        if derivative != "value":
            raise ValueError(f"g can only be sampled for values, not '{derivative}'")
        return self.fe_part.evaluate_on(mesh, points, positions=positions) + sample(self.analytic_part, mesh, points)

    def __sub__(self, other) -> "GDifference":
        return GDifference.of(self) - other


@dataclass(frozen=True)
class GDifference:
    """Linear combination of g representations from different meshes"""

    terms: Tuple[Tuple[float, GRepresentation], ...]

    @classmethod
    def of(cls, g) -> "GDifference":
        if isinstance(g, GDifference):
            return g
        return cls(((1.0, g),))

    @property
    def meshes(self) -> List[Mesh]:
        return [mesh for _, g in self.terms for mesh in g.meshes]

    def evaluate_on(self, mesh: Mesh, points: np.ndarray, derivative: str = "value", positions=None):
        return sum(coef * g.evaluate_on(mesh, points, derivative, positions) for coef, g in self.terms)

    def __sub__(self, other) -> "GDifference":
        negated = tuple((-coef, g) for coef, g in GDifference.of(other).terms)
        return GDifference(self.terms + negated)


def compute_g(U: FeFunction, f_tilde: Callable, penalty: PenaltyConfig) -> GRepresentation:
    projected = l2_project_callable(U.space, f_tilde)
    fe_part = apply_discrete_elliptic(U, penalty) - projected
    return GRepresentation(fe_part=fe_part, analytic_part=f_tilde, tag=U.mesh.tag)


def _cached_solver(space: DgSpace, key: tuple, build) -> SpdSolver:
    cache = space.operator_cache()
    if key not in cache:
        step_keys = [k for k in cache if k[0] == "euler"]
        if key[0] == "euler" and len(step_keys) >= MAX_CACHED_STEP_SOLVERS:
            del cache[step_keys[0]]
        cache[key] = build()
    return cache[key]


def _penalized_solve(space: DgSpace, penalty: PenaltyConfig, key: tuple, build, rhs: np.ndarray) -> np.ndarray:
    """Cached solve; a breakdown is reported with the penalty that produced the matrix"""
    try:
        return _cached_solver(space, key, build).solve(rhs)
    except SingularSystemError as e:
        raise SingularSystemError(
            f"{e} (degree {space.degree}, sigma0={penalty.sigma0}, xi0={penalty.xi0})"
        ) from e


def step_matrix(space: DgSpace, lam: float, penalty: PenaltyConfig):
    """M / lambda + B"""
    return (assemble_mass(space) / lam + stiffness(space, penalty)).tocsr()


def backward_euler_step(U_prev: FeFunction, lam: float, f_tilde: Callable, space: DgSpace,
                        penalty: PenaltyConfig, method: str = "auto") -> FeFunction:
    """Solve (I / lambda + B) u = Pi u_prev / lambda + load(f~) on ``space``"""
    if not lam > 0.0:
        raise ValueError(f"Time step must be positive, got {lam}")
    rhs = transfer(U_prev, space).vector / lam + assemble_load(space, f_tilde)
    vector = _penalized_solve(
        space, penalty,
        ("euler", penalty.sigma0, penalty.xi0, float(lam), method),
        lambda: SpdSolver(step_matrix(space, lam, penalty), method=method, block_size=space.n_local),
        rhs,
    )
    return FeFunction(space, vector)


def solve_elliptic(space: DgSpace, phi: Callable, penalty: PenaltyConfig, method: str = "auto") -> FeFunction:
    """dG solution of the steady problem B(u, v) = <phi, v>"""
    vector = _penalized_solve(
        space, penalty,
        ("elliptic", penalty.sigma0, penalty.xi0, method),
        lambda: SpdSolver(stiffness(space, penalty), method=method, block_size=space.n_local),
        assemble_load(space, phi),
    )
    return FeFunction(space, vector)
