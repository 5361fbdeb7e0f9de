"""
Spatial adaptivity for one time step and for the initial condition.
"""
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from dg_space import DgSpace, FeFunction, l2_project_callable, quadrature, sample
from estimators import EllipticIndicatorField, elliptic_estimate
from forms import GRepresentation, backward_euler_step, compute_g
from mesh import Mesh, bisect
from shared.config import settings
from shared.errors import ResourceLimitError
from shared.schemas import AdaptiveConfig, PenaltyConfig
from .marking import dorfler_mark, space_coarsening

logger = logging.getLogger(__name__)


class SpaceRegistry:
    """Reuses DgSpace objects (and their cached operators) for recently seen meshes"""

    def __init__(self, degree: int, capacity: int = 4):
        self.degree = degree
        self.capacity = capacity
        self._spaces: "OrderedDict[Mesh, DgSpace]" = OrderedDict()

    def get(self, mesh: Mesh) -> DgSpace:
        space = self._spaces.get(mesh)
        if space is None:
            space = DgSpace(mesh, self.degree)
            self._spaces[mesh] = space
            if len(self._spaces) > self.capacity:
                self._spaces.popitem(last=False)
        else:
            self._spaces.move_to_end(mesh)
        return space


@dataclass
class SpaceAdaptivityResult:
    U: FeFunction
    g: GRepresentation
    estimate: EllipticIndicatorField
    iterations: int
    converged: bool
    marked: List[np.ndarray] = field(default_factory=list)

    @property
    def space(self) -> DgSpace:
        return self.U.space

    @property
    def mesh(self) -> Mesh:
        return self.U.mesh


def _check_size(mesh: Mesh, max_elements: int) -> None:
    if mesh.n_elements > max_elements:
        raise ResourceLimitError(f"Mesh has {mesh.n_elements} elements, above the cap of {max_elements}")


def space_adaptivity(U_prev: FeFunction, f_tilde: Callable, config: AdaptiveConfig, lam: float,
                     mesh_in: Mesh, penalty: PenaltyConfig, registry: SpaceRegistry,
                     previous_indicators: Optional[np.ndarray] = None) -> SpaceAdaptivityResult:
    """Coarsen, then solve, estimate, mark and refine until E_space <= TOL_space.

    ``previous_indicators`` are the local indicators of the last accepted
    solution on ``mesh_in`` and drive the coarsening.
    """
    mesh = mesh_in
    if previous_indicators is not None:
        mesh = space_coarsening(mesh, previous_indicators, config.tol_coarse)
    marked_history = []
    for iteration in range(1, config.max_space_iters + 1):
        space = registry.get(mesh)
        U = backward_euler_step(U_prev, lam, f_tilde, space, penalty)
        g = compute_g(U, f_tilde, penalty)
        estimate = elliptic_estimate(space, U, g, penalty)
        if estimate.total <= config.tol_space:
            return SpaceAdaptivityResult(U, g, estimate, iteration, True, marked_history)
        if iteration == config.max_space_iters:
            break
        marked = dorfler_mark(estimate.indicators, config.xi_refine)
        marked_history.append(marked)
        mesh = bisect(mesh, mesh.leaves[marked])
        _check_size(mesh, config.max_elements)
        logger.debug(
            f"[adapt] space iteration {iteration}: E_space={estimate.total:.3e}, "
            f"marked {marked.size}, now {mesh.n_elements} elements"
        )
    logger.warning(
        f"[adapt] space adaptivity stopped after {config.max_space_iters} iterations "
        f"with E_space={estimate.total:.3e} > {config.tol_space:.3e}"
    )
    return SpaceAdaptivityResult(U, g, estimate, config.max_space_iters, False, marked_history)


@dataclass
class InitialAdaptivityResult:
    U: FeFunction
    error: float
    iterations: int
    converged: bool


def local_projection_errors(U: FeFunction, u0: Callable, degree: Optional[int] = None) -> np.ndarray:
    """Per-element ||u0 - Pi u0||^2"""
    points, weights = quadrature(U.mesh, U.space.volume_rule(degree))
    values = U.evaluate_on(U.mesh, points) - sample(u0, U.mesh, points)
    return np.sum(weights * values ** 2, axis=1)


def initial_space_adaptivity(u0: Callable, mesh0: Mesh, registry: SpaceRegistry, xi_refine: float, tol: float,
                             max_iterations: Optional[int] = None,
                             max_elements: Optional[int] = None) -> InitialAdaptivityResult:
    """U0 = Pi^0 u0, refining by Dörfler on the local projection errors until ||u0 - U0|| <= tol"""
    max_iterations = max_iterations if max_iterations is not None else settings.max_space_iters
    max_elements = max_elements if max_elements is not None else settings.max_elements
    mesh = mesh0
    for iteration in range(1, max_iterations + 1):
        U0 = l2_project_callable(registry.get(mesh), u0)
        local = local_projection_errors(U0, u0)
        error = float(np.sqrt(local.sum()))
        if error <= tol:
            return InitialAdaptivityResult(U0, error, iteration, True)
        if iteration == max_iterations:
            break
        mesh = bisect(mesh, mesh.leaves[dorfler_mark(local, xi_refine)])
        _check_size(mesh, max_elements)
    logger.warning(f"[adapt] initial adaptivity stopped with ||u0 - U0|| = {error:.3e} > {tol:.3e}")
    return InitialAdaptivityResult(U0, error, max_iterations, False)
