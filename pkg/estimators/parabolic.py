"""
Per-step parabolic estimators and their accumulation over the time grid.

For step n with time step lam on mesh T_n:

    gamma_inf = ||(I - Pi^n) U^{n-1}||^2 / lam
    gamma_2   = ||(I - Pi^n) U^{n-1}||^2 + sum_{i<n} ||(I - Pi^i) U^{i-1}||^2
    eta_inf   = lam ||g^n - g^{n-1}||^2
    eta_2     = lam^2 ||g^n - g^{n-1}||^2 + sum_{i<n} lam_i^2 ||g^i - g^{i-1}||^2
    beta_inf  = int_{t_{n-1}}^{t_n} ||f~^n - f||^2 dt,    beta_2 = lam beta_inf
    eta~_inf  = E(T^_n, U^n - U^{n-1}, g^n - g^{n-1})^2  or  E(T_n, U^n, g^n)^2
"""
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, NamedTuple, Optional

import numpy as np

from dg_space import DgSpace, FeFunction, common_mesh, integrate_squared, quadrature, sample, transfer
from mesh import Mesh
from quadrature.rules import time_rule, triangle_rule
from shared.config import settings
from shared.schemas import EtaTildeMode, NormFlavor, PenaltyConfig
from .elliptic import EstimatorConstants, elliptic_estimate, estimate_on


class CoarseningEstimate(NamedTuple):
    gamma_inf: float
    gamma_2: float
    increment: float


class TimeEstimate(NamedTuple):
    eta_inf: float
    eta_2: float
    increment: float


class DataEstimate(NamedTuple):
    beta_inf: float
    beta_2: float


def coarsening_estimators(U_prev: FeFunction, space_n: DgSpace, lam: float, history: float = 0.0) -> CoarseningEstimate:
    """Mesh-change estimators; ``history`` is the running sum of earlier increments"""
    if space_n.mesh == U_prev.mesh:
        change = 0.0
    else:
        projected = transfer(U_prev, space_n)
        fine = common_mesh([U_prev.mesh, space_n.mesh])
        change = integrate_squared(U_prev - projected, fine, U_prev.space.degree + space_n.degree)
    return CoarseningEstimate(gamma_inf=change / lam, gamma_2=change + history, increment=change)


def time_estimators(g_n, g_prev, lam: float, history: float = 0.0, degree: Optional[int] = None) -> TimeEstimate:
    """Time-evolution estimators from ||g^n - g^{n-1}||^2 on the overlay of their meshes"""
    difference = g_n - g_prev
    fine = common_mesh(difference.meshes)
    degree = degree if degree is not None else settings.volume_quadrature_degree(g_n.fe_part.space.degree)
    change = integrate_squared(difference, fine, degree)
    return TimeEstimate(eta_inf=change * lam, eta_2=change * lam ** 2 + history, increment=change * lam ** 2)


def data_estimators(f: Callable, f_tilde: Callable, t0: float, t1: float, mesh: Mesh, degree: int,
                    points: int = 3) -> DataEstimate:
    """Time-averaging error of the data on [t0, t1]"""
    lam = t1 - t0
    if not lam > 0.0:
        raise ValueError(f"Empty time interval [{t0}, {t1}]")
    rule = time_rule(points)
    xq, weights = quadrature(mesh, triangle_rule(degree))
    averaged = sample(f_tilde, mesh, xq)
    beta = 0.0
    for s, w in zip(rule.points, rule.weights):
        values = sample(lambda x, y: f(x, y, t0 + lam * s), mesh, xq)
        beta += w * lam * float(np.sum(weights * (averaged - values) ** 2))
    return DataEstimate(beta_inf=beta, beta_2=lam * beta)


def extra_space_estimator(U_n: FeFunction, U_prev: FeFunction, g_n, g_prev, mesh_hat: Mesh,
                          penalty: PenaltyConfig, mode: EtaTildeMode = "common-coarsening",
                          constants: Optional[EstimatorConstants] = None) -> float:
    """eta~_inf, either on the finest common coarsening or as the plain step estimator"""
    if mode == "per-step":
        return elliptic_estimate(U_n.space, U_n, g_n, penalty, constants).total_squared
    if mode != "common-coarsening":
        raise ValueError(f"Unknown eta~ mode '{mode}'")
    return estimate_on(mesh_hat, U_n - U_prev, g_n - g_prev, penalty, constants).total_squared


@dataclass(frozen=True)
class ParabolicStepEstimators:
    """Estimator values of one accepted (or attempted) step"""

    lam: float
    gamma_inf: float = 0.0
    gamma_2: float = 0.0
    eta_inf: float = 0.0
    eta_2: float = 0.0
    beta_inf: float = 0.0
    beta_2: float = 0.0
    eta_tilde_inf: float = 0.0
    estimator_space: float = 0.0
    mesh_change: float = 0.0
    time_change: float = 0.0

    def __post_init__(self):
        values = (self.gamma_inf, self.gamma_2, self.eta_inf, self.eta_2, self.beta_inf, self.beta_2,
                  self.eta_tilde_inf, self.estimator_space)
        if min(values) < 0.0:
            raise ValueError(f"Negative estimator value in {self}")

    def local_time_indicator(self, norm: NormFlavor, include_eta_tilde: bool = True) -> float:
        """Contribution of this step to E_time, compared against TOL_time"""
        if norm == "linf-l2":
            extra = self.eta_tilde_inf if include_eta_tilde else 0.0
            return math.sqrt((self.eta_inf + self.beta_inf) * self.lam + extra)
        return math.sqrt((self.eta_2 + self.beta_2) * self.lam)


@dataclass(frozen=True)
class AccumulatedEstimators:
    """Running sums of the step estimators over the accepted steps"""

    coarsen_inf: float = 0.0
    time_inf: float = 0.0
    space_inf_max: float = 0.0
    coarsen_2: float = 0.0
    time_2: float = 0.0
    space_2: float = 0.0
    mesh_change_sum: float = 0.0
    time_change_sum: float = 0.0
    initial_error: float = 0.0
    steps: int = 0

    @property
    def E_coarsen_inf(self) -> float:
        return math.sqrt(self.coarsen_inf)

    @property
    def E_time_inf(self) -> float:
        return math.sqrt(self.time_inf)

    @property
    def E_space_inf(self) -> float:
        return self.space_inf_max

    @property
    def E_coarsen_2(self) -> float:
        return math.sqrt(self.coarsen_2)

    @property
    def E_time_2(self) -> float:
        return math.sqrt(self.time_2)

    @property
    def E_space_2(self) -> float:
        return math.sqrt(self.space_2)

    def E_coarsen(self, norm: NormFlavor) -> float:
        return self.E_coarsen_inf if norm == "linf-l2" else self.E_coarsen_2

    def E_time(self, norm: NormFlavor) -> float:
        return self.E_time_inf if norm == "linf-l2" else self.E_time_2

    def E_space(self, norm: NormFlavor) -> float:
        return self.E_space_inf if norm == "linf-l2" else self.E_space_2

    def as_dict(self) -> Dict[str, float]:
        return {
            "E_coarsen_inf": self.E_coarsen_inf,
            "E_time_inf": self.E_time_inf,
            "E_space_inf": self.E_space_inf,
            "E_coarsen_2": self.E_coarsen_2,
            "E_time_2": self.E_time_2,
            "E_space_2": self.E_space_2,
            "initial_error": self.initial_error,
        }


def accumulate(step: ParabolicStepEstimators, acc: AccumulatedEstimators, lam: float,
               e0: Optional[float] = None) -> AccumulatedEstimators:
    """Add one accepted step; ``e0`` (||Pi^0 u0 - u0||) is carried alongside, never summed in"""
    return replace(
        acc,
        coarsen_inf=acc.coarsen_inf + step.gamma_inf * lam,
        time_inf=acc.time_inf + (step.eta_inf + step.beta_inf) * lam + step.eta_tilde_inf,
        space_inf_max=max(acc.space_inf_max, step.estimator_space),
        coarsen_2=acc.coarsen_2 + step.gamma_2 * lam,
        time_2=acc.time_2 + (step.eta_2 + step.beta_2) * lam,
        space_2=acc.space_2 + step.estimator_space ** 2 * lam,
        mesh_change_sum=acc.mesh_change_sum + step.mesh_change,
        time_change_sum=acc.time_change_sum + step.time_change,
        initial_error=acc.initial_error if e0 is None else e0,
        steps=acc.steps + 1,
    )
