"""
Exact space-time errors against a manufactured solution, EOC and IEI.

The discrete solution is extended linearly in time between the nodes, so on
[t_{n-1}, t_n] the error is e(t) = (1 - s) U^{n-1} + s U^n - u(t).
"""
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from dg_space import FeCombination, FeFunction, common_mesh, quadrature
from mesh import Mesh
from quadrature.rules import time_rule, triangle_rule
from shared.config import settings

L2_TIME_POINTS = 2


def error_squared_at(U, exact: Callable, t: float, mesh: Mesh, degree: int) -> float:
    """||U - u(., t)||^2 integrated on ``mesh``"""
    points, weights = quadrature(mesh, triangle_rule(degree))
    values = U.evaluate_on(mesh, points) - exact(points[..., 0], points[..., 1], t)
    return float(np.sum(weights * values ** 2))


def interval_errors(t0: float, U0: FeFunction, t1: float, U1: FeFunction, exact: Callable,
                    degree: Optional[int] = None) -> Tuple[float, float]:
    """(max of ||e|| at the midpoint and t1, int_{t0}^{t1} ||e||^2 dt) for the linear extension"""
    degree = degree if degree is not None else settings.volume_quadrature_degree(U1.space.degree)
    mesh = common_mesh([U0.mesh, U1.mesh])
    lam = t1 - t0

    def at(s: float) -> float:
        combination = FeCombination(((1.0 - s, U0), (s, U1)))
        return error_squared_at(combination, exact, t0 + s * lam, mesh, degree)

    rule = time_rule(L2_TIME_POINTS)
    integral = lam * sum(w * at(s) for s, w in zip(rule.points, rule.weights))
    sampled = max(math.sqrt(at(0.5)), math.sqrt(at(1.0)))
    return sampled, integral


class ErrorTracker:
    """Running L-inf(L2) and L2(L2) errors along an accepted trajectory"""

    def __init__(self, exact: Callable, degree: Optional[int] = None):
        self.exact = exact
        self.degree = degree
        self.linf = 0.0
        self.l2_squared = 0.0
        self._last: Optional[Tuple[float, FeFunction]] = None

    def start(self, t0: float, U0: FeFunction) -> float:
        degree = self.degree if self.degree is not None else settings.volume_quadrature_degree(U0.space.degree)
        initial = math.sqrt(error_squared_at(U0, self.exact, t0, U0.mesh, degree))
        self.linf = initial
        self.l2_squared = 0.0
        self._last = (t0, U0)
        return initial

    def advance(self, t1: float, U1: FeFunction) -> Tuple[float, float]:
        if self._last is None:
            raise ValueError("ErrorTracker.advance called before start")
        t0, U0 = self._last
        sampled, integral = interval_errors(t0, U0, t1, U1, self.exact, self.degree)
        self.linf = max(self.linf, sampled)
        self.l2_squared += integral
        self._last = (t1, U1)
        return self.linf, self.l2

    @property
    def l2(self) -> float:
        return math.sqrt(self.l2_squared)


def exact_error_norms(trajectory: Sequence[Tuple[float, FeFunction]], exact: Callable,
                      degree: Optional[int] = None) -> Tuple[float, float]:
    """(err_LinfL2, err_L2L2) of a trajectory [(t_0, U^0), (t_1, U^1), ...]"""
    if not trajectory:
        raise ValueError("Empty trajectory")
    tracker = ErrorTracker(exact, degree)
    tracker.start(*trajectory[0])
    for t, U in trajectory[1:]:
        tracker.advance(t, U)
    return tracker.linf, tracker.l2


def eoc(a: Sequence[float], h: Sequence[float], i: int) -> Optional[float]:
    """log(a[i+1] / a[i]) / log(h[i+1] / h[i]); None when undefined"""
    if i < 0 or i + 1 >= len(a) or i + 1 >= len(h):
        return None
    if a[i] is None or a[i + 1] is None or a[i] <= 0 or a[i + 1] <= 0 or h[i] <= 0 or h[i + 1] <= 0:
        return None
    denominator = math.log(h[i + 1] / h[i])
    if denominator == 0.0:
        return None
    return math.log(a[i + 1] / a[i]) / denominator


def eoc_column(a: Sequence[float], h: Sequence[float]) -> List[Optional[float]]:
    """EOC per row against the previous row (first row None)"""
    return [None] + [eoc(a, h, i) for i in range(len(a) - 1)]


def iei(err: Optional[float], E_time: float, E_space: float) -> Optional[float]:
    """err / (E_time + E_space); None when undefined"""
    total = E_time + E_space
    if err is None or not total > 0.0 or not math.isfinite(total):
        return None
    return err / total
