"""
Manufactured solutions of u_t + lap^2 u = f on the unit square.

Every solution is separable, u(x, y, t) = T(t) X(x) X(y) with the spatial
profile X(s) = sin^2(pi s) exp(-a s^2). Profile and temporal derivatives
come from Taylor-mode differentiation, so no derivative is expanded by hand.
"""
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from adapt import ParabolicProblem
from . import taylor

SPATIAL_ORDER = 4


def profile_derivatives(s, decay: float, order: int = SPATIAL_ORDER) -> np.ndarray:
    """d^k X / ds^k for k = 0..order, stacked on the first axis"""
    jet = taylor.Jet.variable(s, order)
    return (taylor.sin(np.pi * jet) ** 2 * taylor.exp(-decay * jet * jet)).derivatives()


def sine_amplitude(amplitude: float, frequency: float) -> Callable[[float], Tuple[float, float]]:
    """t -> (T(t), T'(t)) for T(t) = amplitude * sin(frequency * pi * t)"""

    def temporal(t):
        jet = taylor.Jet.variable(t, 1)
        values = (taylor.sin(frequency * np.pi * jet) * amplitude).derivatives()
        return values[0], values[1]

    return temporal


def constant_amplitude(t):
    return np.ones_like(np.asarray(t, dtype=float)), np.zeros_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class ManufacturedSolution:
    name: str
    decay: float
    temporal: Callable

    def _factors(self, x, y):
        return profile_derivatives(x, self.decay), profile_derivatives(y, self.decay)

    def value(self, x, y, t):
        X, Y = self._factors(x, y)
        return self.temporal(t)[0] * X[0] * Y[0]

    def time_derivative(self, x, y, t):
        X, Y = self._factors(x, y)
        return self.temporal(t)[1] * X[0] * Y[0]

    def gradient(self, x, y, t):
        X, Y = self._factors(x, y)
        amplitude = self.temporal(t)[0]
        return np.stack([amplitude * X[1] * Y[0], amplitude * X[0] * Y[1]], axis=-1)

    def laplacian(self, x, y, t):
        X, Y = self._factors(x, y)
        return self.temporal(t)[0] * (X[2] * Y[0] + X[0] * Y[2])

    def grad_laplacian(self, x, y, t):
        X, Y = self._factors(x, y)
        amplitude = self.temporal(t)[0]
        return np.stack([amplitude * (X[3] * Y[0] + X[1] * Y[2]),
                         amplitude * (X[2] * Y[1] + X[0] * Y[3])], axis=-1)

    def bilaplacian(self, x, y, t):
        X, Y = self._factors(x, y)
        return self.temporal(t)[0] * (X[4] * Y[0] + 2.0 * X[2] * Y[2] + X[0] * Y[4])

    def forcing(self, x, y, t):
        """f = u_t + lap^2 u"""
        return self.time_derivative(x, y, t) + self.bilaplacian(x, y, t)

    def initial(self, x, y):
        return self.value(x, y, 0.0)

    def steady_load(self, x, y):
        """lap^2 u at t = 0, the load of the steady problem"""
        return self.bilaplacian(x, y, 0.0)

    def problem(self) -> ParabolicProblem:
        return ParabolicProblem(initial=self.initial, forcing=self.forcing, exact=self.value, name=self.name)


def solution_u1() -> ManufacturedSolution:
    """100 sin(pi t) sin^2(pi x) sin^2(pi y) exp(-10 (x^2 + y^2))"""
    return ManufacturedSolution("u1", 10.0, sine_amplitude(100.0, 1.0))


def solution_u2() -> ManufacturedSolution:
    """sin(20 pi t) sin^2(pi x) sin^2(pi y) exp(-10 (x^2 + y^2))"""
    return ManufacturedSolution("u2", 10.0, sine_amplitude(1.0, 20.0))


def steady_solution() -> ManufacturedSolution:
    """sin^2(pi x) sin^2(pi y), constant in time"""
    return ManufacturedSolution("steady", 0.0, constant_amplitude)


EXAMPLES = {"u1": solution_u1, "u2": solution_u2}


def manufactured_solution(example: str) -> ManufacturedSolution:
    try:
        return EXAMPLES[example]()
    except KeyError:
        raise ValueError(f"Unknown example '{example}', expected one of {sorted(EXAMPLES)}")
