"""
Truncated univariate Taylor arithmetic (forward-mode, arbitrary order).

A :class:`Jet` holds coefficients c_k of f(s0 + h) = sum_k c_k h^k for
k = 0..order, vectorized over any array of expansion points s0.
"""
from math import factorial

import numpy as np


class Jet:
    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float)

    @classmethod
    def variable(cls, s, order: int) -> "Jet":
        s = np.asarray(s, dtype=float)
        coeffs = np.zeros((order + 1,) + s.shape)
        coeffs[0] = s
        if order >= 1:
            coeffs[1] = 1.0
        return cls(coeffs)

    @classmethod
    def constant(cls, value, order: int, shape=()) -> "Jet":
        coeffs = np.zeros((order + 1,) + tuple(shape))
        coeffs[0] = value
        return cls(coeffs)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    def derivatives(self) -> np.ndarray:
        """d^k f / ds^k at the expansion points, shape (order + 1, ...)"""
        scale = np.array([factorial(k) for k in range(self.order + 1)], dtype=float)
        return self.coeffs * scale.reshape((-1,) + (1,) * (self.coeffs.ndim - 1))

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order, self.coeffs.shape[1:])

    def __add__(self, other) -> "Jet":
        return Jet(self.coeffs + self._lift(other).coeffs)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return Jet(self.coeffs - self._lift(other).coeffs)

    def __rsub__(self, other) -> "Jet":
        return Jet(self._lift(other).coeffs - self.coeffs)

    def __neg__(self) -> "Jet":
        return Jet(-self.coeffs)

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            return Jet(self.coeffs * other)
        a, b = self.coeffs, other.coeffs
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for k in range(self.order + 1):
            out[k] = sum(a[j] * b[k - j] for j in range(k + 1))
        return Jet(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Jet":
        if not isinstance(n, int) or n < 0:
            raise ValueError(f"Jet powers must be nonnegative integers, got {n}")
        result = Jet.constant(1.0, self.order, self.coeffs.shape[1:])
        for _ in range(n):
            result = result * self
        return result


def exp(a: Jet) -> Jet:
    c = a.coeffs
    e = np.zeros_like(c)
    e[0] = np.exp(c[0])
    for k in range(1, a.order + 1):
        e[k] = sum(j * c[j] * e[k - j] for j in range(1, k + 1)) / k
    return Jet(e)


def _sin_cos(a: Jet):
    c = a.coeffs
    s, co = np.zeros_like(c), np.zeros_like(c)
    s[0], co[0] = np.sin(c[0]), np.cos(c[0])
    for k in range(1, a.order + 1):
        s[k] = sum(j * c[j] * co[k - j] for j in range(1, k + 1)) / k
        co[k] = -sum(j * c[j] * s[k - j] for j in range(1, k + 1)) / k
    return Jet(s), Jet(co)


def sin(a: Jet) -> Jet:
    return _sin_cos(a)[0]


def cos(a: Jet) -> Jet:
    return _sin_cos(a)[1]
