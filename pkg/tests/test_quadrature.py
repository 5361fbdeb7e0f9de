"""Unit tests for quadrature module."""
from math import factorial

import numpy as np
import pytest


def monomial_integral(a: int, b: int) -> float:
    """Exact integral of x^a y^b over the reference triangle"""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


class TestTriangleRule:
    """Test triangle quadrature rules."""

    def test_reference_area(self):
        """Test weights sum to the reference area for every degree."""
        from quadrature.rules import triangle_rule

        for degree in range(1, 21):
            assert triangle_rule(degree).weights.sum() == pytest.approx(0.5, abs=1e-14)

    def test_monomials_exact_up_to_degree(self):
        """Test every monomial of total degree <= d is integrated exactly."""
        from quadrature.rules import triangle_rule

        for degree in (1, 2, 3, 4, 6, 9, 12):
            rule = triangle_rule(degree)
            x, y = rule.points[:, 0], rule.points[:, 1]
            for a in range(degree + 1):
                for b in range(degree + 1 - a):
                    value = float(np.sum(rule.weights * x ** a * y ** b))
                    assert value == pytest.approx(monomial_integral(a, b), rel=1e-12, abs=1e-15)

    def test_x2y2(self):
        """Test x^2 y^2 integrates to 1/180."""
        from quadrature.rules import triangle_rule

        rule = triangle_rule(4)
        x, y = rule.points[:, 0], rule.points[:, 1]
        assert float(np.sum(rule.weights * x ** 2 * y ** 2)) == pytest.approx(1.0 / 180.0, rel=1e-13)

    def test_degree_two_rule_misses_cubics(self):
        """Test the degree 2 rule is not exact for x^3."""
        from quadrature.rules import triangle_rule

        rule = triangle_rule(2)
        value = float(np.sum(rule.weights * rule.points[:, 0] ** 3))
        assert abs(value - 0.05) > 1e-4

    def test_points_inside_and_weights_positive(self):
        """Test interior points and positive weights."""
        from quadrature.rules import triangle_rule

        for degree in (3, 8, 20):
            rule = triangle_rule(degree)
            assert np.all(rule.weights > 0)
            assert np.all(rule.barycentric > 0)

    def test_unsupported_degree(self):
        """Test degrees outside 1..20 are rejected."""
        from quadrature.rules import triangle_rule

        with pytest.raises(ValueError):
            triangle_rule(0)
        with pytest.raises(ValueError):
            triangle_rule(21)


class TestLineRules:
    """Test edge and time rules."""

    def test_edge_rule_exactness(self):
        """Test the edge rule integrates s^k exactly on [0, 1]."""
        from quadrature.rules import edge_rule

        rule = edge_rule(7)
        for k in range(8):
            assert float(np.sum(rule.weights * rule.points ** k)) == pytest.approx(1.0 / (k + 1), rel=1e-13)

    def test_time_rule_three_points(self):
        """Test the 3-point time rule is exact for quintics."""
        from quadrature.rules import time_rule

        rule = time_rule(3)
        assert rule.size == 3
        assert float(np.sum(rule.weights * rule.points ** 5)) == pytest.approx(1.0 / 6.0, rel=1e-13)

    def test_invalid_line_rules(self):
        """Test invalid edge and time rule requests."""
        from quadrature.rules import edge_rule, time_rule

        with pytest.raises(ValueError):
            edge_rule(0)
        with pytest.raises(ValueError):
            time_rule(6)
