"""Unit tests for estimators module."""
import math

import numpy as np
import pytest


@pytest.fixture
def penalty():
    from shared.schemas import PenaltyConfig

    return PenaltyConfig(sigma0=20.0, xi0=20.0)


@pytest.fixture
def space():
    from dg_space import DgSpace
    from mesh import unit_square_mesh

    return DgSpace(unit_square_mesh(1), 2)


def smooth(x, y):
    return np.sin(3.0 * x) * np.exp(y)


class TestEllipticEstimator:
    """Test the residual estimator of the steady problem."""

    def test_lambda_exponent(self):
        """Test l = 2 for r = 2 and l = 0 for r >= 3."""
        from estimators import estimator_lambda

        assert estimator_lambda(2) == 2
        assert estimator_lambda(3) == 0

    def test_zero_data(self, space, penalty):
        """Test v = 0 and phi = 0 give a zero estimator."""
        from dg_space import FeFunction
        from estimators import elliptic_estimate

        estimate = elliptic_estimate(space, FeFunction.zeros(space), lambda x, y: 0.0 * x, penalty)
        assert estimate.total == 0.0
        assert estimate.indicators.shape == (space.mesh.n_elements,)

    def test_terms_sum_to_total(self, space, penalty):
        """Test the per-term totals add up to the squared estimator."""
        from dg_space import l2_project_callable
        from estimators import elliptic_estimate
        from estimators.elliptic import TERMS

        estimate = elliptic_estimate(space, l2_project_callable(space, smooth), smooth, penalty)
        assert sum(estimate.term_total(name) for name in TERMS) == pytest.approx(estimate.total_squared)
        assert np.all(estimate.indicators >= 0.0)

    def test_weights_from_coarser_mesh(self, space, penalty):
        """Test evaluating on a refinement with coarse weights matches the coarse estimator."""
        from dg_space import DgSpace, l2_project_callable, transfer
        from estimators import estimate_on
        from mesh import bisect

        v = l2_project_callable(space, smooth)
        fine = DgSpace(bisect(space.mesh, space.mesh.leaves[:3]), 2)
        phi = lambda x, y: x ** 2 * y ** 2
        coarse_estimate = estimate_on(space.mesh, v, phi, penalty)
        fine_estimate = estimate_on(space.mesh, transfer(v, fine), phi, penalty)
        np.testing.assert_allclose(fine_estimate.indicators, coarse_estimate.indicators, rtol=1e-8)

    def test_constant_must_be_positive(self):
        """Test non-positive estimator constants are rejected."""
        from estimators import EstimatorConstants

        with pytest.raises(ValueError):
            EstimatorConstants(0.0)


class TestParabolicEstimators:
    """Test coarsening, time and data estimators and their accumulation."""

    def test_gamma_vanishes_under_refinement(self, space):
        """Test nested refinement produces no coarsening error."""
        from dg_space import DgSpace, l2_project_callable
        from estimators import coarsening_estimators
        from mesh import bisect

        U = l2_project_callable(space, smooth)
        fine = DgSpace(bisect(space.mesh, space.mesh.leaves), 2)
        estimate = coarsening_estimators(U, fine, 0.1)
        assert estimate.gamma_inf == pytest.approx(0.0, abs=1e-12)

    def test_gamma_after_coarsening(self, space):
        """Test ||U - Pi U||^2 against ||U||^2 - ||Pi U||^2."""
        from dg_space import DgSpace, l2_project_callable, transfer
        from estimators import coarsening_estimators
        from mesh import bisect, coarsen

        fine = DgSpace(bisect(space.mesh, space.mesh.leaves), 2)
        U = l2_project_callable(fine, smooth)
        coarse = DgSpace(coarsen(fine.mesh, fine.mesh.leaves), 2)
        lam = 0.25
        estimate = coarsening_estimators(U, coarse, lam, history=1.0)
        expected = float(U.vector @ U.vector - transfer(U, coarse).vector @ transfer(U, coarse).vector)
        assert estimate.increment == pytest.approx(expected, rel=1e-8)
        assert estimate.gamma_inf == pytest.approx(expected / lam, rel=1e-8)
        assert estimate.gamma_2 == pytest.approx(expected + 1.0, rel=1e-8)

    def test_time_estimator(self, space, penalty):
        """Test ||g^n - g^{n-1}||^2 for g^n = phi - Pi phi and g^{n-1} = 0."""
        from dg_space import FeFunction, integrate_squared, l2_project_callable
        from estimators import time_estimators
        from forms import compute_g

        zero = FeFunction.zeros(space)
        g_n = compute_g(zero, smooth, penalty)
        g_prev = compute_g(zero, lambda x, y: 0.0 * x, penalty)
        projected = l2_project_callable(space, smooth)
        expected = integrate_squared(smooth, space.mesh, 8) - float(projected.vector @ projected.vector)
        lam = 0.5
        estimate = time_estimators(g_n, g_prev, lam, degree=8)
        assert estimate.eta_inf == pytest.approx(expected * lam, rel=1e-6)
        assert estimate.eta_2 == pytest.approx(expected * lam ** 2, rel=1e-6)

    def test_time_estimator_unchanged_g(self, space, penalty):
        """Test identical g on both steps gives zero."""
        from dg_space import l2_project_callable
        from estimators import time_estimators
        from forms import compute_g

        g = compute_g(l2_project_callable(space, smooth), smooth, penalty)
        assert time_estimators(g, g, 0.1).eta_inf == pytest.approx(0.0, abs=1e-20)

    def test_data_estimator_linear_in_time(self, space):
        """Test beta = 1/12 for f = t on [0, 1]."""
        from estimators import data_estimators
        from forms import time_average

        f = lambda x, y, t: t + 0.0 * x
        estimate = data_estimators(f, time_average(f, 0.0, 1.0), 0.0, 1.0, space.mesh, 4)
        assert estimate.beta_inf == pytest.approx(1.0 / 12.0, rel=1e-12)
        assert estimate.beta_2 == pytest.approx(1.0 / 12.0, rel=1e-12)

    def test_time_estimator_across_mesh_change(self, space, penalty):
        """Test ||g^n - g^{n-1}||^2 when the step refines, coarsens or moves the mesh."""
        from dg_space import DgSpace, l2_project_callable, quadrature, sample
        from estimators import time_estimators
        from forms import compute_g
        from mesh import bisect, overlay
        from quadrature.rules import triangle_rule

        f = lambda x, y: 1.0 + x * y ** 2
        meshes = {
            "coarse": space.mesh,
            "fine": bisect(space.mesh, space.mesh.leaves),
            "left": bisect(space.mesh, space.mesh.leaves[:2]),
            "right": bisect(space.mesh, space.mesh.leaves[-2:]),
        }
        g = {name: compute_g(l2_project_callable(DgSpace(mesh, 2), smooth), f, penalty)
             for name, mesh in meshes.items()}
        lam = 0.1
        for new, old in (("fine", "coarse"), ("coarse", "fine"), ("left", "right")):
            reference = overlay(meshes[new], meshes[old])
            for _ in range(2):
                reference = bisect(reference, reference.leaves)
            points, weights = quadrature(reference, triangle_rule(8))
            difference = sample(g[new], reference, points) - sample(g[old], reference, points)
            expected = lam * float(np.sum(weights * difference ** 2))
            assert time_estimators(g[new], g[old], lam, degree=8).eta_inf == pytest.approx(expected, rel=1e-8)

    def test_data_estimator_oscillating_load(self, space):
        """Test beta for f = sin(20 pi t) x y over a short step against a composite Gauss rule."""
        from estimators import data_estimators
        from forms import time_average

        f = lambda x, y, t: np.sin(20.0 * np.pi * t) * x * y
        t0, lam = 0.3, 5e-4
        f_tilde = time_average(f, t0, t0 + lam)
        mean = float(f_tilde(np.ones(1), np.ones(1))[0])
        nodes, node_weights = np.polynomial.legendre.leggauss(2)
        panels = np.linspace(t0, t0 + lam, 33)
        expected = 0.0
        for a, b in zip(panels[:-1], panels[1:]):
            t = 0.5 * (a + b) + 0.5 * (b - a) * nodes
            expected += 0.5 * (b - a) * float(np.sum(node_weights * (mean - np.sin(20.0 * np.pi * t)) ** 2))
        expected /= 9.0
        estimate = data_estimators(f, f_tilde, t0, t0 + lam, space.mesh, 8)
        assert estimate.beta_inf == pytest.approx(expected, rel=1e-6)
        assert estimate.beta_2 == pytest.approx(lam * expected, rel=1e-6)

    def test_extra_space_on_common_coarsening(self, space, penalty):
        """Test eta~ against a direct evaluation with weights from the finest common coarsening."""
        from dg_space import DgSpace, edge_traces, l2_project_callable, quadrature, sample
        from estimators import EstimatorConstants, extra_space_estimator
        from forms import compute_g
        from mesh import bisect, finest_common_coarsening, host_positions, overlay
        from quadrature.rules import edge_rule, triangle_rule

        prev_mesh = bisect(space.mesh, space.mesh.leaves[:2])
        new_mesh = bisect(space.mesh, space.mesh.leaves[-2:])
        U_prev = l2_project_callable(DgSpace(prev_mesh, 2), smooth)
        U_n = l2_project_callable(DgSpace(new_mesh, 2), lambda x, y: smooth(x, y) + x * y)
        g_prev = compute_g(U_prev, lambda x, y: x * y ** 2, penalty)
        g_n = compute_g(U_n, lambda x, y: 1.0 + x ** 3, penalty)
        hat = finest_common_coarsening(new_mesh, prev_mesh)
        fine = overlay(new_mesh, prev_mesh)
        assert hat != fine
        v, phi, lam = U_n - U_prev, g_n - g_prev, 2

        hosts = host_positions(fine, hat)
        points, weights = quadrature(fine, triangle_rule(10))
        residual = sample(phi, fine, points) - sample(v, fine, points, derivative="bilap")
        expected = float(np.sum(hat.h[hosts] ** (8 - lam) * np.sum(weights * residual ** 2, axis=1)))

        shared = {frozenset(pair.tolist()): e for e, pair in enumerate(hat.edge_elements) if pair[1] >= 0}
        trace = edge_traces(v, fine, edge_rule(6))
        for e, (p, m) in enumerate(fine.edge_elements):
            midpoint = fine.vertices[fine.edges[e]].mean(axis=0)
            if m < 0:
                weight_edge = next(
                    k for k in np.flatnonzero(hat.boundary_mask)
                    if np.isclose(np.linalg.norm(hat.vertices[hat.edges[k, 0]] - midpoint)
                                  + np.linalg.norm(hat.vertices[hat.edges[k, 1]] - midpoint),
                                  hat.edge_lengths[k]))
                face_h, edge_h = hat.face_weights[weight_edge], hat.edge_lengths[weight_edge]
            elif hosts[p] != hosts[m]:
                weight_edge = shared[frozenset((int(hosts[p]), int(hosts[m])))]
                face_h, edge_h = hat.face_weights[weight_edge], hat.edge_lengths[weight_edge]
            else:
                face_h = edge_h = hat.h[hosts[p]]
            w = trace.weights[e]
            if m >= 0:
                expected += face_h ** (7 - lam) * np.sum(w * trace.gradlap_jump[e] ** 2)
                expected += face_h ** (5 - lam) * np.sum(w * trace.lap_difference[e] ** 2)
            expected += edge_h ** (3 - lam) * (1.0 + penalty.xi0 ** 2) * np.sum(w * trace.grad_jump[e] ** 2)
            expected += edge_h ** (1 - lam) * (1.0 + penalty.sigma0 ** 2) * np.sum(w * trace.value_difference[e] ** 2)

        actual = extra_space_estimator(U_n, U_prev, g_n, g_prev, hat, penalty, constants=EstimatorConstants(1.0))
        assert actual == pytest.approx(expected, rel=1e-8)


    def test_extra_space_modes(self, space, penalty):
        """Test the per-step mode equals the plain step estimator."""
        from dg_space import l2_project_callable
        from estimators import elliptic_estimate, extra_space_estimator
        from forms import compute_g

        U = l2_project_callable(space, smooth)
        g = compute_g(U, smooth, penalty)
        per_step = extra_space_estimator(U, U, g, g, space.mesh, penalty, "per-step")
        assert per_step == pytest.approx(elliptic_estimate(space, U, g, penalty).total_squared)
        assert extra_space_estimator(U, U, g, g, space.mesh, penalty) == pytest.approx(0.0, abs=1e-18)
        with pytest.raises(ValueError):
            extra_space_estimator(U, U, g, g, space.mesh, penalty, "sometimes")

    def test_accumulation(self):
        """Test gamma_inf = 4 over lambda = 0.25 accumulates to E_coarsen = 1."""
        from estimators import AccumulatedEstimators, ParabolicStepEstimators, accumulate

        step = ParabolicStepEstimators(lam=0.25, gamma_inf=4.0, eta_inf=2.0, beta_inf=2.0, estimator_space=3.0)
        acc = accumulate(step, AccumulatedEstimators(space_inf_max=5.0), 0.25)
        assert acc.E_coarsen_inf == pytest.approx(1.0)
        assert acc.E_time_inf == pytest.approx(1.0)
        assert acc.E_space_inf == 5.0
        assert acc.steps == 1
        assert step.local_time_indicator("linf-l2") == pytest.approx(1.0)

    def test_time_indicator_eta_tilde(self):
        """Test eta~ enters the linf-l2 increment only when requested."""
        from estimators import ParabolicStepEstimators

        step = ParabolicStepEstimators(lam=0.5, eta_inf=1.0, beta_inf=1.0, eta_tilde_inf=3.0, eta_2=2.0)
        assert step.local_time_indicator("linf-l2") == pytest.approx(2.0)
        assert step.local_time_indicator("linf-l2", include_eta_tilde=False) == pytest.approx(1.0)
        assert step.local_time_indicator("l2-l2") == pytest.approx(1.0)

    def test_negative_values_rejected(self):
        """Test estimators must be nonnegative."""
        from estimators import ParabolicStepEstimators

        with pytest.raises(ValueError):
            ParabolicStepEstimators(lam=0.1, eta_inf=-1.0)


class TestNorms:
    """Test exact error norms, EOC and IEI."""

    def test_eoc_power_law(self):
        """Test EOC is exact on power laws."""
        from estimators import eoc, eoc_column

        h = [2.0 ** (-k / 2) for k in range(5)]
        errors = [3.0 * value ** 2 for value in h]
        assert eoc(errors, h, 0) == pytest.approx(2.0)
        column = eoc_column(errors, h)
        assert column[0] is None
        np.testing.assert_allclose(column[1:], 2.0)

    def test_eoc_example(self):
        """Test errors 1, 0.25 at h = 1, 0.5 give order 2."""
        from estimators import eoc

        assert eoc([1.0, 0.25], [1.0, 0.5], 0) == pytest.approx(2.0)

    def test_eoc_undefined(self):
        """Test EOC is None for zero errors, equal sizes and missing rows."""
        from estimators import eoc

        assert eoc([0.0, 1.0], [1.0, 0.5], 0) is None
        assert eoc([1.0, 0.5], [1.0, 1.0], 0) is None
        assert eoc([1.0], [1.0], 0) is None

    def test_iei(self):
        """Test IEI = err / (E_time + E_space)."""
        from estimators import iei

        assert iei(1.0, 1.0, 1.0) == pytest.approx(0.5)
        assert iei(1.0, 0.0, 0.0) is None
        assert iei(None, 1.0, 1.0) is None
        assert iei(1.0, math.inf, 1.0) is None

    def test_exactly_represented_solution(self, space):
        """Test u = t q with q quadratic is tracked with zero error."""
        from dg_space import l2_project_callable
        from estimators import exact_error_norms

        q = lambda x, y: 1.0 + x * y - y ** 2
        exact = lambda x, y, t: t * q(x, y)
        trajectory = [(t, l2_project_callable(space, lambda x, y, t=t: exact(x, y, t))) for t in (0.0, 0.5, 1.0)]
        linf, l2 = exact_error_norms(trajectory, exact)
        assert linf == pytest.approx(0.0, abs=1e-10)
        assert l2 == pytest.approx(0.0, abs=1e-10)

    def test_constant_error(self, space):
        """Test a unit error over a unit interval."""
        from dg_space import FeFunction
        from estimators import interval_errors

        zero = FeFunction.zeros(space)
        sampled, integral = interval_errors(0.0, zero, 1.0, zero, lambda x, y, t: 1.0 + 0.0 * x)
        assert sampled == pytest.approx(1.0)
        assert integral == pytest.approx(1.0)

    def test_tracker_requires_start(self, space):
        """Test advancing before start raises."""
        from dg_space import FeFunction
        from estimators import ErrorTracker

        with pytest.raises(ValueError):
            ErrorTracker(lambda x, y, t: 0.0 * x).advance(1.0, FeFunction.zeros(space))
