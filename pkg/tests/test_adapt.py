"""Unit tests for adapt module."""
import math

import numpy as np
import pytest


@pytest.fixture
def penalty():
    from shared.schemas import PenaltyConfig

    return PenaltyConfig(sigma0=20.0, xi0=20.0)


def zero_problem():
    from adapt import ParabolicProblem

    return ParabolicProblem(
        initial=lambda x, y: 0.0 * x,
        forcing=lambda x, y, t: 0.0 * x,
        exact=lambda x, y, t: 0.0 * x,
        name="zero",
    )


def config(**overrides):
    from shared.schemas import AdaptiveConfig

    values = dict(tol_time=math.inf, tol_space=math.inf, lambda0=0.125, final_time=1.0)
    values.update(overrides)
    return AdaptiveConfig(**values)


class TestDorflerMarking:
    """Test the bulk marking criterion."""

    def test_marks_bulk(self):
        """Test (4, 3, 2, 1) with xi = 0.75 marks positions 0, 1, 2."""
        from adapt import dorfler_mark

        np.testing.assert_array_equal(dorfler_mark([4.0, 3.0, 2.0, 1.0], 0.75), [0, 1, 2])

    def test_unsorted_and_ties(self):
        """Test marking follows values, ties in position order."""
        from adapt import dorfler_mark

        np.testing.assert_array_equal(dorfler_mark([1.0, 4.0, 1.0, 4.0], 0.4), [1])
        np.testing.assert_array_equal(dorfler_mark([1.0, 4.0, 1.0, 4.0], 0.6), [1, 3])

    def test_full_fraction_marks_everything(self):
        """Test xi = 1 marks every positive indicator."""
        from adapt import dorfler_mark

        np.testing.assert_array_equal(dorfler_mark([4.0, 3.0, 2.0, 1.0], 1.0), [0, 1, 2, 3])

    def test_zero_total(self):
        """Test zero indicators mark nothing."""
        from adapt import dorfler_mark

        assert dorfler_mark(np.zeros(5), 0.5).size == 0

    def test_invalid_input(self):
        """Test bad fractions and negative indicators are rejected."""
        from adapt import dorfler_mark

        with pytest.raises(ValueError):
            dorfler_mark([1.0, 2.0], 0.0)
        with pytest.raises(ValueError):
            dorfler_mark([1.0, 2.0], 1.5)
        with pytest.raises(ValueError):
            dorfler_mark([1.0, -2.0], 0.5)


class TestSpaceCoarsening:
    """Test coarsening by small indicators."""

    def test_disabled(self):
        """Test TOL_coarse = 0 keeps the mesh."""
        from adapt import space_coarsening
        from mesh import unit_square_mesh

        mesh = unit_square_mesh(2)
        assert space_coarsening(mesh, np.ones(mesh.n_elements), 0.0) is mesh

    def test_uniform_indicators(self):
        """Test a threshold above the mean coarsens every patch."""
        from adapt import space_coarsening
        from mesh import bisect, unit_square_mesh

        coarse = unit_square_mesh(1)
        fine = bisect(coarse, coarse.leaves)
        assert space_coarsening(fine, np.ones(fine.n_elements), 2.0) == coarse

    def test_wrong_length(self):
        """Test the indicator count must match the mesh."""
        from adapt import space_coarsening
        from mesh import unit_square_mesh

        with pytest.raises(ValueError):
            space_coarsening(unit_square_mesh(1), np.ones(3), 1.0)


class TestSpaceAdaptivity:
    """Test the per-step and initial space adaptivity loops."""

    def test_registry_reuses_spaces(self):
        """Test the registry hands back the same space for the same mesh."""
        from adapt import SpaceRegistry
        from mesh import bisect, unit_square_mesh

        registry = SpaceRegistry(2, capacity=2)
        mesh = unit_square_mesh(1)
        first = registry.get(mesh)
        assert registry.get(mesh) is first
        registry.get(bisect(mesh, mesh.leaves[:1]))
        registry.get(bisect(mesh, mesh.leaves))
        assert registry.get(mesh) is not first

    def test_infinite_tolerance_single_solve(self, penalty):
        """Test TOL_space = inf solves once on the incoming mesh."""
        from adapt import SpaceRegistry, space_adaptivity
        from dg_space import FeFunction
        from mesh import unit_square_mesh

        registry = SpaceRegistry(2)
        mesh = unit_square_mesh(1)
        U_prev = FeFunction.zeros(registry.get(mesh))
        result = space_adaptivity(U_prev, lambda x, y: np.sin(np.pi * x) + 0.0 * y, config(), 0.1, mesh,
                                  penalty, registry)
        assert result.converged
        assert result.iterations == 1
        assert result.mesh == mesh

    def test_refines_until_iteration_cap(self, penalty):
        """Test an unreachable tolerance refines and reports non-convergence."""
        from adapt import SpaceRegistry, space_adaptivity
        from dg_space import FeFunction
        from mesh import unit_square_mesh

        registry = SpaceRegistry(2)
        mesh = unit_square_mesh(1)
        U_prev = FeFunction.zeros(registry.get(mesh))
        result = space_adaptivity(U_prev, lambda x, y: np.exp(x * y), config(tol_space=1e-12, max_space_iters=3),
                                  0.1, mesh, penalty, registry)
        assert not result.converged
        assert result.iterations == 3
        assert len(result.marked) == 2
        assert result.mesh.n_elements > mesh.n_elements

    def test_element_cap(self, penalty):
        """Test refinement beyond the element cap aborts."""
        from adapt import SpaceRegistry, space_adaptivity
        from dg_space import FeFunction
        from mesh import unit_square_mesh
        from shared.errors import ResourceLimitError

        registry = SpaceRegistry(2)
        mesh = unit_square_mesh(1)
        U_prev = FeFunction.zeros(registry.get(mesh))
        with pytest.raises(ResourceLimitError):
            space_adaptivity(U_prev, lambda x, y: np.exp(x * y), config(tol_space=1e-12, max_elements=8),
                             0.1, mesh, penalty, registry)

    def test_initial_adaptivity(self):
        """Test initial refinement reduces the projection error."""
        from adapt import SpaceRegistry, initial_space_adaptivity
        from mesh import unit_square_mesh

        u0 = lambda x, y: np.exp(-20.0 * ((x - 0.3) ** 2 + (y - 0.6) ** 2))
        registry = SpaceRegistry(2)
        once = initial_space_adaptivity(u0, unit_square_mesh(1), registry, 0.5, math.inf)
        assert once.converged and once.iterations == 1
        refined = initial_space_adaptivity(u0, unit_square_mesh(1), registry, 0.5, 1e-12, max_iterations=3)
        assert not refined.converged
        assert refined.error < once.error


class TestDrivers:
    """Test the fixed-step, implicit and explicit time drivers."""

    def test_fixed_step_clips_last_step(self, penalty):
        """Test the final step lands exactly on T."""
        from adapt import fixed_time_step_run
        from mesh import unit_square_mesh

        log = fixed_time_step_run(zero_problem(), unit_square_mesh(0), 2, 0.3, penalty)
        assert len(log.records) == 4
        assert log.records[-1].t_n == 1.0
        assert log.records[-1].lambda_n == pytest.approx(0.1)
        assert log.final_errors == {"linf_l2": 0.0, "l2_l2": 0.0}
        assert log.mode == "uniform"
        assert log.total_dofs == 5 * 4 * 6

    def test_fixed_step_rejects_bad_step(self, penalty):
        """Test a non-positive fixed step is rejected."""
        from adapt import fixed_time_step_run
        from mesh import unit_square_mesh

        with pytest.raises(ValueError):
            fixed_time_step_run(zero_problem(), unit_square_mesh(0), 2, 0.0, penalty)

    def test_implicit_doubles_after_acceptance(self, penalty):
        """Test an infinite TOL_time never rejects and doubles lambda."""
        from adapt import implicit_time_step_control
        from bench.solutions import solution_u1
        from mesh import unit_square_mesh

        log = implicit_time_step_control(config(), solution_u1().problem(), unit_square_mesh(0), 2, penalty)
        assert [r.lambda_n for r in log.records] == pytest.approx([0.125, 0.25, 0.5, 0.125])
        assert log.rejected_steps == 0
        assert log.mode == "adaptive-implicit"

    def test_implicit_underflow(self, penalty):
        """Test repeated halving below lambda0 2^-max_halvings aborts."""
        from adapt import implicit_time_step_control
        from bench.solutions import solution_u1
        from mesh import unit_square_mesh
        from shared.errors import TimeStepUnderflowError

        with pytest.raises(TimeStepUnderflowError):
            implicit_time_step_control(config(tol_time=1e-30, max_halvings=2), solution_u1().problem(),
                                       unit_square_mesh(0), 2, penalty)

    def test_implicit_contract(self, penalty):
        """Test accepted steps respect TOL_time after rejections."""
        from adapt import TimeStepDriver, implicit_time_step_control
        from bench.acceptance import local_time_increments
        from bench.solutions import solution_u2
        from mesh import unit_square_mesh

        base = config(lambda0=0.05, final_time=0.1)
        driver = TimeStepDriver(solution_u2().problem(), 2, penalty, config=base)
        state = driver.initial_state(unit_square_mesh(1))
        first = driver.time_increment(driver.attempt(state, 0.05))
        tight = base.model_copy(update={"tol_time": 0.5 * first})
        log = implicit_time_step_control(tight, solution_u2().problem(), unit_square_mesh(1), 2, penalty)
        assert log.rejected_steps > 0
        assert min(r.lambda_n for r in log.records) < 0.05
        assert np.all(local_time_increments(log) <= tight.tol_time * (1.0 + 1e-12))
        assert log.records[-1].t_n == pytest.approx(0.1)

    def test_explicit_never_repeats(self, penalty):
        """Test the explicit driver takes one solve per step with infinite tolerances."""
        from adapt import explicit_time_step_control
        from bench.solutions import solution_u1
        from mesh import unit_square_mesh

        log = explicit_time_step_control(config(lambda0=0.25), solution_u1().problem(), unit_square_mesh(0), 2,
                                         penalty)
        assert [r.lambda_n for r in log.records] == pytest.approx([0.25] * 4)
        assert log.rejected_steps == 0
        assert log.linear_solves >= 4

    def test_step_attempt_does_not_mutate(self, penalty):
        """Test attempts leave the driver state untouched."""
        from adapt import TimeStepDriver
        from bench.solutions import solution_u1
        from mesh import unit_square_mesh

        driver = TimeStepDriver(solution_u1().problem(), 2, penalty, final_time=1.0)
        state = driver.initial_state(unit_square_mesh(0))
        before = state.U.vector.copy()
        driver.attempt(state, 0.5)
        driver.attempt(state, 0.25)
        assert state.t == 0.0
        np.testing.assert_array_equal(state.U.vector, before)
        assert driver.records == []


class TestRunLog:
    """Test the tabular run log."""

    def test_columns_and_empty_log(self):
        """Test an empty log gives the header only."""
        from adapt import CSV_COLUMNS, runlog_frame
        from shared.schemas import RunLog

        frame = runlog_frame(RunLog(example="u1", degree=2, mode="uniform", norm="linf-l2"))
        assert list(frame.columns) == CSV_COLUMNS
        assert frame.empty

    def test_rows(self, penalty):
        """Test one row per accepted step."""
        from adapt import fixed_time_step_run, runlog_frame
        from mesh import unit_square_mesh

        log = fixed_time_step_run(zero_problem(), unit_square_mesh(0), 2, 0.5, penalty)
        frame = runlog_frame(log)
        assert frame["n"].tolist() == [1, 2]
        assert frame["t_n"].tolist() == pytest.approx([0.5, 1.0])

    def test_replay_is_deterministic(self, penalty):
        """Test two adaptive runs from fresh forests produce the same log apart from wall time."""
        import pandas as pd
        from adapt import implicit_time_step_control, runlog_frame
        from bench.solutions import solution_u2
        from mesh import unit_square_mesh

        adaptive = config(lambda0=0.05, final_time=0.1, tol_space=1e-12, max_space_iters=2)
        frames = [
            runlog_frame(implicit_time_step_control(adaptive, solution_u2().problem(), unit_square_mesh(1), 2, penalty))
            for _ in range(2)
        ]
        first, second = (frame.drop(columns="wall_time") for frame in frames)
        pd.testing.assert_frame_equal(first, second)
