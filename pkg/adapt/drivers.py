"""
Time-stepping drivers: fixed step, implicit step control (halve and retry)
and explicit step control (adjust by sqrt(2) after each step).

A step attempt never mutates the driver state; it returns a candidate state
that the driver either accepts or drops.
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from dg_space import FeFunction, l2_project_callable
from estimators import (
    AccumulatedEstimators,
    ErrorTracker,
    ParabolicStepEstimators,
    accumulate,
    coarsening_estimators,
    data_estimators,
    elliptic_estimate,
    error_squared_at,
    extra_space_estimator,
    iei,
    time_estimators,
)
from forms import GRepresentation, TimeSlice, backward_euler_step, compute_g, solve_counter, time_average
from mesh import Mesh, finest_common_coarsening
from shared.config import settings
from shared.errors import TimeStepUnderflowError
from shared.schemas import AdaptiveConfig, EtaTildeMode, NormFlavor, PenaltyConfig, RunLog, StepRecord
from .space import SpaceRegistry, initial_space_adaptivity, space_adaptivity

logger = logging.getLogger(__name__)

TIME_EPS = 1e-12


@dataclass(frozen=True)
class ParabolicProblem:
    """u_t + lap^2 u = f with u(0) = u0; ``exact`` enables error tracking"""

    initial: Callable
    forcing: Callable
    exact: Optional[Callable] = None
    name: str = "custom"


@dataclass(frozen=True)
class DriverState:
    t: float
    U: FeFunction
    g: GRepresentation
    indicators: np.ndarray
    acc: AccumulatedEstimators


@dataclass(frozen=True)
class StepAttempt:
    state: DriverState
    step: ParabolicStepEstimators
    space_iterations: int = 1
    space_converged: bool = True


class TimeStepDriver:
    """Backward Euler-dG evolution with the full set of step estimators"""

    def __init__(self, problem: ParabolicProblem, degree: int, penalty: PenaltyConfig,
                 norm: NormFlavor = "linf-l2", eta_tilde_mode: EtaTildeMode = "per-step",
                 config: Optional[AdaptiveConfig] = None, final_time: float = 1.0):
        self.problem = problem
        self.degree = degree
        self.penalty = penalty
        self.norm = norm
        self.eta_tilde_mode = eta_tilde_mode
        self.config = config
        self.final_time = config.final_time if config is not None else final_time
        self.registry = SpaceRegistry(degree)
        self.tracker = ErrorTracker(problem.exact) if problem.exact is not None else None
        self.records = []
        self.initial_dofs = 0
        self.initial_error = 0.0
        self._solves_at_start = solve_counter.value
        self._started = time.perf_counter()

    @property
    def adaptive(self) -> bool:
        return self.config is not None

    # setup
    def initial_state(self, mesh0: Mesh) -> DriverState:
        u0 = self.problem.initial
        if self.adaptive:
            result = initial_space_adaptivity(
                u0, mesh0, self.registry, self.config.xi_refine, self.config.initial_tolerance,
                max_iterations=self.config.max_space_iters, max_elements=self.config.max_elements,
            )
            U0, e0 = result.U, result.error
        else:
            U0 = l2_project_callable(self.registry.get(mesh0), u0)
            degree = settings.volume_quadrature_degree(self.degree)
            e0 = math.sqrt(error_squared_at(U0, lambda x, y, t: u0(x, y), 0.0, U0.mesh, degree))
        g0 = compute_g(U0, TimeSlice(self.problem.forcing, 0.0), self.penalty)
        estimate0 = elliptic_estimate(U0.space, U0, g0, self.penalty)
        acc = AccumulatedEstimators(space_inf_max=estimate0.total, initial_error=e0)
        if self.tracker is not None:
            self.tracker.start(0.0, U0)
        self.initial_dofs = U0.space.dim
        self.initial_error = e0
        logger.info(
            f"[adapt] initial state: {U0.mesh.n_elements} elements, ||u0 - U0||={e0:.3e}, "
            f"E_space={estimate0.total:.3e}"
        )
        return DriverState(t=0.0, U=U0, g=g0, indicators=estimate0.indicators, acc=acc)

    # one step
    def attempt(self, state: DriverState, lam: float) -> StepAttempt:
        t1 = state.t + lam
        if abs(t1 - self.final_time) <= TIME_EPS * max(1.0, self.final_time):
            t1 = self.final_time
        f = self.problem.forcing
        f_tilde = time_average(f, state.t, t1)
        if self.adaptive:
            result = space_adaptivity(
                state.U, f_tilde, self.config, lam, state.U.mesh, self.penalty, self.registry,
                previous_indicators=state.indicators,
            )
            U, g, estimate = result.U, result.g, result.estimate
            iterations, converged = result.iterations, result.converged
        else:
            space = self.registry.get(state.U.mesh)
            U = backward_euler_step(state.U, lam, f_tilde, space, self.penalty)
            g = compute_g(U, f_tilde, self.penalty)
            estimate = elliptic_estimate(space, U, g, self.penalty)
            iterations, converged = 1, True

        acc = state.acc
        coarse = coarsening_estimators(state.U, U.space, lam, acc.mesh_change_sum)
        evolution = time_estimators(g, state.g, lam, acc.time_change_sum)
        data = data_estimators(f, f_tilde, state.t, t1, U.mesh, settings.volume_quadrature_degree(self.degree))
        if self.eta_tilde_mode == "per-step":
            eta_tilde = estimate.total_squared
        else:
            mesh_hat = finest_common_coarsening(U.mesh, state.U.mesh)
            eta_tilde = extra_space_estimator(U, state.U, g, state.g, mesh_hat, self.penalty, "common-coarsening")
        step = ParabolicStepEstimators(
            lam=lam,
            gamma_inf=coarse.gamma_inf,
            gamma_2=coarse.gamma_2,
            eta_inf=evolution.eta_inf,
            eta_2=evolution.eta_2,
            beta_inf=data.beta_inf,
            beta_2=data.beta_2,
            eta_tilde_inf=eta_tilde,
            estimator_space=estimate.total,
            mesh_change=coarse.increment,
            time_change=evolution.increment,
        )
        new_state = DriverState(t=t1, U=U, g=g, indicators=estimate.indicators, acc=accumulate(step, acc, lam))
        return StepAttempt(new_state, step, iterations, converged)

    def accept(self, attempt: StepAttempt, rejected: int, started: float) -> DriverState:
        state, step = attempt.state, attempt.step
        acc = state.acc
        err_linf = err_l2 = ratio = None
        if self.tracker is not None:
            err_linf, err_l2 = self.tracker.advance(state.t, state.U)
            err = err_linf if self.norm == "linf-l2" else err_l2
            ratio = iei(err, acc.E_time(self.norm), acc.E_space(self.norm))
        record = StepRecord(
            n=len(self.records) + 1,
            t_n=state.t,
            lambda_n=step.lam,
            gamma_inf=step.gamma_inf,
            gamma_2=step.gamma_2,
            eta_inf=step.eta_inf,
            eta_2=step.eta_2,
            beta_inf=step.beta_inf,
            beta_2=step.beta_2,
            eta_tilde_inf=step.eta_tilde_inf,
            estimator_space=step.estimator_space,
            E_coarsen=acc.E_coarsen(self.norm),
            E_time=acc.E_time(self.norm),
            E_space=acc.E_space(self.norm),
            err_linf_l2=err_linf,
            err_l2_l2=err_l2,
            iei=ratio,
            dofs=state.U.space.dim,
            rejected_steps=rejected,
            space_iterations=attempt.space_iterations,
            space_converged=attempt.space_converged,
            wall_time=time.perf_counter() - started,
        )
        self.records.append(record)
        if not attempt.space_converged:
            logger.warning(f"[adapt] step {record.n}: space adaptivity did not converge")
        logger.info(
            f"[adapt] step {record.n}: t={record.t_n:.5f} lambda={record.lambda_n:.3e} dofs={record.dofs} "
            f"E_time={record.E_time:.3e} E_space={record.E_space:.3e}"
        )
        return state

    @property
    def controls_eta_tilde(self) -> bool:
        """Per-step eta~ does not shrink with lambda and is left to TOL_space"""
        return self.eta_tilde_mode == "common-coarsening"

    def time_increment(self, attempt: StepAttempt) -> float:
        return attempt.step.local_time_indicator(self.norm, self.controls_eta_tilde)

    def remaining(self, state: DriverState) -> float:
        return self.final_time - state.t

    def finished(self, state: DriverState) -> bool:
        return self.remaining(state) <= TIME_EPS * max(1.0, self.final_time)

    def run_log(self, state: DriverState, mode: str) -> RunLog:
        return RunLog(
            example=self.problem.name,
            degree=self.degree,
            mode=mode,
            norm=self.norm,
            records=self.records,
            initial_error=self.initial_error,
            initial_dofs=self.initial_dofs,
            accumulators=state.acc.as_dict(),
            linear_solves=solve_counter.value - self._solves_at_start,
            wall_time=time.perf_counter() - self._started,
        )

    def check_underflow(self, lam: float) -> None:
        minimum = self.config.minimum_step
        if lam < minimum:
            raise TimeStepUnderflowError(
                f"Time step {lam:.3e} fell below {minimum:.3e} (lambda0 * 2^-{self.config.max_halvings})"
            )


def fixed_time_step_run(problem: ParabolicProblem, mesh: Mesh, degree: int, lam: float, penalty: PenaltyConfig,
                        norm: NormFlavor = "linf-l2", eta_tilde_mode: EtaTildeMode = "common-coarsening",
                        final_time: float = 1.0) -> RunLog:
    """Fixed mesh, fixed time step (last step clipped to land on the final time)"""
    if not lam > 0.0:
        raise ValueError(f"Time step must be positive, got {lam}")
    driver = TimeStepDriver(problem, degree, penalty, norm, eta_tilde_mode, final_time=final_time)
    state = driver.initial_state(mesh)
    while not driver.finished(state):
        started = time.perf_counter()
        step = min(lam, driver.remaining(state))
        state = driver.accept(driver.attempt(state, step), 0, started)
    return driver.run_log(state, "uniform")


def implicit_time_step_control(config: AdaptiveConfig, problem: ParabolicProblem, mesh0: Mesh, degree: int,
                               penalty: PenaltyConfig) -> RunLog:
    """Halve and retry while the local E_time exceeds TOL_time; double after acceptance"""
    driver = TimeStepDriver(problem, degree, penalty, config.norm, config.eta_tilde_mode, config)
    state = driver.initial_state(mesh0)
    lam = config.lambda0
    while not driver.finished(state):
        started = time.perf_counter()
        lam = min(lam, driver.remaining(state))
        rejected = 0
        while True:
            attempt = driver.attempt(state, lam)
            local = driver.time_increment(attempt)
            if local <= config.tol_time:
                break
            rejected += 1
            logger.warning(
                f"[adapt] step rejected at t={state.t:.5f}: E_time={local:.3e} > {config.tol_time:.3e}, "
                f"halving lambda={lam:.3e}"
            )
            lam *= 0.5
            driver.check_underflow(lam)
        state = driver.accept(attempt, rejected, started)
        lam *= 2.0
    return driver.run_log(state, "adaptive-implicit")


def explicit_time_step_control(config: AdaptiveConfig, problem: ParabolicProblem, mesh0: Mesh, degree: int,
                               penalty: PenaltyConfig) -> RunLog:
    """Never repeat a step; scale the next step by 1/sqrt(2) or sqrt(2) from the local E_time"""
    driver = TimeStepDriver(problem, degree, penalty, config.norm, config.eta_tilde_mode, config)
    state = driver.initial_state(mesh0)
    lam = config.lambda0
    while not driver.finished(state):
        started = time.perf_counter()
        step = min(lam, driver.remaining(state))
        attempt = driver.attempt(state, step)
        local = driver.time_increment(attempt)
        state = driver.accept(attempt, 0, started)
        if local > config.tol_time:
            lam = step / math.sqrt(2.0)
        elif local < config.tol_time_min:
            lam = step * math.sqrt(2.0)
        else:
            lam = step
        driver.check_underflow(lam)
    return driver.run_log(state, "adaptive-explicit")
