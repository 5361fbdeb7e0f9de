"""
Convergence and adaptivity studies on the manufactured solutions.
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from adapt import explicit_time_step_control, fixed_time_step_run, implicit_time_step_control
from dg_space import DgSpace
from estimators import elliptic_estimate, eoc_column, error_squared_at, iei
from forms import check_positivity, solve_elliptic
from mesh import unit_square_mesh
from shared.config import settings
from shared.schemas import AdaptiveConfig, PenaltyConfig, RunLog, RunSpec, RunSummary
from .solutions import manufactured_solution, steady_solution

logger = logging.getLogger(__name__)

DT_EXPONENTS = {"h3": 3, "h2": 2}
MATCH_TOLERANCE = 0.1
MAX_MATCH_ATTEMPTS = 4


def uniform_time_step(h: float, dt_law: str) -> float:
    """lambda = (max h)^3 or (max h)^2"""
    try:
        return h ** DT_EXPONENTS[dt_law]
    except KeyError:
        raise ValueError(f"Unknown time-step law '{dt_law}'")


def predicted_dofs(level: int, degree: int) -> int:
    """Dimension of the dG space on the uniform mesh of a level (4 macro triangles)"""
    return 4 * 2 ** level * (degree + 1) * (degree + 2) // 2


def summarize(log: RunLog) -> RunSummary:
    return RunSummary(
        example=log.example,
        r=log.degree,
        mode=log.mode,
        final_errors=log.final_errors,
        accumulators=log.accumulators,
        total_dofs=log.total_dofs,
        rejected_steps=log.rejected_steps,
    )


@dataclass
class StudyResult:
    """Per-level (or per-run) table plus the underlying run logs"""

    table: pd.DataFrame
    logs: List[RunLog] = field(default_factory=list)
    comparison: Optional[Dict[str, Optional[float]]] = None

    @property
    def summary(self) -> Optional[RunSummary]:
        return summarize(self.logs[-1]) if self.logs else None


def _accumulator(log: RunLog, key: str) -> float:
    return log.accumulators.get(key, 0.0)


def _uniform_row(level: int, h: float, lam: float, log: RunLog) -> dict:
    err_linf, err_l2 = log.final_errors["linf_l2"], log.final_errors["l2_l2"]
    E_time_inf, E_space_inf = _accumulator(log, "E_time_inf"), _accumulator(log, "E_space_inf")
    E_time_2, E_space_2 = _accumulator(log, "E_time_2"), _accumulator(log, "E_space_2")
    return {
        "level": level,
        "h": h,
        "lambda": lam,
        "dofs": log.initial_dofs,
        "steps": len(log.records),
        "total_dofs": log.total_dofs,
        "err_linf_l2": err_linf,
        "err_l2_l2": err_l2,
        "E_coarsen_inf": _accumulator(log, "E_coarsen_inf"),
        "E_time_inf": E_time_inf,
        "E_space_inf": E_space_inf,
        "E_coarsen_2": _accumulator(log, "E_coarsen_2"),
        "E_time_2": E_time_2,
        "E_space_2": E_space_2,
        "iei_linf_l2": iei(err_linf, E_time_inf, E_space_inf),
        "iei_l2_l2": iei(err_l2, E_time_2, E_space_2),
        "wall_time": log.wall_time,
    }


def _with_eoc(table: pd.DataFrame, columns: Sequence[str]) -> pd.DataFrame:
    h = table["h"].tolist()
    for column in columns:
        table[f"eoc_{column}"] = eoc_column(table[column].tolist(), h)
    return table


def uniform_study(spec: RunSpec) -> StudyResult:
    """Fixed meshes of levels spec.levels, lambda from the time-step law, over [0, T]"""
    if spec.mode != "uniform":
        raise ValueError(f"uniform_study needs mode 'uniform', got '{spec.mode}'")
    solution = manufactured_solution(spec.example)
    first, last = spec.levels
    rows, logs = [], []
    for level in range(first, last + 1):
        if predicted_dofs(level, spec.degree) > spec.max_dofs:
            logger.warning(
                f"[bench] uniform study truncated at level {level - 1}: "
                f"{predicted_dofs(level, spec.degree)} dofs exceed the cap of {spec.max_dofs}"
            )
            break
        mesh = unit_square_mesh(level)
        h = float(mesh.h.max())
        lam = uniform_time_step(h, spec.dt_law)
        logger.info(f"[bench] {spec.example} r={spec.degree} level {level}: h={h:.4f} lambda={lam:.3e}")
        check_positivity(DgSpace(mesh, spec.degree), spec.penalty)
        log = fixed_time_step_run(
            solution.problem(), mesh, spec.degree, lam, spec.penalty, spec.norm,
            eta_tilde_mode=spec.eta_tilde_mode, final_time=spec.final_time,
        )
        rows.append(_uniform_row(level, h, lam, log))
        logs.append(log)
    table = pd.DataFrame(rows)
    if not table.empty:
        estimator = "E_time_inf" if spec.norm == "linf-l2" else "E_time_2"
        table["estimator"] = table[estimator] + table[estimator.replace("time", "space")]
        table = _with_eoc(table, ["err_linf_l2", "err_l2_l2", "estimator"])
    return StudyResult(table, logs)


def elliptic_study(degree: int, levels: Tuple[int, int], penalty: Optional[PenaltyConfig] = None) -> pd.DataFrame:
    """dG solve of lap^2 u = phi for the steady solution on uniform levels"""
    penalty = penalty if penalty is not None else PenaltyConfig.for_degree(degree)
    solution = steady_solution()
    rows = []
    for level in range(levels[0], levels[1] + 1):
        started = time.perf_counter()
        space = DgSpace(unit_square_mesh(level), degree)
        check_positivity(space, penalty)
        U = solve_elliptic(space, solution.steady_load, penalty)
        degree_q = settings.volume_quadrature_degree(degree)
        error = math.sqrt(error_squared_at(U, solution.value, 0.0, space.mesh, degree_q))
        estimate = elliptic_estimate(space, U, solution.steady_load, penalty).total
        rows.append({
            "level": level,
            "h": float(space.mesh.h.max()),
            "dofs": space.dim,
            "error": error,
            "estimator": estimate,
            "iei": iei(error, 0.0, estimate),
            "wall_time": time.perf_counter() - started,
        })
        logger.info(f"[bench] elliptic r={degree} level {level}: error={error:.3e} estimator={estimate:.3e}")
    return _with_eoc(pd.DataFrame(rows), ["error", "estimator"])


def adaptive_config(spec: RunSpec) -> AdaptiveConfig:
    return AdaptiveConfig(
        tol_time=spec.tol_time,
        tol_time_min=spec.tol_time_min,
        tol_space=spec.tol_space,
        tol_coarse=spec.tol_coarse,
        lambda0=spec.lambda0,
        final_time=spec.final_time,
        xi_refine=settings.xi_refine,
        max_space_iters=settings.max_space_iters,
        max_halvings=settings.max_halvings,
        max_elements=settings.max_elements,
        eta_tilde_mode=spec.eta_tilde_mode,
        norm=spec.norm,
    )


DRIVERS = {
    "adaptive-implicit": implicit_time_step_control,
    "adaptive-explicit": explicit_time_step_control,
}


def errors_match(uniform_error: Optional[float], adaptive_error: Optional[float],
                 tolerance: float = MATCH_TOLERANCE) -> bool:
    """|e_uniform - e_adaptive| <= tolerance * e_adaptive"""
    if uniform_error is None or adaptive_error is None or adaptive_error <= 0.0:
        return False
    return abs(uniform_error - adaptive_error) <= tolerance * adaptive_error


def uniform_error_ladder(spec: RunSpec) -> List[Dict[str, float]]:
    """Final L-inf(L2) error and space-time dofs of uniform runs on every level of spec.levels"""
    solution = manufactured_solution(spec.example)
    dt_law = spec.dt_law or "h2"
    ladder = []
    for level in range(spec.levels[0], spec.levels[1] + 1):
        if predicted_dofs(level, spec.degree) > spec.max_dofs:
            break
        mesh = unit_square_mesh(level)
        lam = uniform_time_step(float(mesh.h.max()), dt_law)
        log = fixed_time_step_run(solution.problem(), mesh, spec.degree, lam, spec.penalty, spec.norm,
                                  final_time=spec.final_time)
        error = log.final_errors["linf_l2"]
        logger.info(f"[bench] uniform reference level {level}: error={error} space-time dofs={log.total_dofs}")
        if error is not None:
            ladder.append({"uniform_level": level, "uniform_error": error, "uniform_total_dofs": log.total_dofs})
    return ladder


def closest_rung(ladder: Sequence[Dict[str, float]], error: float) -> Optional[Dict[str, float]]:
    """Uniform run whose error is nearest to ``error`` on a log scale"""
    rungs = [rung for rung in ladder if rung["uniform_error"] > 0.0]
    if not rungs or not error > 0.0:
        return None
    return min(rungs, key=lambda rung: abs(math.log(rung["uniform_error"] / error)))


def match_uniform_error(run_adaptive: Callable[[float], Tuple[Optional[float], int]],
                        ladder: Sequence[Dict[str, float]], tolerance: float = MATCH_TOLERANCE,
                        attempts: int = MAX_MATCH_ATTEMPTS) -> Dict[str, Optional[float]]:
    """Rescale the adaptive tolerances until the final error matches a uniform run.

    ``run_adaptive(scale)`` runs with every tolerance multiplied by ``scale`` and
    returns (final L-inf(L2) error, space-time dofs). The uniform target is the
    rung closest to the first adaptive error; later runs rescale by the error ratio.
    """
    comparison: Dict[str, Optional[float]] = {"matched": False, "dof_ratio": None}
    target = None
    scale = 1.0
    for attempt in range(1, attempts + 1):
        error, total_dofs = run_adaptive(scale)
        comparison.update({
            "adaptive_error": error,
            "adaptive_total_dofs": float(total_dofs),
            "tolerance_scale": scale,
            "match_attempts": attempt,
        })
        if target is None:
            target = closest_rung(ladder, error) if error is not None else None
            if target is None:
                logger.warning("[bench] no uniform run to compare against")
                return comparison
            comparison.update(target)
        if errors_match(target["uniform_error"], error, tolerance):
            comparison["matched"] = True
            comparison["dof_ratio"] = total_dofs / target["uniform_total_dofs"]
            return comparison
        if error is None or error <= 0.0:
            break
        scale *= target["uniform_error"] / error
    logger.warning(
        f"[bench] adaptive error {comparison['adaptive_error']} did not come within {tolerance:.0%} of "
        f"uniform level {comparison.get('uniform_level')} ({comparison.get('uniform_error')}) "
        f"after {comparison['match_attempts']} runs"
    )
    return comparison


def rescaled_tolerances(spec: RunSpec, scale: float) -> RunSpec:
    """Every adaptive tolerance multiplied by ``scale``"""
    return spec.model_copy(update={
        "tol_time": spec.tol_time * scale,
        "tol_time_min": spec.tol_time_min * scale,
        "tol_space": spec.tol_space * scale,
    })


def adaptive_run(spec: RunSpec) -> RunLog:
    solution = manufactured_solution(spec.example)
    config = adaptive_config(spec)
    logger.info(
        f"[bench] {spec.example} r={spec.degree} {spec.mode}: TOL_time={config.tol_time:.3e} "
        f"TOL_space={config.tol_space:.3e} lambda0={config.lambda0:.3e}"
    )
    return DRIVERS[spec.mode](config, solution.problem(), unit_square_mesh(spec.levels[0]), spec.degree,
                              spec.penalty)


def adaptive_study(spec: RunSpec) -> StudyResult:
    """One adaptive run from the mesh of level spec.levels[0], optionally paired with uniform runs.

    With ``compare_uniform`` the tolerances are rescaled until the final error is
    within 10% of one uniform run of spec.levels; the reported run is the last one.
    """
    if spec.mode not in DRIVERS:
        raise ValueError(f"adaptive_study needs an adaptive mode, got '{spec.mode}'")
    logs: List[RunLog] = []

    def run(scale: float) -> Tuple[Optional[float], int]:
        log = adaptive_run(rescaled_tolerances(spec, scale) if scale != 1.0 else spec)
        logs.append(log)
        return log.final_errors["linf_l2"], log.total_dofs

    comparison = None
    if spec.compare_uniform:
        comparison = match_uniform_error(run, uniform_error_ladder(spec))
        logger.info(f"[bench] adaptive / uniform space-time dofs: {comparison['dof_ratio']}")
    else:
        run(1.0)
    log = logs[-1]
    summary = summarize(log)
    row = {
        "example": log.example,
        "r": log.degree,
        "mode": log.mode,
        "steps": len(log.records),
        "err_linf_l2": summary.final_errors["linf_l2"],
        "err_l2_l2": summary.final_errors["l2_l2"],
        "total_dofs": summary.total_dofs,
        "rejected_steps": summary.rejected_steps,
        "linear_solves": log.linear_solves,
        "wall_time": log.wall_time,
    }
    if comparison is not None:
        row.update(comparison)
    return StudyResult(pd.DataFrame([row]), [log], comparison)


def run_study(spec: RunSpec) -> StudyResult:
    if spec.mode == "uniform":
        return uniform_study(spec)
    return adaptive_study(spec)
