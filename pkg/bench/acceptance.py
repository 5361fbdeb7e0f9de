"""
Acceptance checks run by ``main.py verify``.

The pytest suite covers the oracle and property checks at reduced size; the
functions below run the full-size convergence and adaptivity studies.
"""
import logging
import math
import time
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, List, Tuple

import numpy as np
import pandas as pd
import pytest

from adapt import TimeStepDriver, implicit_time_step_control
from adapt.runlog import time_steps
from mesh import unit_square_mesh
from shared.config import settings
from shared.schemas import AdaptiveConfig, CheckResult, PenaltyConfig, RunLog, RunSpec
from .solutions import solution_u2
from .studies import adaptive_study, elliptic_study, uniform_study

logger = logging.getLogger(__name__)

TESTS_DIR = Path(__file__).resolve().parent.parent / "tests"

ELLIPTIC_EOC_WINDOWS = {2: (1.6, 2.6), 3: (3.4, 4.6)}
ESTIMATOR_EOC_SLACK = 0.6
MAX_IEI_SPREAD = 10.0
MIN_PARABOLIC_EOC = 0.8
CONTRACT_TOLERANCE_FRACTION = 0.25


def _timed(name: str, check: Callable[[], CheckResult]) -> CheckResult:
    started = time.perf_counter()
    try:
        result = check()
    except Exception as e:
        logger.error(f"[bench] check '{name}' raised: {e}")
        result = CheckResult(name=name, passed=False, detail=f"raised {type(e).__name__}: {e}")
    result.runtime = time.perf_counter() - started
    logger.info(f"[bench] {name}: {'PASS' if result.passed else 'FAIL'} {result.detail}")
    return result


def _spread(values) -> float:
    values = [v for v in values if v is not None and not pd.isna(v)]
    if not values or min(values) <= 0:
        return math.inf
    return max(values) / min(values)


def run_test_suite() -> CheckResult:
    code = pytest.main(["-q", str(TESTS_DIR)])
    return CheckResult(name="pytest suite", passed=code == 0, detail=f"exit code {int(code)}")


def _levels_detail(table: pd.DataFrame, column: str) -> str:
    """'level:value' pairs plus the EOC column, for failure reports"""
    errors = " ".join(f"{int(level)}:{value:.3e}" for level, value in zip(table["level"], table[column]))
    eocs = " ".join("-" if value is None or pd.isna(value) else f"{value:.2f}" for value in table[f"eoc_{column}"])
    return f"[{errors}] EOC [{eocs}]"


def elliptic_verdict(table: pd.DataFrame, degree: int) -> Tuple[bool, str]:
    """Last-pair EOC in the window of the degree, estimator EOC nearby, bounded IEI spread"""
    low, high = ELLIPTIC_EOC_WINDOWS[degree]
    last = table.iloc[-1]
    eoc_error, eoc_estimator = last["eoc_error"], last["eoc_estimator"]
    spread = _spread(table["iei"].tolist())
    defined = eoc_error is not None and eoc_estimator is not None
    ok = (
        defined and low <= eoc_error <= high
        and abs(eoc_estimator - eoc_error) <= ESTIMATOR_EOC_SLACK
        and spread <= MAX_IEI_SPREAD
    )
    eoc_text = f"{eoc_error:.2f} (estimator {eoc_estimator:.2f})" if defined else "undefined"
    detail = (
        f"r={degree}: EOC {eoc_text}, window [{low}, {high}], IEI spread {spread:.2f}, "
        f"errors {_levels_detail(table, 'error')}"
    )
    return bool(ok), detail


def check_elliptic_convergence(levels=(1, 4)) -> CheckResult:
    details, passed = [], True
    for degree in ELLIPTIC_EOC_WINDOWS:
        ok, detail = elliptic_verdict(elliptic_study(degree, levels), degree)
        passed = passed and ok
        details.append(detail)
    return CheckResult(name="elliptic convergence", passed=passed, detail="; ".join(details))


def parabolic_verdict(table: pd.DataFrame) -> Tuple[bool, str]:
    """Monotone errors, final EOC >= MIN_PARABOLIC_EOC and bounded IEI spread in both norms"""
    passed, details = True, []
    for norm in ("linf_l2", "l2_l2"):
        column = f"err_{norm}"
        errors = table[column].tolist()
        increases = [int(level) for level, a, b in zip(table["level"][1:], errors, errors[1:]) if not b < a]
        final_eoc = table[f"eoc_{column}"].iloc[-1]
        spread = _spread(table[f"iei_{norm}"].tolist())
        ok = not increases and final_eoc is not None and final_eoc >= MIN_PARABOLIC_EOC and spread <= MAX_IEI_SPREAD
        passed = passed and ok
        eoc_text = "undefined" if final_eoc is None else f"{final_eoc:.2f}"
        details.append(
            f"{norm}: monotone={not increases} (increases at levels {increases}) EOC {eoc_text} "
            f"IEI spread {spread:.2f}, errors {_levels_detail(table, column)}"
        )
    return passed, "; ".join(details)


def check_parabolic_uniform(levels=(1, 4)) -> CheckResult:
    spec = RunSpec(example="u1", degree=2, mode="uniform", levels=levels, dt_law="h2", out=settings.output_dir)
    passed, detail = parabolic_verdict(uniform_study(spec).table)
    return CheckResult(name="parabolic uniform study", passed=passed, detail=detail)


def beats_uniform(comparison: Dict) -> bool:
    """Matched final errors and strictly fewer adaptive space-time dofs"""
    ratio = comparison.get("dof_ratio")
    return bool(comparison.get("matched")) and ratio is not None and ratio < 1.0


def check_adaptive_beats_uniform(reference_level: int = 3, levels=(1, 6)) -> CheckResult:
    """Tolerances start from the uniform run at ``reference_level`` and are rescaled to a matched error"""
    reference = uniform_study(RunSpec(
        example="u1", degree=2, mode="uniform", levels=(reference_level, reference_level), dt_law="h2",
    ))
    row = reference.table.iloc[0]
    steps = max(int(row["steps"]), 1)
    spec = RunSpec(
        example="u1", degree=2, mode="adaptive-implicit", levels=levels, dt_law="h2",
        tol_time=row["E_time_inf"] / math.sqrt(steps), tol_space=row["E_space_inf"],
        lambda0=row["lambda"], compare_uniform=True,
    )
    comparison = adaptive_study(spec).comparison or {}
    detail = (
        f"matched={comparison.get('matched')} space-time dof ratio {comparison.get('dof_ratio')} "
        f"(target <= 0.7), comparison {comparison}"
    )
    return CheckResult(name="adaptive beats uniform", passed=beats_uniform(comparison), detail=detail)


def local_time_increments(log: RunLog, include_eta_tilde: bool = False) -> np.ndarray:
    """Per-step increments as the drivers compare them; eta~ counts only in common-coarsening mode"""
    records = log.records
    if log.norm == "linf-l2":
        return np.array([
            math.sqrt((r.eta_inf + r.beta_inf) * r.lambda_n + (r.eta_tilde_inf if include_eta_tilde else 0.0))
            for r in records
        ])
    return np.array([math.sqrt((r.eta_2 + r.beta_2) * r.lambda_n) for r in records])


def calibrated_time_tolerance(config: AdaptiveConfig, degree: int, penalty: PenaltyConfig, level: int) -> float:
    """A fraction of the first-step increment at lambda0, so the first attempt is rejected"""
    driver = TimeStepDriver(solution_u2().problem(), degree, penalty, config.norm, config.eta_tilde_mode, config)
    state = driver.initial_state(unit_square_mesh(level))
    first = driver.time_increment(driver.attempt(state, config.lambda0))
    return CONTRACT_TOLERANCE_FRACTION * first


@lru_cache(maxsize=1)
def implicit_contract_run(level: int = 2, lambda0: float = 0.05, final_time: float = 0.2) -> tuple:
    penalty = PenaltyConfig.for_degree(2)
    base = AdaptiveConfig(tol_time=math.inf, tol_space=math.inf, lambda0=lambda0, final_time=final_time)
    tol_time = calibrated_time_tolerance(base, 2, penalty, level)
    config = base.model_copy(update={"tol_time": tol_time})
    log = implicit_time_step_control(config, solution_u2().problem(), unit_square_mesh(level), 2, penalty)
    return config, log


def check_implicit_contract() -> CheckResult:
    config, log = implicit_contract_run()
    increments = local_time_increments(log, config.eta_tilde_mode == "common-coarsening")
    steps = time_steps(log)
    within = bool(np.all(increments <= config.tol_time * (1.0 + 1e-12)))
    passed = within and log.rejected_steps > 0 and steps.min() < config.lambda0
    detail = (
        f"{len(log.records)} steps, max increment {increments.max():.3e} vs TOL {config.tol_time:.3e}, "
        f"{log.rejected_steps} rejections, min lambda {steps.min():.3e}"
    )
    return CheckResult(name="implicit driver contract", passed=passed, detail=detail)


def step_size_correlation(log: RunLog, frequency: float = 20.0) -> float:
    """Spearman correlation of -lambda_n with |cos(frequency pi t)| at the step midpoints"""
    steps = time_steps(log)
    midpoints = pd.Series([r.t_n - 0.5 * r.lambda_n for r in log.records])
    return float((-steps).corr(np.abs(np.cos(frequency * np.pi * midpoints)), method="spearman"))


def check_step_size_correlation() -> CheckResult:
    _, log = implicit_contract_run()
    rho = step_size_correlation(log)
    return CheckResult(name="u2 step-size correlation", passed=bool(rho > 0.0), detail=f"spearman {rho:.3f}")


def verify(quick: bool = False) -> List[CheckResult]:
    checks = [("pytest suite", run_test_suite)]
    if not quick:
        checks += [
            ("elliptic convergence", check_elliptic_convergence),
            ("parabolic uniform study", check_parabolic_uniform),
            ("adaptive beats uniform", check_adaptive_beats_uniform),
            ("implicit driver contract", check_implicit_contract),
            ("u2 step-size correlation", check_step_size_correlation),
        ]
    return [_timed(name, check) for name, check in checks]


def results_frame(results: List[CheckResult]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump() for r in results], columns=["name", "passed", "runtime", "detail"])
