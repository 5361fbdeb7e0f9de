"""Manufactured solutions, convergence studies, reports and acceptance checks."""
from .solutions import ManufacturedSolution, manufactured_solution, solution_u1, solution_u2, steady_solution
from .studies import StudyResult, adaptive_study, elliptic_study, run_study, uniform_study

__all__ = [
    "ManufacturedSolution",
    "StudyResult",
    "adaptive_study",
    "elliptic_study",
    "manufactured_solution",
    "run_study",
    "solution_u1",
    "solution_u2",
    "steady_solution",
    "uniform_study",
]
