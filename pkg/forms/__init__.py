"""Interior penalty forms, SPD solves and the time-stepping operators."""
from .assembly import (
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    bilinear_form,
    bilinear_form_terms,
    check_positivity,
    energy_norm_squared,
    penalty_coefficients,
    smallest_eigenvalue,
    stiffness,
)
from .operators import (
    GDifference,
    GRepresentation,
    TimeAverage,
    TimeSlice,
    apply_discrete_elliptic,
    backward_euler_step,
    compute_g,
    solve_elliptic,
    step_matrix,
    time_average,
)
from .solvers import SpdSolver, solve_counter, solve_spd

__all__ = [
    "GDifference",
    "GRepresentation",
    "SpdSolver",
    "TimeAverage",
    "TimeSlice",
    "apply_discrete_elliptic",
    "assemble_load",
    "assemble_mass",
    "assemble_stiffness",
    "backward_euler_step",
    "bilinear_form",
    "bilinear_form_terms",
    "check_positivity",
    "compute_g",
    "energy_norm_squared",
    "penalty_coefficients",
    "smallest_eigenvalue",
    "solve_counter",
    "solve_elliptic",
    "solve_spd",
    "stiffness",
    "step_matrix",
    "time_average",
]
