"""Marking, space adaptivity and time-step control."""
from .drivers import (
    ParabolicProblem,
    TimeStepDriver,
    explicit_time_step_control,
    fixed_time_step_run,
    implicit_time_step_control,
)
from .marking import dorfler_mark, space_coarsening
from .runlog import CSV_COLUMNS, runlog_frame
from .space import SpaceRegistry, initial_space_adaptivity, local_projection_errors, space_adaptivity

__all__ = [
    "CSV_COLUMNS",
    "ParabolicProblem",
    "SpaceRegistry",
    "TimeStepDriver",
    "dorfler_mark",
    "explicit_time_step_control",
    "fixed_time_step_run",
    "implicit_time_step_control",
    "initial_space_adaptivity",
    "local_projection_errors",
    "runlog_frame",
    "space_adaptivity",
    "space_coarsening",
]
