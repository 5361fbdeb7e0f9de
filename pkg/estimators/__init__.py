"""A posteriori estimators, exact error norms, EOC and IEI."""
from .elliptic import (
    EllipticIndicatorField,
    EstimatorConstants,
    elliptic_estimate,
    estimate_on,
    estimator_lambda,
)
from .norms import ErrorTracker, eoc, eoc_column, error_squared_at, exact_error_norms, iei, interval_errors
from .parabolic import (
    AccumulatedEstimators,
    ParabolicStepEstimators,
    accumulate,
    coarsening_estimators,
    data_estimators,
    extra_space_estimator,
    time_estimators,
)

__all__ = [
    "AccumulatedEstimators",
    "EllipticIndicatorField",
    "ErrorTracker",
    "EstimatorConstants",
    "ParabolicStepEstimators",
    "accumulate",
    "coarsening_estimators",
    "data_estimators",
    "elliptic_estimate",
    "eoc",
    "eoc_column",
    "error_squared_at",
    "estimate_on",
    "estimator_lambda",
    "exact_error_norms",
    "extra_space_estimator",
    "iei",
    "interval_errors",
    "time_estimators",
]
