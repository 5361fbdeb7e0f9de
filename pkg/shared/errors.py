"""Error types raised by the solver packages."""


class SolverError(Exception):
    """Base class for failures of a numerical run"""


class DegenerateElementError(ValueError):
    """Element with zero (or negative) signed area"""


class IncompatibleMeshError(ValueError):
    """Meshes that do not share a bisection forest, or are not nested where required"""


class QuadratureError(ValueError):
    """Integrand returned non-finite values"""


class SingularSystemError(SolverError):
    """Linear solve broke down or did not converge"""


class TimeStepUnderflowError(SolverError):
    """Time step halved below the admissible minimum"""


class ResourceLimitError(SolverError):
    """Mesh or dof count exceeded the configured cap"""
