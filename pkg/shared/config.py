import os
from typing import Tuple

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Discretisation
    degree: int = int(os.getenv("DEGREE", 2))
    sigma0: float = float(os.getenv("SIGMA0", 20.0))
    xi0: float = float(os.getenv("XI0", 20.0))
    # cubic elements need a larger penalty for B to stay positive definite
    sigma0_cubic: float = float(os.getenv("SIGMA0_CUBIC", 200.0))
    xi0_cubic: float = float(os.getenv("XI0_CUBIC", 200.0))
    quadrature_extra_degree: int = int(os.getenv("QUADRATURE_EXTRA_DEGREE", 4))

    # Linear solver
    solver_tol: float = float(os.getenv("SOLVER_TOL", 1e-10))
    solver_max_iterations: int = int(os.getenv("SOLVER_MAX_ITERATIONS", 20000))
    direct_solver_max_unknowns: int = int(os.getenv("DIRECT_SOLVER_MAX_UNKNOWNS", 2000))

    # Estimators and adaptivity
    estimator_constant: float = float(os.getenv("ESTIMATOR_CONSTANT", 1.0))
    xi_refine: float = float(os.getenv("XI_REFINE", 0.75))
    max_space_iters: int = int(os.getenv("MAX_SPACE_ITERS", 8))
    max_halvings: int = int(os.getenv("MAX_HALVINGS", 20))
    max_elements: int = int(os.getenv("MAX_ELEMENTS", 20000))

    # Studies
    final_time: float = float(os.getenv("FINAL_TIME", 1.0))
    max_dofs: int = int(os.getenv("MAX_DOFS", 200000))
    output_dir: str = os.getenv("OUTPUT_DIR", "results")

    debug: bool = os.getenv("DEBUG", "False").lower() == "true"
    log_level: str = os.getenv("LOG_LEVEL", "INFO")

    @property
    def effective_log_level(self) -> str:
        """DEBUG wins over the configured level"""
        return "DEBUG" if self.debug else self.log_level.upper()

    def penalty_values(self, degree: int) -> Tuple[float, float]:
        """Default (sigma0, xi0) for elements of the given degree"""
        if degree >= 3:
            return self.sigma0_cubic, self.xi0_cubic
        return self.sigma0, self.xi0

    def volume_quadrature_degree(self, degree: int) -> int:
        """Over-integration degree for smooth, non-polynomial data"""
        return 2 * degree + self.quadrature_extra_degree

    class Config:
        env_file = ".env"


settings = Settings()
