import math
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from shared.config import settings

NormFlavor = Literal["linf-l2", "l2-l2"]
EtaTildeMode = Literal["per-step", "common-coarsening"]
RunMode = Literal["uniform", "adaptive-implicit", "adaptive-explicit"]


class PenaltyConfig(BaseModel):
    """Interior penalty parameters: sigma = sigma0 h^-3, xi = xi0 h^-1"""

    sigma0: float = Field(20.0, gt=0.0, description="Value-jump penalty scale")
    xi0: float = Field(20.0, gt=0.0, description="Normal-derivative-jump penalty scale")

    model_config = {"frozen": True}

    @classmethod
    def for_degree(cls, degree: int) -> "PenaltyConfig":
        """Configured defaults for elements of the given degree"""
        sigma0, xi0 = settings.penalty_values(degree)
        return cls(sigma0=sigma0, xi0=xi0)


class AdaptiveConfig(BaseModel):
    """Inputs of the space-time adaptive drivers"""

    tol_time: float = Field(gt=0.0, description="Upper tolerance on the local time increment")
    tol_time_min: float = Field(0.0, ge=0.0, description="Lower tolerance (explicit driver)")
    tol_space: float = Field(gt=0.0, description="Tolerance on the elliptic estimator")
    tol_coarse: float = Field(0.0, ge=0.0, description="Relative coarsening threshold")
    tol_initial: Optional[float] = Field(None, gt=0.0, description="Initial L2 projection tolerance")
    lambda0: float = Field(gt=0.0, description="Initial time step")
    final_time: float = Field(1.0, gt=0.0)
    xi_refine: float = Field(0.75, gt=0.0, le=1.0, description="Doerfler bulk fraction")
    max_space_iters: int = Field(8, ge=1)
    max_halvings: int = Field(20, ge=1)
    max_elements: int = Field(20000, ge=4)
    eta_tilde_mode: EtaTildeMode = "per-step"
    norm: NormFlavor = "linf-l2"

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def check_time_tolerances(self) -> "AdaptiveConfig":
        if not self.tol_time_min < self.tol_time:
            raise ValueError(
                f"tol_time_min ({self.tol_time_min}) must be smaller than tol_time ({self.tol_time})"
            )
        return self

    @property
    def initial_tolerance(self) -> float:
        return self.tol_initial if self.tol_initial is not None else self.tol_space

    @property
    def minimum_step(self) -> float:
        return self.lambda0 * 2.0 ** (-self.max_halvings)


class RunSpec(BaseModel):
    """One benchmark invocation"""

    example: Literal["u1", "u2"] = "u1"
    degree: Literal[2, 3] = 2
    mode: RunMode = "uniform"
    levels: Tuple[int, int] = (1, 4)
    dt_law: Optional[Literal["h3", "h2"]] = "h3"
    sigma0: Optional[float] = Field(None, gt=0.0, description="Defaults to the configured value for the degree")
    xi0: Optional[float] = Field(None, gt=0.0, description="Defaults to the configured value for the degree")
    norm: NormFlavor = "linf-l2"
    tol_time: float = Field(math.inf, gt=0.0)
    tol_time_min: float = Field(0.0, ge=0.0)
    tol_space: float = Field(math.inf, gt=0.0)
    tol_coarse: float = Field(0.0, ge=0.0)
    lambda0: Optional[float] = Field(None, gt=0.0)
    final_time: float = Field(1.0, gt=0.0)
    eta_tilde: Optional[EtaTildeMode] = None
    compare_uniform: bool = False
    max_dofs: int = Field(200000, ge=1)
    out: str = "results"

    @model_validator(mode="after")
    def check_combination(self) -> "RunSpec":
        first, last = self.levels
        if first < 0 or last < first:
            raise ValueError(f"Invalid level range {first}..{last}")
        if self.mode == "uniform" and self.dt_law is None:
            raise ValueError("Uniform studies need a time-step law (h3 or h2)")
        if self.mode != "uniform" and self.lambda0 is None:
            raise ValueError(f"Mode {self.mode} needs an initial time step lambda0")
        if not self.tol_time_min < self.tol_time:
            raise ValueError("tol_time_min must be smaller than tol_time")
        return self

    @property
    def penalty(self) -> PenaltyConfig:
        default = PenaltyConfig.for_degree(self.degree)
        return PenaltyConfig(
            sigma0=self.sigma0 if self.sigma0 is not None else default.sigma0,
            xi0=self.xi0 if self.xi0 is not None else default.xi0,
        )

    @property
    def eta_tilde_mode(self) -> EtaTildeMode:
        if self.eta_tilde is not None:
            return self.eta_tilde
        return "common-coarsening" if self.mode == "uniform" else "per-step"


class StepRecord(BaseModel):
    n: int
    t_n: float
    lambda_n: float
    gamma_inf: float = 0.0
    gamma_2: float = 0.0
    eta_inf: float = 0.0
    eta_2: float = 0.0
    beta_inf: float = 0.0
    beta_2: float = 0.0
    eta_tilde_inf: float = 0.0
    estimator_space: float = 0.0
    E_coarsen: float = 0.0
    E_time: float = 0.0
    E_space: float = 0.0
    err_linf_l2: Optional[float] = None
    err_l2_l2: Optional[float] = None
    iei: Optional[float] = None
    dofs: int = 0
    rejected_steps: int = 0
    space_iterations: int = 1
    space_converged: bool = True
    wall_time: float = 0.0


class RunLog(BaseModel):
    example: str
    degree: int
    mode: str
    norm: NormFlavor
    records: List[StepRecord] = []
    initial_error: float = 0.0
    initial_dofs: int = 0
    accumulators: Dict[str, float] = {}
    linear_solves: int = 0
    wall_time: float = 0.0

    @property
    def total_dofs(self) -> int:
        """Space-time dofs: initial mesh plus every accepted step's mesh"""
        return self.initial_dofs + sum(record.dofs for record in self.records)

    @property
    def rejected_steps(self) -> int:
        return sum(record.rejected_steps for record in self.records)

    @property
    def final_errors(self) -> Dict[str, Optional[float]]:
        if not self.records:
            return {"linf_l2": None, "l2_l2": None}
        last = self.records[-1]
        return {"linf_l2": last.err_linf_l2, "l2_l2": last.err_l2_l2}


class RunSummary(BaseModel):
    example: str
    r: int
    mode: str
    final_errors: Dict[str, Optional[float]]
    accumulators: Dict[str, float]
    total_dofs: int
    rejected_steps: int


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""
    runtime: float = 0.0
