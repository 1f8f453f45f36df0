"""Experiment configuration and result models"""
import math
from datetime import datetime
from enum import Enum
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.grid_models import GridSpec, StepConfig
from models.noise_models import NoiseKind, NoiseModel
from models.system_models import NlsParameters


class ExperimentKind(str, Enum):
    PLANE_WAVE = "plane-wave"
    SOLITON = "soliton"
    CONVERGENCE = "convergence"
    TWO_FORM_AUDIT = "two-form-audit"


class SchemeKind(str, Enum):
    CMS = "cms"
    MS = "ms"
    CN = "cn"


class ExperimentConfig(BaseModel):
    """Flat experiment description; every key of a config file maps to one field"""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    experiment: ExperimentKind
    scheme: SchemeKind = SchemeKind.CMS
    system: Literal["nls", "kdv"] = "nls"
    initial_condition: Literal["plane", "sech", "sine"] = "sech"

    x_left: float = -25.0
    x_right: float = 25.0
    dx: float = Field(0.1, gt=0.0)
    dt: float = Field(0.01, gt=0.0)
    t_final: float = Field(10.0, gt=0.0, alias="T")
    boundary: Literal["dirichlet", "periodic"] = "dirichlet"

    alpha: float = Field(0.1, ge=0.0)
    epsilon: float = Field(0.5, ge=0.0)
    amplitude: float = Field(0.5, description="Plane-wave amplitude A")

    noise_kind: NoiseKind = NoiseKind.SPECTRAL
    noise_modes: int = Field(8, ge=1)
    n_trajectories: int = Field(10, ge=1, alias="paths")
    theta: float = Field(1.0, ge=0.0, le=1.0)

    reference_level: int = Field(12, ge=1)
    coarse_levels: List[int] = Field(default_factory=lambda: [11, 9, 7, 5])
    m_values: List[int] = Field(default_factory=list, description="Truncations for the per-M convergence table, 1..8 when empty")

    seed: int = Field(20240601, ge=0, lt=2**64)
    fixed_point_tol: float = Field(1e-13, gt=0.0)
    max_iterations: int = Field(200, gt=0)
    failure_threshold: float = Field(0.01, ge=0.0, le=1.0)
    workers: int = Field(1, ge=1)
    out_dir: Optional[str] = None

    @field_validator("coarse_levels", "m_values", mode="before")
    @classmethod
    def _split_list(cls, value):
        if isinstance(value, str):
            return [int(item) for item in value.strip("[]").replace(",", " ").split()]
        return value

    @model_validator(mode="after")
    def _check_levels(self):
        if any(level >= self.reference_level for level in self.coarse_levels):
            raise ValueError(f"coarse_levels {self.coarse_levels} must be coarser than reference_level {self.reference_level}")
        if any(m < 1 for m in self.m_values):
            raise ValueError("m_values entries must be >= 1")
        if self.experiment != ExperimentKind.CONVERGENCE:
            steps = self.t_final / self.dt
            if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
                raise ValueError(f"T = {self.t_final} is not a whole number of steps dt = {self.dt}")
        return self

    @property
    def grid(self) -> GridSpec:
        return GridSpec(x_left=self.x_left, x_right=self.x_right, dx=self.dx, dt=self.dt, boundary=self.boundary)

    @property
    def params(self) -> NlsParameters:
        return NlsParameters(alpha=self.alpha, epsilon=self.epsilon)

    @property
    def step_config(self) -> StepConfig:
        return StepConfig(fixed_point_tol=self.fixed_point_tol, max_iterations=self.max_iterations, theta=self.theta)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def noise_model(self, trajectory_index: int = 0, truncation_M: Optional[int] = None) -> NoiseModel:
        return NoiseModel(
            kind=self.noise_kind,
            truncation_M=truncation_M or self.noise_modes,
            domain=(self.x_left, self.x_right),
            seed=self.seed,
            trajectory_index=trajectory_index,
        )


class DiagnosticsSeries(BaseModel):
    """Per-step functionals of one scheme, one trajectory or an ensemble mean"""

    times: List[float]
    charge: List[float] = Field(default_factory=list)
    charge_residual: List[float] = Field(default_factory=list)
    energy_grad: List[float] = Field(default_factory=list)
    energy_quartic: List[float] = Field(default_factory=list)
    energy_noise: List[float] = Field(default_factory=list)
    two_form: Optional[List[float]] = None
    amplitude: List[float] = Field(default_factory=list)
    phase: List[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_lengths(self):
        n = len(self.times)
        for name in ("charge", "charge_residual", "energy_grad", "energy_quartic", "energy_noise", "amplitude", "phase"):
            values = getattr(self, name)
            if values and len(values) != n:
                raise ValueError(f"{name} has {len(values)} entries, times has {n}")
        return self


class ConvergenceRow(BaseModel):
    truncation_M: int
    dts: List[float]
    errors: List[float]
    slope: float


class ConvergenceReport(BaseModel):
    dts: List[float]
    errors: List[float]
    slope: float
    per_M: Optional[List[ConvergenceRow]] = None
    failures: int = 0
    trajectories: int = 0

    @model_validator(mode="after")
    def _check_fit(self):
        if len(self.dts) != len(self.errors):
            raise ValueError("dts and errors differ in length")
        if any(e <= 0 for e in self.errors):
            raise ValueError("Strong errors must be positive")
        if not math.isfinite(self.slope):
            raise ValueError("Fitted slope is not finite")
        return self


class PlaneWaveResult(BaseModel):
    series: DiagnosticsSeries
    amplitude_exact: List[float]
    phase_exact: List[float]
    amplitude_error: List[float]
    phase_error: List[float]
    phase_error_abs: List[float] = Field(default_factory=list, description="Trajectory mean of |phase error| per step")
    final_amplitude_error: float
    final_phase_error: float
    trajectories: int


class SolitonResult(BaseModel):
    cms: DiagnosticsSeries
    cn: DiagnosticsSeries
    charge_exact: List[float]
    max_cms_residual: float
    max_cn_residual: float
    max_charge_ratio_error: float
    max_energy_residual_cms: float
    max_energy_residual_cn: float
    max_cn_charge_law: float
    trajectories: int


class AuditResult(BaseModel):
    system: str
    max_defect: float
    step_max: List[float]
    defects: List[List[float]] = Field(default_factory=list, description="Worst |defect| per (step, cell)")
    trajectories: int


class FailureRecord(BaseModel):
    seed: int
    trajectory_index: int
    step: Optional[int] = None
    residual: float


class RunRequest(BaseModel):
    experiment: ExperimentKind = Field(..., description="Experiment to run")
    overrides: Dict[str, object] = Field(default_factory=dict, description="ExperimentConfig field overrides, out_dir excluded")
    full_scale: bool = False


class RunResponse(BaseModel):
    run_id: str
    experiment: ExperimentKind
    status: str
    message: str
    timestamp: datetime


class RunStatus(BaseModel):
    run_id: str
    experiment: ExperimentKind
    status: str
    start_time: Optional[datetime] = None
    end_time: Optional[datetime] = None
    summary: Optional[Dict[str, float]] = None
    files: List[str] = Field(default_factory=list)
    error: Optional[str] = None


class ExperimentInfo(BaseModel):
    kind: ExperimentKind
    description: str
    preset: Dict[str, object]
