"""Pydantic models for grids, systems, noise and experiments"""
from .experiment_models import ExperimentConfig, ExperimentKind, RunRequest, RunResponse, RunStatus, SchemeKind
from .grid_models import ComplexGridState, GridSpec, RealGridState4, StepConfig, TangentPair
from .noise_models import NoiseKind, NoiseModel, NoisePath
from .system_models import HamiltonianSystemSpec, NlsParameters

__all__ = [
    "ComplexGridState",
    "ExperimentConfig",
    "ExperimentKind",
    "GridSpec",
    "HamiltonianSystemSpec",
    "NlsParameters",
    "NoiseKind",
    "NoiseModel",
    "NoisePath",
    "RealGridState4",
    "RunRequest",
    "RunResponse",
    "RunStatus",
    "SchemeKind",
    "StepConfig",
    "TangentPair",
]
