"""Noise models"""
from enum import Enum
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class NoiseKind(str, Enum):
    SCALAR = "scalar"
    SPECTRAL = "spectral"


class NoiseModel(BaseModel):
    """Wiener process W(t, x) = sum_m sqrt(eta_m) e_m(x) beta_m(t), or a scalar W(t)"""

    model_config = ConfigDict(frozen=True)

    kind: NoiseKind = NoiseKind.SPECTRAL
    truncation_M: int = Field(8, ge=1)
    eta: Tuple[float, ...] = ()
    domain: Tuple[float, float] = (-25.0, 25.0)
    seed: int = Field(0, ge=0, lt=2**64)
    trajectory_index: int = Field(0, ge=0)

    @field_validator("eta")
    @classmethod
    def _nonnegative(cls, value):
        if any(e < 0 for e in value):
            raise ValueError("eta entries must be nonnegative")
        return value

    @model_validator(mode="before")
    @classmethod
    def _default_eta(cls, data):
        if isinstance(data, dict) and not data.get("eta"):
            data = {**data, "eta": (1.0,) * int(data.get("truncation_M", 8))}
        return data

    @model_validator(mode="after")
    def _check_eta(self):
        if len(self.eta) < self.truncation_M:
            raise ValueError(f"eta has {len(self.eta)} entries, truncation_M is {self.truncation_M}")
        if self.domain[1] <= self.domain[0]:
            raise ValueError("Noise domain must be a nonempty interval")
        return self

    def for_trajectory(self, trajectory_index: int) -> "NoiseModel":
        return self.model_copy(update={"trajectory_index": trajectory_index})


class NoisePath(BaseModel):
    """Wiener increments dW[n, j] over one trajectory, units sqrt(time)"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    increments: np.ndarray
    dt: float = Field(..., gt=0.0)
    resolution_level: int = 0
    kind: NoiseKind = NoiseKind.SPECTRAL

    @field_validator("increments", mode="before")
    @classmethod
    def _as_table(cls, value):
        table = np.array(value, dtype=float)
        if table.ndim != 2:
            raise ValueError("increments must be indexed by (step, node)")
        table.setflags(write=False)
        return table

    @property
    def n_steps(self) -> int:
        return self.increments.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.increments.shape[1]
