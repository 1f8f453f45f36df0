"""Damped stochastic Hamiltonian system models"""
from typing import Callable, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# (side, component) pairs carrying Dirichlet data for the generic stepper
BoundaryPin = Tuple[Literal["left", "right"], int]


class NlsParameters(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(0.1, ge=0.0, description="Absorption coefficient")
    epsilon: float = Field(0.0, ge=0.0, description="Noise size")


class HamiltonianSystemSpec(BaseModel):
    """Structure of M z_t + K z_x = grad S1(z) + grad S2(z) o chi + D z.

    D is not stored: it is always -(a/2) M - (b/2) K. Potentials and their
    derivatives are vectorized over leading axes, the state components live
    on the last axis. The S1 callables take the time level as keyword ``t``.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    dim: int = Field(..., gt=0)
    M: np.ndarray
    K: np.ndarray
    a: float
    b: float
    S1: Callable[..., np.ndarray]
    S2: Callable[..., np.ndarray]
    grad_S1: Callable[..., np.ndarray]
    grad_S2: Callable[..., np.ndarray]
    hess_S1: Callable[..., np.ndarray]
    hess_S2: Callable[..., np.ndarray]
    boundary_pins: Tuple[BoundaryPin, ...]

    @field_validator("M", "K", mode="before")
    @classmethod
    def _as_float_matrix(cls, value):
        matrix = np.array(value, dtype=float)
        matrix.setflags(write=False)
        return matrix

    @model_validator(mode="after")
    def _check_structure(self):
        shape = (self.dim, self.dim)
        if self.M.shape != shape or self.K.shape != shape:
            raise ValueError(f"M and K must be {shape}, got {self.M.shape} and {self.K.shape}")
        if not np.array_equal(self.M, -self.M.T):
            raise ValueError("M is not skew-symmetric")
        if not np.array_equal(self.K, -self.K.T):
            raise ValueError("K is not skew-symmetric")
        if len(self.boundary_pins) != self.dim:
            raise ValueError(
                f"{self.dim} boundary pins are needed to close the discrete system, "
                f"got {len(self.boundary_pins)}"
            )
        for side, component in self.boundary_pins:
            if not 0 <= component < self.dim:
                raise ValueError(f"Pinned component {component} out of range")
        if len(set(self.boundary_pins)) != len(self.boundary_pins):
            raise ValueError("Duplicate boundary pins")
        return self

    @property
    def D(self) -> np.ndarray:
        return -(self.a / 2.0) * self.M - (self.b / 2.0) * self.K
