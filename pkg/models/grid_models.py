"""Grid, state and solver configuration models"""
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class GridSpec(BaseModel):
    """Uniform space-time mesh on [x_left, x_right].

    Dirichlet grids carry J+1 nodes x_0..x_J; periodic grids carry the J
    distinct nodes x_0..x_{J-1} and wrap around.
    """

    model_config = ConfigDict(frozen=True)

    x_left: float
    x_right: float
    dx: float = Field(..., gt=0.0)
    dt: float = Field(..., gt=0.0)
    boundary: Literal["dirichlet", "periodic"] = "dirichlet"

    @model_validator(mode="after")
    def _check_domain(self):
        if self.x_right <= self.x_left:
            raise ValueError("x_right must be greater than x_left")
        if self.dx > self.x_right - self.x_left:
            raise ValueError("dx is larger than the domain")
        if self.n_interior < 2:
            raise ValueError("Grid needs at least two cells")
        return self

    @property
    def n_interior(self) -> int:
        """J = floor((x_right - x_left) / dx), tolerant to round-off in dx"""
        return int(math.floor((self.x_right - self.x_left) / self.dx + 1e-9))

    @property
    def n_nodes(self) -> int:
        if self.boundary == "periodic":
            return self.n_interior
        return self.n_interior + 1

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    def nodes(self) -> np.ndarray:
        return self.x_left + self.dx * np.arange(self.n_nodes)

    def with_dt(self, dt: float) -> "GridSpec":
        return self.model_copy(update={"dt": dt})


class StepConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    fixed_point_tol: float = Field(1e-13, gt=0.0, description="Max-norm tolerance on successive iterates")
    max_iterations: int = Field(200, gt=0)
    theta: float = Field(1.0, ge=0.0, le=1.0, description="Time level of the transformed nonlinearity")


class ComplexGridState(BaseModel):
    """One time level of the complex field u_j"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    u: np.ndarray
    time: float = 0.0

    @field_validator("u", mode="before")
    @classmethod
    def _as_complex(cls, value):
        u = np.array(value, dtype=complex)
        if u.ndim != 1:
            raise ValueError("u must be one-dimensional")
        u.setflags(write=False)
        return u


class RealGridState4(BaseModel):
    """One time level of the real multi-symplectic state z_j, shape (nodes, dim)"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    z: np.ndarray
    time: float = 0.0

    @field_validator("z", mode="before")
    @classmethod
    def _as_real(cls, value):
        z = np.array(value, dtype=float)
        if z.ndim != 2:
            raise ValueError("z must have shape (nodes, dim)")
        z.setflags(write=False)
        return z


class TangentPair(BaseModel):
    """Two solutions of the variational equation, each shaped like RealGridState4.z"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    U: np.ndarray
    V: np.ndarray

    @model_validator(mode="after")
    def _same_shape(self):
        if self.U.shape != self.V.shape or self.U.ndim != 2:
            raise ValueError("Tangents must share a (nodes, dim) shape")
        return self
