"""Exception hierarchy"""
from typing import Optional


class ScmsError(Exception):
    """Base class for every error raised by this project"""


class ConfigError(ScmsError):
    """Invalid or unknown configuration"""


class StructureError(ScmsError):
    """Array shapes, grids or system matrices that do not fit together"""


class NoiseError(ScmsError):
    """Invalid noise model request"""


class DiagnosticsError(ScmsError):
    """A diagnostic quantity is undefined for the given input"""


class SolverError(ScmsError):
    """Linear solve failed (singular or ill-posed system)"""


class StepFailure(SolverError):
    """Nonlinear iteration did not reach the requested tolerance"""

    def __init__(
        self,
        message: str,
        residual: float,
        iterations: int,
        step: Optional[int] = None,
        trajectory_index: Optional[int] = None,
        seed: Optional[int] = None,
    ):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.step = step
        self.trajectory_index = trajectory_index
        self.seed = seed

    def with_context(
        self,
        step: Optional[int] = None,
        trajectory_index: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> "StepFailure":
        """Attach trajectory coordinates for the failure ledger; None keeps what is known"""
        if step is not None:
            self.step = step
        if trajectory_index is not None:
            self.trajectory_index = trajectory_index
        if seed is not None:
            self.seed = seed
        return self


class ExperimentAborted(ScmsError):
    """Too many trajectories failed, or a trajectory failure is fatal"""
