import shutil
from pathlib import Path

import numpy as np
import pytest

from models.grid_models import GridSpec, StepConfig
from models.noise_models import NoiseKind, NoiseModel
from models.system_models import NlsParameters

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_grid():
    """Six nodes, the size used by the dense oracle"""
    return GridSpec(x_left=0.0, x_right=1.0, dx=0.2, dt=0.01)


@pytest.fixture
def soliton_grid():
    return GridSpec(x_left=-10.0, x_right=10.0, dx=0.2, dt=0.01)


@pytest.fixture
def periodic_grid():
    return GridSpec(x_left=0.0, x_right=2.0 * np.pi, dx=2.0 * np.pi / 32, dt=0.01, boundary="periodic")


@pytest.fixture
def params():
    return NlsParameters(alpha=0.1, epsilon=0.5)


@pytest.fixture
def step_cfg():
    return StepConfig(fixed_point_tol=1e-13, max_iterations=200)


@pytest.fixture
def spectral_noise():
    def make(grid: GridSpec, seed: int = 7, index: int = 0, modes: int = 8) -> NoiseModel:
        return NoiseModel(
            kind=NoiseKind.SPECTRAL,
            truncation_M=modes,
            domain=(grid.x_left, grid.x_right),
            seed=seed,
            trajectory_index=index,
        )

    return make


@pytest.fixture
def project_dir(tmp_path, monkeypatch):
    """Throwaway PROJECT_DIR holding a copy of the repository config.yaml"""
    shutil.copy(REPO_ROOT / "config.yaml", tmp_path / "config.yaml")
    monkeypatch.setenv("PROJECT_DIR", str(tmp_path))
    monkeypatch.delenv("SCMS_OUTPUT_DIR", raising=False)
    monkeypatch.delenv("SCMS_WORKERS", raising=False)
    return tmp_path


def random_field(rng, grid: GridSpec, scale: float = 0.5) -> np.ndarray:
    """Complex field vanishing at the Dirichlet ends"""
    u = scale * (rng.standard_normal(grid.n_nodes) + 1j * rng.standard_normal(grid.n_nodes))
    if not grid.periodic:
        u[0] = u[-1] = 0.0
    return u
