"""Reproducible Wiener paths: scalar Brownian motion and truncated sine-series noise"""
import math
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from models.grid_models import GridSpec
from models.noise_models import NoiseKind, NoiseModel, NoisePath
from utils.errors import NoiseError

SCALAR_MODE = 0


def _check_in_domain(x, domain):
    x_left, x_right = domain
    slack = 1e-12 * (x_right - x_left)
    x = np.asarray(x, dtype=float)
    if np.any(x < x_left - slack) or np.any(x > x_right + slack):
        raise NoiseError(f"Points outside the noise domain [{x_left}, {x_right}]")
    return x


def basis_e(m: int, x, domain) -> Union[float, np.ndarray]:
    """sqrt(2/L) sin(m pi (x - x_left)/L), orthonormal on the domain"""
    if m < 1:
        raise NoiseError(f"Basis index must be >= 1, got {m}")
    x = _check_in_domain(x, domain)
    x_left, x_right = domain
    length = x_right - x_left
    values = math.sqrt(2.0 / length) * np.sin(m * math.pi * (x - x_left) / length)
    return float(values) if values.ndim == 0 else values


def f_phi(model: NoiseModel, x) -> Union[float, np.ndarray]:
    """Spatial variance density sum_m eta_m e_m(x)^2; a scalar Brownian motion has density 1"""
    x = _check_in_domain(x, model.domain)
    if model.kind == NoiseKind.SCALAR:
        values = np.ones_like(x)
    else:
        values = np.zeros_like(x)
        for m in range(1, model.truncation_M + 1):
            values = values + model.eta[m - 1] * basis_e(m, x, model.domain) ** 2
    return float(values) if values.ndim == 0 else values


def mode_generator(model: NoiseModel, mode: int) -> np.random.Generator:
    """Counter-based stream for one Brownian mode of one trajectory"""
    seed_sequence = np.random.SeedSequence([model.seed, model.trajectory_index, mode])
    return np.random.Generator(np.random.Philox(seed_sequence))


def brownian_increments(model: NoiseModel, dt: float, n_steps: int) -> np.ndarray:
    """beta_m(t_{n+1}) - beta_m(t_n), shape (n_steps, modes)"""
    if n_steps <= 0:
        raise NoiseError("n_steps must be positive")
    if model.kind == NoiseKind.SCALAR:
        modes = [SCALAR_MODE]
    else:
        modes = range(1, model.truncation_M + 1)
    scale = math.sqrt(dt)
    return np.column_stack([scale * mode_generator(model, m).standard_normal(n_steps) for m in modes])


def spatial_weights(model: NoiseModel, x: np.ndarray) -> np.ndarray:
    """sqrt(eta_m) e_m(x_j), shape (nodes, modes)"""
    return np.column_stack(
        [math.sqrt(model.eta[m - 1]) * basis_e(m, x, model.domain) for m in range(1, model.truncation_M + 1)]
    )


def sample_path(model: NoiseModel, grid: GridSpec, n_steps: int, resolution_level: int = 0) -> NoisePath:
    if n_steps <= 0:
        raise NoiseError("n_steps must be positive")
    db = brownian_increments(model, grid.dt, n_steps)
    if model.kind == NoiseKind.SCALAR:
        increments = np.repeat(db, grid.n_nodes, axis=1)
    else:
        increments = db @ spatial_weights(model, grid.nodes()).T
    return NoisePath(increments=increments, dt=grid.dt, resolution_level=resolution_level, kind=model.kind)


def refine_or_coarsen(path: NoisePath, level_delta: int) -> NoisePath:
    """Coarsen by 2^{-level_delta}, halving repeatedly so every level is a pairwise partial sum"""
    if level_delta == 0:
        return path
    if level_delta > 0:
        raise NoiseError("Refinement needs the finer Brownian increments; sample the finer path and coarsen it")

    factor = 2 ** (-level_delta)
    if path.n_steps % factor != 0:
        raise NoiseError(f"{path.n_steps} steps cannot be coarsened by a factor {factor}")

    increments = np.array(path.increments)
    for _ in range(-level_delta):
        increments = increments[0::2] + increments[1::2]
    return NoisePath(
        increments=increments,
        dt=path.dt * factor,
        resolution_level=path.resolution_level + level_delta,
        kind=path.kind,
    )


def chi(path: NoisePath, n: int) -> np.ndarray:
    """Discrete white noise dW^n / dt at every node"""
    return path.increments[n] / path.dt


def dump_path(path: NoisePath, file: Union[str, Path]):
    n, j = np.indices(path.increments.shape)
    frame = pd.DataFrame({"n": n.ravel(), "j": j.ravel(), "dW": path.increments.ravel()})
    frame.to_csv(file, index=False, float_format="%.17g")


def load_path(
    file: Union[str, Path],
    dt: float,
    kind: NoiseKind = NoiseKind.SPECTRAL,
    resolution_level: int = 0,
) -> NoisePath:
    frame = pd.read_csv(file, dtype={"n": np.int64, "j": np.int64, "dW": np.float64}, float_precision="round_trip")
    missing = {"n", "j", "dW"} - set(frame.columns)
    if missing:
        raise NoiseError(f"Noise dump is missing columns {sorted(missing)}")
    shape = (int(frame["n"].max()) + 1, int(frame["j"].max()) + 1)
    if len(frame) != shape[0] * shape[1]:
        raise NoiseError("Noise dump does not cover a full (n, j) table")
    increments = np.full(shape, np.nan)
    increments[frame["n"].to_numpy(), frame["j"].to_numpy()] = frame["dW"].to_numpy()
    if np.isnan(increments).any():
        raise NoiseError("Noise dump has duplicate or missing (n, j) entries")
    return NoisePath(increments=increments, dt=dt, resolution_level=resolution_level, kind=kind)
