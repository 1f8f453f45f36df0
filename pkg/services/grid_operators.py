"""Conformal difference and averaging operators on uniform grids.

Arrays are indexed by node along axis 0; any trailing axes (state components)
are carried along. Temporal operators combine two time levels node by node,
spatial operators use the forward stencil (j, j+1) and return one entry per
cell, J entries for J+1 nodes. Periodic spatial operators wrap the last cell
back to node 0.
"""
import math
from functools import lru_cache

import numpy as np

from models.grid_models import GridSpec
from utils.errors import StructureError


@lru_cache(maxsize=256)
def conformal_factor(c: float, h: float) -> float:
    """e^{-c h}, shared by every scheme so identities hold bit for bit"""
    return math.exp(-c * h)


def _pair(z_next, z_curr):
    z_next = np.asarray(z_next)
    z_curr = np.asarray(z_curr)
    if z_next.shape != z_curr.shape:
        raise StructureError(f"Time levels differ in shape: {z_next.shape} vs {z_curr.shape}")
    return z_next, z_curr


def _cells(z, periodic: bool):
    z = np.asarray(z)
    if z.ndim == 0 or z.shape[0] < 2:
        raise StructureError("Spatial operators need at least two nodes")
    if periodic:
        return np.roll(z, -1, axis=0), z
    return z[1:], z[:-1]


def delta_t(c: float, z_next, z_curr, dt: float) -> np.ndarray:
    """(z^{n+1} - e^{-c dt} z^n) / dt"""
    z_next, z_curr = _pair(z_next, z_curr)
    return (z_next - conformal_factor(c, dt) * z_curr) / dt


def avg_t(c: float, z_next, z_curr, dt: float) -> np.ndarray:
    """(z^{n+1} + e^{-c dt} z^n) / 2"""
    z_next, z_curr = _pair(z_next, z_curr)
    return (z_next + conformal_factor(c, dt) * z_curr) / 2.0


def delta_x(c: float, z, dx: float, periodic: bool = False) -> np.ndarray:
    """(z_{j+1} - e^{-c dx} z_j) / dx"""
    right, left = _cells(z, periodic)
    return (right - conformal_factor(c, dx) * left) / dx


def avg_x(c: float, z, dx: float, periodic: bool = False) -> np.ndarray:
    """(z_{j+1} + e^{-c dx} z_j) / 2"""
    right, left = _cells(z, periodic)
    return (right + conformal_factor(c, dx) * left) / 2.0


def second_difference(z, dx: float, periodic: bool = False) -> np.ndarray:
    """Centered (z_{j+1} - 2 z_j + z_{j-1}) / dx^2 at interior nodes, or at every node when periodic"""
    z = np.asarray(z)
    if periodic:
        return (np.roll(z, -1, axis=0) - 2.0 * z + np.roll(z, 1, axis=0)) / dx**2
    if z.shape[0] < 3:
        raise StructureError("Second difference needs at least three nodes")
    return (z[2:] - 2.0 * z[1:-1] + z[:-2]) / dx**2


def inner(x, y) -> np.ndarray:
    """Pointwise real inner product; sums the component axis when present"""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise StructureError(f"Inner product of mismatched shapes {x.shape} and {y.shape}")
    if x.ndim > 1:
        return np.sum(x * y, axis=-1)
    return x * y


def grid_nodes(grid: GridSpec) -> np.ndarray:
    return grid.nodes()


def check_length(z, grid: GridSpec, what: str = "array"):
    if np.shape(z)[0] != grid.n_nodes:
        raise StructureError(f"{what} has {np.shape(z)[0]} nodes, grid has {grid.n_nodes}")
