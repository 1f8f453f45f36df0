"""Time steppers for damped stochastic Hamiltonian PDEs.

Four schemes share one calling convention, ``step(state, params_or_system,
noise_slice, grid, cfg)``, where ``noise_slice`` holds the Wiener increments
dW_j^n of the current step at every node:

- cms_step_generic: conformal multi-symplectic box scheme for any
  HamiltonianSystemSpec, Newton iteration on the stacked real system
- cms_step_nls: the same scheme for the NLS with v, w eliminated, a tridiagonal
  complex system per fixed-point sweep
- ms_step_transformed: box scheme for w = e^{alpha t} u with the damping
  moved into the nonlinearity
- cn_step: Crank-Nicolson comparator (not conformal)

tangent_step propagates perturbations through the linearized generic scheme.
"""
import math
from typing import Callable, List, Optional, Tuple

import numpy as np

from models.grid_models import ComplexGridState, GridSpec, RealGridState4, StepConfig, TangentPair
from models.noise_models import NoisePath
from models.system_models import HamiltonianSystemSpec, NlsParameters
from services.grid_operators import check_length, conformal_factor
from utils.banded import BandedSystem, cyclic_tridiagonal_solve, tridiagonal_solve
from utils.errors import StepFailure, StructureError


def _chi(noise_slice, grid: GridSpec) -> np.ndarray:
    noise_slice = np.asarray(noise_slice, dtype=float)
    if noise_slice.shape != (grid.n_nodes,):
        raise StructureError(f"Noise slice has shape {noise_slice.shape}, grid has {grid.n_nodes} nodes")
    return noise_slice / grid.dt


def _complex_state(state: ComplexGridState, grid: GridSpec) -> np.ndarray:
    check_length(state.u, grid, "state")
    return np.array(state.u)


def _solve_complex(lower, diag, upper, rhs, grid: GridSpec) -> np.ndarray:
    """Interior solve for Dirichlet grids (end values zero), cyclic solve for periodic ones"""
    if grid.periodic:
        return cyclic_tridiagonal_solve(lower, diag, upper, rhs)
    w = np.zeros(grid.n_nodes, dtype=complex)
    w[1:-1] = tridiagonal_solve(lower, diag, upper, rhs)
    return w


def _fixed_point(sweep: Callable[[np.ndarray], np.ndarray], w: np.ndarray, cfg: StepConfig) -> np.ndarray:
    change = math.inf
    for _ in range(cfg.max_iterations):
        w_next = sweep(w)
        change = float(np.max(np.abs(w_next - w)))
        w = w_next
        if change < cfg.fixed_point_tol:
            return w
    raise StepFailure(
        f"Fixed-point iteration stalled at {change:.3e} after {cfg.max_iterations} sweeps",
        residual=change,
        iterations=cfg.max_iterations,
    )


def _box_scheme_sweep(u: np.ndarray, decay: float, nonlinear_scale: float, noise: np.ndarray, grid: GridSpec):
    """One linear sweep of the eliminated NLS box scheme.

    Equation j couples nodes j, j+1, j+2 through the cells j and j+1:
    delta_t A_x u_{j+1} + delta_t A_x u_j - 2i (delta_x)^2 A_t u_j
      = i s_j b_j + i s_{j+1} b_{j+1},
    with b = A_t A_x u and s_j = scale |b_j|^2 + eps chi_j, where |b_j|^2 is
    taken from the previous sweep. Returns the sweep as a closure over u.
    """
    dt, dx = grid.dt, grid.dx
    half, one = 0.5 / dt, 1.0 / dt
    lap = 1.0 / dx**2
    periodic = grid.periodic

    def sweep(w: np.ndarray) -> np.ndarray:
        a = (w + decay * u) / 2.0
        if periodic:
            b = (np.roll(a, -1) + a) / 2.0
        else:
            b = (a[1:] + a[:-1]) / 2.0
        s = nonlinear_scale * np.abs(b) ** 2 + noise[: len(b)]
        if periodic:
            s0, s1 = s, np.roll(s, -1)
            u0, u1, u2 = u, np.roll(u, -1), np.roll(u, -2)
        else:
            s0, s1 = s[:-1], s[1:]
            u0, u1, u2 = u[:-2], u[1:-1], u[2:]

        lower = half - 1j * lap - 0.25j * s0
        diag = one + 2j * lap - 0.25j * (s0 + s1)
        upper = half - 1j * lap - 0.25j * s1
        rhs = decay * (
            u0 * (half + 1j * lap + 0.25j * s0)
            + u1 * (one - 2j * lap + 0.25j * (s0 + s1))
            + u2 * (half + 1j * lap + 0.25j * s1)
        )
        if periodic:
            # equation j is centred on node j+1
            lower, diag, upper, rhs = (np.roll(x, 1) for x in (lower, diag, upper, rhs))
        return _solve_complex(lower, diag, upper, rhs, grid)

    return sweep


def cms_step_nls(
    u: ComplexGridState, params: NlsParameters, noise_slice, grid: GridSpec, cfg: StepConfig
) -> ComplexGridState:
    u_curr = _complex_state(u, grid)
    noise = params.epsilon * _chi(noise_slice, grid)
    sweep = _box_scheme_sweep(u_curr, conformal_factor(params.alpha, grid.dt), 1.0, noise, grid)
    w = conformal_factor(params.alpha, grid.dt / 2.0) * u_curr
    if not grid.periodic:
        w[0] = w[-1] = 0.0
    return ComplexGridState(u=_fixed_point(sweep, w, cfg), time=u.time + grid.dt)


def ms_step_transformed(
    w: ComplexGridState, params: NlsParameters, noise_slice, grid: GridSpec, cfg: StepConfig
) -> ComplexGridState:
    """Box scheme for the undamped variable; the cubic term carries e^{-2 alpha t_{n+theta}}"""
    w_curr = _complex_state(w, grid)
    noise = params.epsilon * _chi(noise_slice, grid)
    t_theta = w.time + cfg.theta * grid.dt
    sweep = _box_scheme_sweep(w_curr, 1.0, math.exp(-2.0 * params.alpha * t_theta), noise, grid)
    guess = w_curr.copy()
    if not grid.periodic:
        guess[0] = guess[-1] = 0.0
    return ComplexGridState(u=_fixed_point(sweep, guess, cfg), time=w.time + grid.dt)


def cn_step(
    u: ComplexGridState, params: NlsParameters, noise_slice, grid: GridSpec, cfg: StepConfig
) -> ComplexGridState:
    """delta_t u + alpha u^{n+1/2} - i Lap u^{n+1/2} - i u^{n+1/2} A_t|u|^2 = i eps u^{n+1/2} chi"""
    u_curr = _complex_state(u, grid)
    noise = params.epsilon * _chi(noise_slice, grid)
    dt, alpha = grid.dt, params.alpha
    lap = 1.0 / grid.dx**2
    if grid.periodic:
        inner = slice(None)
        u_left, u_right = np.roll(u_curr, 1), np.roll(u_curr, -1)
    else:
        inner = slice(1, -1)
        u_left, u_right = u_curr[:-2], u_curr[2:]
    u_mid = u_curr[inner]
    rho_curr = np.abs(u_mid) ** 2
    chi_mid = noise[inner]
    off = np.full(len(u_mid), -0.5j * lap)

    def sweep(w: np.ndarray) -> np.ndarray:
        s = (np.abs(w[inner]) ** 2 + rho_curr) / 2.0 + chi_mid
        diag = 1.0 / dt + alpha / 2.0 + 1j * lap - 0.5j * s
        rhs = u_mid * (1.0 / dt - alpha / 2.0 - 1j * lap + 0.5j * s) + 0.5j * lap * (u_left + u_right)
        return _solve_complex(off, diag, off, rhs, grid)

    guess = u_curr.copy()
    if not grid.periodic:
        guess[0] = guess[-1] = 0.0
    return ComplexGridState(u=_fixed_point(sweep, guess, cfg), time=u.time + grid.dt)


class _BoxLinearization:
    """Cell residuals and Jacobian blocks of the generic scheme at (z^n, z^{n+1}).

    Cell j residual:
      M delta_t A_x z + K delta_x A_t z - grad S1(zeta_j) - grad S2(zeta_j) chi_j,
    zeta = A_t A_x z with exponents a/2 in time and b/2 in space.
    """

    def __init__(self, system: HamiltonianSystemSpec, w: np.ndarray, y: np.ndarray, chi: np.ndarray,
                 t: float, grid: GridSpec):
        dt, dx = grid.dt, grid.dx
        self.ct = ct = conformal_factor(system.a / 2.0, dt)
        self.cx = cx = conformal_factor(system.b / 2.0, dx)
        M, K = system.M, system.K
        ax_w = (w[1:] + cx * w[:-1]) / 2.0
        ax_y = (y[1:] + cx * y[:-1]) / 2.0
        dx_w = (w[1:] - cx * w[:-1]) / dx
        dx_y = (y[1:] - cx * y[:-1]) / dx
        zeta = (ax_w + ct * ax_y) / 2.0
        chi_cells = chi[:-1]

        self.residual = (
            ((ax_w - ct * ax_y) / dt) @ M.T
            + ((dx_w + ct * dx_y) / 2.0) @ K.T
            - system.grad_S1(zeta, t=t)
            - system.grad_S2(zeta) * chi_cells[:, None]
        )
        H = system.hess_S1(zeta, t=t) + system.hess_S2(zeta) * chi_cells[:, None, None]
        m_part = M / (2.0 * dt)
        k_part = K / (2.0 * dx)
        # derivatives with respect to w_{j+1}, w_j, y_{j+1}, y_j
        self.new_right = m_part + k_part - H / 4.0
        self.new_left = cx * (m_part - k_part - H / 4.0)
        self.old_right = ct * (-m_part + k_part - H / 4.0)
        self.old_left = ct * cx * (-m_part - k_part - H / 4.0)


class _PinnedLayout:
    """Row/column bookkeeping: left pins, cell rows (j, component), right pins"""

    def __init__(self, system: HamiltonianSystemSpec, n_nodes: int):
        self.d = d = system.dim
        self.n_nodes = n_nodes
        self.n_cells = n_nodes - 1
        left = [c for side, c in system.boundary_pins if side == "left"]
        right = [c for side, c in system.boundary_pins if side == "right"]
        self.left_cols = np.array(left, dtype=int)
        self.right_cols = np.array(right, dtype=int) + self.n_cells * d
        self.n_left = len(left)
        self.size = n_nodes * d
        self.mask = np.zeros((n_nodes, d), dtype=bool)
        self.mask[0, left] = True
        self.mask[-1, right] = True

    def matrix(self, lin: _BoxLinearization) -> BandedSystem:
        d, J = self.d, self.n_cells
        band = BandedSystem(self.size, 2 * d, 2 * d)
        band.add(np.arange(self.n_left), self.left_cols, 1.0)
        right_rows = self.n_left + J * d + np.arange(len(self.right_cols))
        band.add(right_rows, self.right_cols, 1.0)

        j = np.arange(J)[:, None, None]
        c = np.arange(d)[None, :, None]
        c_prime = np.arange(d)[None, None, :]
        rows = np.broadcast_to(self.n_left + j * d + c, (J, d, d))
        cols_left = np.broadcast_to(j * d + c_prime, (J, d, d))
        band.add(rows.ravel(), cols_left.ravel(), lin.new_left.ravel())
        band.add(rows.ravel(), (cols_left + d).ravel(), lin.new_right.ravel())
        return band

    def stack(self, pins_left: np.ndarray, cells: np.ndarray, pins_right: np.ndarray) -> np.ndarray:
        return np.concatenate([pins_left, cells.ravel(), pins_right])


def cms_step_generic(
    system: HamiltonianSystemSpec, z: RealGridState4, noise_slice, grid: GridSpec, cfg: StepConfig
) -> RealGridState4:
    """Conformal box scheme on the full real state, Dirichlet pins set to zero.

    Newton iteration with the Jacobian rebuilt from the Hessians every sweep;
    converges when the max-norm of the update drops below fixed_point_tol.
    """
    if grid.periodic:
        raise StructureError("The generic stepper closes its system with boundary pins; use a Dirichlet grid")
    y = np.asarray(z.z, dtype=float)
    if y.shape != (grid.n_nodes, system.dim):
        raise StructureError(f"State has shape {y.shape}, expected {(grid.n_nodes, system.dim)}")
    chi = _chi(noise_slice, grid)
    t = z.time + cfg.theta * grid.dt
    layout = _PinnedLayout(system, grid.n_nodes)

    w = y.copy()
    w[layout.mask] = 0.0
    change = math.inf
    for _ in range(cfg.max_iterations):
        lin = _BoxLinearization(system, w, y, chi, t, grid)
        flat = w.ravel()
        residual = layout.stack(flat[layout.left_cols], lin.residual, flat[layout.right_cols])
        update = layout.matrix(lin).solve(-residual)
        w = w + update.reshape(w.shape)
        change = float(np.max(np.abs(update)))
        if change < cfg.fixed_point_tol:
            return RealGridState4(z=w, time=z.time + grid.dt)
    raise StepFailure(
        f"Newton iteration stalled at {change:.3e} after {cfg.max_iterations} sweeps",
        residual=change,
        iterations=cfg.max_iterations,
    )


def tangent_step(
    system: HamiltonianSystemSpec,
    base_pair: Tuple[RealGridState4, RealGridState4],
    tangents: TangentPair,
    noise_slice,
    grid: GridSpec,
    cfg: StepConfig,
) -> TangentPair:
    """Advance both tangents through the scheme linearized at the frozen base step"""
    z_curr, z_next = base_pair
    y, w = np.asarray(z_curr.z), np.asarray(z_next.z)
    if tangents.U.shape != y.shape:
        raise StructureError(f"Tangents have shape {tangents.U.shape}, base state {y.shape}")
    chi = _chi(noise_slice, grid)
    lin = _BoxLinearization(system, w, y, chi, z_curr.time + cfg.theta * grid.dt, grid)
    layout = _PinnedLayout(system, grid.n_nodes)
    matrix = layout.matrix(lin)
    pins_left = np.zeros(layout.n_left)
    pins_right = np.zeros(len(layout.right_cols))

    def advance_one(T: np.ndarray) -> np.ndarray:
        driven = np.einsum("jab,jb->ja", lin.old_left, T[:-1]) + np.einsum("jab,jb->ja", lin.old_right, T[1:])
        return matrix.solve(-layout.stack(pins_left, driven, pins_right)).reshape(T.shape)

    return TangentPair(U=advance_one(np.asarray(tangents.U)), V=advance_one(np.asarray(tangents.V)))


def advance(stepper: Callable, state, path: NoisePath, n_steps: Optional[int] = None) -> List:
    """Run ``stepper(state, noise_slice=...)`` over the path; returns every time level"""
    n_steps = path.n_steps if n_steps is None else n_steps
    if n_steps > path.n_steps:
        raise StructureError(f"Path covers {path.n_steps} steps, {n_steps} requested")
    states = [state]
    for n in range(n_steps):
        try:
            states.append(stepper(states[-1], noise_slice=path.increments[n]))
        except StepFailure as e:
            raise e.with_context(step=n)
    return states
