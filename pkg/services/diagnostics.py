"""Conserved and dissipated functionals, residuals, exact solutions and error norms"""
import math
from typing import Sequence, Tuple, Union

import numpy as np

from models.grid_models import ComplexGridState, GridSpec, TangentPair
from models.system_models import HamiltonianSystemSpec, NlsParameters
from services.grid_operators import avg_t, avg_x, conformal_factor, delta_t, delta_x, inner
from utils.errors import DiagnosticsError

Field = Union[ComplexGridState, np.ndarray]


def _values(u: Field, grid: GridSpec = None) -> np.ndarray:
    values = np.asarray(u.u if isinstance(u, ComplexGridState) else u)
    if grid is not None and values.shape[0] != grid.n_nodes:
        raise DiagnosticsError(f"Field has {values.shape[0]} nodes, grid has {grid.n_nodes}")
    return values


def _cell_average(u: np.ndarray, grid: GridSpec) -> np.ndarray:
    return avg_x(0.0, u, grid.dx, periodic=grid.periodic)


def discrete_charge(u: Field, grid: GridSpec) -> float:
    """dx * sum_j |(u_{j+1} + u_j)/2|^2"""
    return grid.dx * math.fsum(np.abs(_cell_average(_values(u, grid), grid)) ** 2)


def charge_residual(Q_curr: float, Q_next: float, alpha: float, dt: float) -> float:
    """2 alpha dt - log(Q^n / Q^{n+1}); zero for an exactly conformal step"""
    if Q_curr <= 0 or Q_next <= 0:
        raise DiagnosticsError(f"Charge residual needs positive charges, got {Q_curr} and {Q_next}")
    return 2.0 * alpha * dt - math.log(Q_curr / Q_next)


def reference_charge(t, Q0: float, alpha: float):
    return Q0 * np.exp(-2.0 * alpha * np.asarray(t, dtype=float))


def plane_wave_phase(t: float, W_t: float, A: complex, params: NlsParameters) -> float:
    """Unwrapped phase of the exact plane wave, arg(A) included"""
    rho = abs(A) ** 2
    if params.alpha == 0.0:
        drift = rho * t
    else:
        drift = -rho * math.expm1(-2.0 * params.alpha * t) / (2.0 * params.alpha)
    return float(np.angle(A)) + drift + params.epsilon * W_t


def plane_wave_exact(t: float, W_t: float, A: complex, params: NlsParameters) -> complex:
    """A e^{-alpha t} exp(i(|A|^2 (1 - e^{-2 alpha t})/(2 alpha) + eps W(t)))"""
    phase = plane_wave_phase(t, W_t, A, params) - float(np.angle(A))
    return A * math.exp(-params.alpha * t) * complex(math.cos(phase), math.sin(phase))


def wrap_phase(angle: float) -> float:
    """Representative of the angle in (-pi, pi]"""
    return float(np.angle(np.exp(1j * angle)))


def amplitude_phase_error(u: Field, exact: complex) -> Tuple[float, float]:
    values = _values(u)
    if not np.any(values) or exact == 0:
        raise DiagnosticsError("Phase is undefined for a zero field")
    amplitude = float(np.mean(np.abs(values)))
    phase = float(np.mean(np.unwrap(np.angle(values))))
    return amplitude - abs(exact), wrap_phase(phase - float(np.angle(exact)))


def discrete_l2_error(u: Field, v: Field, grid: GridSpec) -> float:
    u_values, v_values = _values(u), _values(v)
    if u_values.shape != v_values.shape or u_values.shape[0] != grid.n_nodes:
        raise DiagnosticsError(
            f"Fields on different grids: {u_values.shape} and {v_values.shape} for {grid.n_nodes} nodes"
        )
    return math.sqrt(grid.dx * math.fsum(np.abs(u_values - v_values) ** 2))


def discrete_hamiltonian(u: Field, grid: GridSpec) -> float:
    """1/2 dx sum |delta_x u|^2 - 1/4 dx sum |A_x u|^4"""
    values = _values(u, grid)
    gradient = delta_x(0.0, values, grid.dx, periodic=grid.periodic)
    cells = _cell_average(values, grid)
    return grid.dx * (0.5 * math.fsum(np.abs(gradient) ** 2) - 0.25 * math.fsum(np.abs(cells) ** 4))


def energy_terms(u_curr: Field, u_next: Field, params: NlsParameters, noise_slice, grid: GridSpec) -> dict:
    """Both sides of the discrete energy recursion of the conformal NLS scheme.

    With c = e^{-alpha dt}, b_j = A_t^alpha A_x u_j and sums over cells:
      sum|delta_x u^{n+1}|^2 - sum|b|^2 |A_x u^{n+1}|^2
        = c^2 (sum|delta_x u^n|^2 - sum|b|^2 |A_x u^n|^2)
          + eps sum chi_j (|A_x u_j^{n+1}|^2 - c^2 |A_x u_j^n|^2)
    """
    u_values, w_values = _values(u_curr, grid), _values(u_next, grid)
    dx, periodic = grid.dx, grid.periodic
    decay = conformal_factor(params.alpha, grid.dt)
    chi = np.asarray(noise_slice, dtype=float) / grid.dt

    cells_u = _cell_average(u_values, grid)
    cells_w = _cell_average(w_values, grid)
    b = avg_t(params.alpha, cells_w, cells_u, grid.dt)
    weight = np.abs(b) ** 2
    chi_cells = chi[: len(cells_u)]

    grad_next = math.fsum(np.abs(delta_x(0.0, w_values, dx, periodic)) ** 2)
    grad_curr = math.fsum(np.abs(delta_x(0.0, u_values, dx, periodic)) ** 2)
    quartic_next = math.fsum(weight * np.abs(cells_w) ** 2)
    quartic_curr = math.fsum(weight * np.abs(cells_u) ** 2)
    noise = params.epsilon * math.fsum(chi_cells * (np.abs(cells_w) ** 2 - decay**2 * np.abs(cells_u) ** 2))
    return {
        "grad_next": grad_next,
        "grad_curr": grad_curr,
        "quartic_next": quartic_next,
        "quartic_curr": quartic_curr,
        "noise": noise,
        "lhs": grad_next - quartic_next,
        "rhs": decay**2 * (grad_curr - quartic_curr) + noise,
    }


def energy_recursion_check(u_curr: Field, u_next: Field, params: NlsParameters, noise_slice, grid: GridSpec) -> float:
    terms = energy_terms(u_curr, u_next, params, noise_slice, grid)
    return abs(terms["lhs"] - terms["rhs"])


def cn_charge_check(u_curr: Field, u_next: Field, alpha: float, dt: float, grid: GridSpec) -> float:
    """|sum|u^{n+1}|^2 - sum|u^n|^2 + 2 alpha dt sum|u^{n+1/2}|^2|"""
    u_values, w_values = _values(u_curr, grid), _values(u_next, grid)
    midpoint = (u_values + w_values) / 2.0
    return abs(
        math.fsum(np.abs(w_values) ** 2)
        - math.fsum(np.abs(u_values) ** 2)
        + 2.0 * alpha * dt * math.fsum(np.abs(midpoint) ** 2)
    )


def two_form_defect(
    system: HamiltonianSystemSpec,
    base_pair,
    tangents_curr: TangentPair,
    tangents_next: TangentPair,
    grid: GridSpec,
) -> np.ndarray:
    """Per-cell defect of delta_t^a <M A_x U, A_x V> + delta_x^b <K A_t U, A_t V>.

    Spatial averages use exponent b/2, temporal ones a/2; the outer differences
    use the full exponents.
    """
    z_curr, _ = base_pair
    if tangents_curr.U.shape != np.shape(z_curr.z) or tangents_next.U.shape != tangents_curr.U.shape:
        raise DiagnosticsError("Tangents and base state have different shapes")
    dt, dx = grid.dt, grid.dx
    M, K = system.M, system.K

    def symplectic(T: TangentPair) -> np.ndarray:
        U = avg_x(system.b / 2.0, T.U, dx)
        V = avg_x(system.b / 2.0, T.V, dx)
        return inner(U @ M.T, V)

    U_mid = avg_t(system.a / 2.0, tangents_next.U, tangents_curr.U, dt)
    V_mid = avg_t(system.a / 2.0, tangents_next.V, tangents_curr.V, dt)
    flux = inner(U_mid @ K.T, V_mid)
    return delta_t(system.a, symplectic(tangents_next), symplectic(tangents_curr), dt) + delta_x(system.b, flux, dx)


def ensemble_mean(rows: Sequence[Sequence[float]]) -> np.ndarray:
    """Column means with compensated summation, rows taken in the order given"""
    rows = [np.asarray(row, dtype=float) for row in rows]
    if not rows:
        raise DiagnosticsError("Ensemble mean of an empty ensemble")
    lengths = {len(row) for row in rows}
    if len(lengths) != 1:
        raise DiagnosticsError(f"Ensemble rows have different lengths {sorted(lengths)}")
    table = np.vstack(rows)
    return np.array([math.fsum(column) / len(rows) for column in table.T])
