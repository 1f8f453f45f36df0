"""Damped stochastic Hamiltonian PDE structures"""
from typing import Dict, Optional

import numpy as np

from models.system_models import HamiltonianSystemSpec, NlsParameters
from utils.errors import StructureError

NLS_M = [
    [0.0, -1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
]
NLS_K = [
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [-1.0, 0.0, 0.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
]
KDV_M = [
    [0.0, 0.5, 0.0, 0.0],
    [-0.5, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
]
KDV_K = [
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
]

# u = p + iq vanishes at both ends; v, w are closed by the scheme itself
NLS_PINS = (("left", 0), ("left", 1), ("right", 0), ("right", 1))
# u(x_L) = u(x_R) = 0, u_x(x_R) = 0 and the potential phi fixed at x_L
KDV_PINS = (("left", 1), ("right", 1), ("right", 2), ("left", 0))


def _stack(*components) -> np.ndarray:
    return np.stack(np.broadcast_arrays(*components), axis=-1)


def _hessian(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.zeros(z.shape + (z.shape[-1],))


def nls_system(params: NlsParameters) -> HamiltonianSystemSpec:
    """Damped stochastic NLS in the variables z = (p, q, v, w), a = 2 alpha, b = 0"""
    eps = params.epsilon

    def S1(z, t=0.0):
        p, q, v, w = np.moveaxis(np.asarray(z, dtype=float), -1, 0)
        return -0.5 * (v**2 + w**2) - 0.25 * (p**2 + q**2) ** 2

    def grad_S1(z, t=0.0):
        p, q, v, w = np.moveaxis(np.asarray(z, dtype=float), -1, 0)
        rho = p**2 + q**2
        return _stack(-p * rho, -q * rho, -v, -w)

    def hess_S1(z, t=0.0):
        p, q, _, _ = np.moveaxis(np.asarray(z, dtype=float), -1, 0)
        hess = _hessian(z)
        hess[..., 0, 0] = -(3.0 * p**2 + q**2)
        hess[..., 1, 1] = -(p**2 + 3.0 * q**2)
        hess[..., 0, 1] = hess[..., 1, 0] = -2.0 * p * q
        hess[..., 2, 2] = -1.0
        hess[..., 3, 3] = -1.0
        return hess

    def S2(z):
        p, q, _, _ = np.moveaxis(np.asarray(z, dtype=float), -1, 0)
        return -0.5 * eps * (p**2 + q**2)

    def grad_S2(z):
        p, q, _, _ = np.moveaxis(np.asarray(z, dtype=float), -1, 0)
        return _stack(-eps * p, -eps * q, 0.0 * p, 0.0 * p)

    def hess_S2(z):
        hess = _hessian(z)
        hess[..., 0, 0] = -eps
        hess[..., 1, 1] = -eps
        return hess

    return HamiltonianSystemSpec(
        name="nls",
        dim=4,
        M=NLS_M,
        K=NLS_K,
        a=2.0 * params.alpha,
        b=0.0,
        S1=S1,
        S2=S2,
        grad_S1=grad_S1,
        grad_S2=grad_S2,
        hess_S1=hess_S1,
        hess_S2=hess_S2,
        boundary_pins=NLS_PINS,
    )


def kdv_system(alpha: float, gamma: float) -> HamiltonianSystemSpec:
    """Damped stochastic KdV with additive noise, z = (phi, u, v, w).

    The damping term alpha*u/2 of the first-order system fixes D[0][1] = alpha/2;
    with D = -(a/2) M and M[0][1] = 1/2 this requires a = -2 alpha.
    """
    if gamma < 0:
        raise StructureError("gamma must be nonnegative")

    def S1(z, t=0.0):
        _, u, v, w = np.moveaxis(np.asarray(z, dtype=float), -1, 0)
        return u**3 - u * w + 0.5 * v**2

    def grad_S1(z, t=0.0):
        phi, u, v, w = np.moveaxis(np.asarray(z, dtype=float), -1, 0)
        return _stack(0.0 * phi, 3.0 * u**2 - w, v, -u)

    def hess_S1(z, t=0.0):
        _, u, _, _ = np.moveaxis(np.asarray(z, dtype=float), -1, 0)
        hess = _hessian(z)
        hess[..., 1, 1] = 6.0 * u
        hess[..., 1, 3] = hess[..., 3, 1] = -1.0
        hess[..., 2, 2] = 1.0
        return hess

    def S2(z):
        phi = np.asarray(z, dtype=float)[..., 0]
        return gamma * phi

    def grad_S2(z):
        phi = np.asarray(z, dtype=float)[..., 0]
        zero = 0.0 * phi
        return _stack(zero + gamma, zero, zero, zero)

    def hess_S2(z):
        return _hessian(z)

    return HamiltonianSystemSpec(
        name="kdv",
        dim=4,
        M=KDV_M,
        K=KDV_K,
        a=-2.0 * alpha,
        b=0.0,
        S1=S1,
        S2=S2,
        grad_S1=grad_S1,
        grad_S2=grad_S2,
        hess_S1=hess_S1,
        hess_S2=hess_S2,
        boundary_pins=KDV_PINS,
    )


def transformed_nls_system(params: NlsParameters) -> HamiltonianSystemSpec:
    """Undamped form of the NLS for w = exp(alpha t) u, state (r, s, xi, eta).

    The damping moves into the time-dependent factor exp(-2 alpha t) of S1.
    """
    alpha, eps = params.alpha, params.epsilon

    def S1(z, t=0.0):
        r, s, xi, eta = np.moveaxis(np.asarray(z, dtype=float), -1, 0)
        return 0.5 * (xi**2 + eta**2) + 0.25 * np.exp(-2.0 * alpha * t) * (r**2 + s**2) ** 2

    def grad_S1(z, t=0.0):
        r, s, xi, eta = np.moveaxis(np.asarray(z, dtype=float), -1, 0)
        scale = np.exp(-2.0 * alpha * t) * (r**2 + s**2)
        return _stack(scale * r, scale * s, xi, eta)

    def hess_S1(z, t=0.0):
        r, s, _, _ = np.moveaxis(np.asarray(z, dtype=float), -1, 0)
        decay = np.exp(-2.0 * alpha * t)
        hess = _hessian(z)
        hess[..., 0, 0] = decay * (3.0 * r**2 + s**2)
        hess[..., 1, 1] = decay * (r**2 + 3.0 * s**2)
        hess[..., 0, 1] = hess[..., 1, 0] = 2.0 * decay * r * s
        hess[..., 2, 2] = 1.0
        hess[..., 3, 3] = 1.0
        return hess

    def S2(z):
        r, s, _, _ = np.moveaxis(np.asarray(z, dtype=float), -1, 0)
        return 0.5 * eps * (r**2 + s**2)

    def grad_S2(z):
        r, s, _, _ = np.moveaxis(np.asarray(z, dtype=float), -1, 0)
        return _stack(eps * r, eps * s, 0.0 * r, 0.0 * r)

    def hess_S2(z):
        hess = _hessian(z)
        hess[..., 0, 0] = eps
        hess[..., 1, 1] = eps
        return hess

    return HamiltonianSystemSpec(
        name="nls-transformed",
        dim=4,
        M=-np.array(NLS_M),
        K=-np.array(NLS_K),
        a=0.0,
        b=0.0,
        S1=S1,
        S2=S2,
        grad_S1=grad_S1,
        grad_S2=grad_S2,
        hess_S1=hess_S1,
        hess_S2=hess_S2,
        boundary_pins=NLS_PINS,
    )


def verify_structure(
    system: HamiltonianSystemSpec,
    points: np.ndarray,
    t: float = 0.0,
    rel_tol: float = 1e-5,
    step: float = 1e-5,
) -> Dict[str, float]:
    """Check gradients and Hessians against central differences at ``points``.

    Errors are measured in the max-norm relative to max(|exact|, 1). Raises
    StructureError when a check fails, otherwise returns the worst observed
    errors.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[-1] != system.dim:
        raise StructureError(f"Probe points must have {system.dim} components")

    worst = {"grad_S1": 0.0, "grad_S2": 0.0, "hess_S1": 0.0, "hess_S2": 0.0, "symmetry": 0.0}
    basis = np.eye(system.dim)

    def relative(exact, approx):
        return float(np.max(np.abs(exact - approx)) / max(np.max(np.abs(exact)), 1.0))

    for z in points:
        h = step * max(1.0, float(np.max(np.abs(z))))
        fd_grad1 = np.array([(system.S1(z + h * e, t=t) - system.S1(z - h * e, t=t)) / (2 * h) for e in basis])
        fd_grad2 = np.array([(system.S2(z + h * e) - system.S2(z - h * e)) / (2 * h) for e in basis])
        fd_hess1 = np.array(
            [(system.grad_S1(z + h * e, t=t) - system.grad_S1(z - h * e, t=t)) / (2 * h) for e in basis]
        )
        fd_hess2 = np.array([(system.grad_S2(z + h * e) - system.grad_S2(z - h * e)) / (2 * h) for e in basis])
        hess1 = system.hess_S1(z, t=t)
        hess2 = system.hess_S2(z)

        worst["grad_S1"] = max(worst["grad_S1"], relative(system.grad_S1(z, t=t), fd_grad1))
        worst["grad_S2"] = max(worst["grad_S2"], relative(system.grad_S2(z), fd_grad2))
        # rows of the finite-difference Jacobian are d(grad)/dz_k, i.e. the transposed Hessian
        worst["hess_S1"] = max(worst["hess_S1"], relative(hess1, fd_hess1.T))
        worst["hess_S2"] = max(worst["hess_S2"], relative(hess2, fd_hess2.T))
        worst["symmetry"] = max(
            worst["symmetry"],
            float(np.max(np.abs(hess1 - hess1.T))),
            float(np.max(np.abs(hess2 - hess2.T))),
        )

    if worst["symmetry"] != 0.0:
        raise StructureError(f"{system.name}: Hessians are not symmetric")
    for key in ("grad_S1", "grad_S2", "hess_S1", "hess_S2"):
        if worst[key] > rel_tol:
            raise StructureError(f"{system.name}: {key} disagrees with finite differences ({worst[key]:.3e})")
    return worst


def system_by_name(name: str, params: NlsParameters, gamma: Optional[float] = None) -> HamiltonianSystemSpec:
    if name == "nls":
        return nls_system(params)
    if name == "kdv":
        return kdv_system(params.alpha, params.epsilon if gamma is None else gamma)
    if name == "nls-transformed":
        return transformed_nls_system(params)
    raise StructureError(f"Unknown system '{name}'")
