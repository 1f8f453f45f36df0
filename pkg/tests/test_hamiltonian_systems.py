import numpy as np
import pytest
from pydantic import ValidationError

from models.system_models import HamiltonianSystemSpec, NlsParameters
from services.hamiltonian_systems import (
    NLS_K,
    NLS_M,
    kdv_system,
    nls_system,
    system_by_name,
    transformed_nls_system,
    verify_structure,
)
from utils.errors import StructureError


@pytest.fixture
def points(rng):
    return rng.uniform(-1.5, 1.5, (10, 4))


def test_nls_structure(params, points):
    system = nls_system(params)
    assert system.a == pytest.approx(2.0 * params.alpha)
    assert system.b == 0.0
    np.testing.assert_array_equal(system.D, -params.alpha * np.array(NLS_M))
    worst = verify_structure(system, points)
    assert worst["symmetry"] == 0.0
    assert max(worst.values()) < 1e-6


def test_kdv_structure(points):
    system = kdv_system(alpha=0.1, gamma=0.3)
    assert system.D[0, 1] == pytest.approx(0.05)
    assert system.D[1, 0] == pytest.approx(-0.05)
    verify_structure(system, points)
    # additive noise
    np.testing.assert_array_equal(system.hess_S2(points), np.zeros((10, 4, 4)))


@pytest.mark.parametrize("alpha", [0.02, 0.1, 0.5])
def test_kdv_damping_convention(alpha):
    system = kdv_system(alpha=alpha, gamma=0.3)
    assert system.D[0][1] == pytest.approx(alpha / 2)
    assert system.a == pytest.approx(-2.0 * alpha)


def test_transformed_structure_carries_time(params, points):
    system = transformed_nls_system(params)
    assert system.a == system.b == 0.0
    np.testing.assert_array_equal(system.M, -np.array(NLS_M))
    np.testing.assert_array_equal(system.K, -np.array(NLS_K))
    verify_structure(system, points, t=3.0)
    z = np.array([1.0, 0.0, 0.0, 0.0])
    assert system.grad_S1(z, t=5.0)[0] == pytest.approx(np.exp(-2.0 * params.alpha * 5.0))


def test_kdv_rejects_negative_gamma():
    with pytest.raises(StructureError):
        kdv_system(alpha=0.1, gamma=-1.0)


def test_verify_structure_catches_wrong_gradient(params, points):
    good = nls_system(params)
    broken = good.model_copy(update={"grad_S1": lambda z, t=0.0: 2.0 * good.grad_S1(z, t=t)})
    with pytest.raises(StructureError, match="grad_S1"):
        verify_structure(broken, points)


def test_verify_structure_checks_dimension(params):
    with pytest.raises(StructureError):
        verify_structure(nls_system(params), np.zeros((3, 2)))


def test_spec_rejects_symmetric_M(params):
    fields = nls_system(params).model_dump()
    fields["M"] = np.eye(4)
    with pytest.raises(ValidationError):
        HamiltonianSystemSpec(**fields)


def test_spec_needs_dim_pins(params):
    fields = nls_system(params).model_dump()
    fields["boundary_pins"] = (("left", 0),)
    with pytest.raises(ValidationError):
        HamiltonianSystemSpec(**fields)


def test_system_by_name(params):
    assert system_by_name("nls", params).name == "nls"
    assert system_by_name("kdv", params).name == "kdv"
    assert system_by_name("nls-transformed", params).name == "nls-transformed"
    with pytest.raises(StructureError):
        system_by_name("sine-gordon", params)


def test_kdv_gamma_defaults_to_epsilon():
    system = system_by_name("kdv", NlsParameters(alpha=0.0, epsilon=0.7))
    assert system.grad_S2(np.zeros(4))[0] == pytest.approx(0.7)
