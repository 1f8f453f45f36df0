import numpy as np
import pytest

from models.grid_models import GridSpec
from services.grid_operators import (
    avg_t,
    avg_x,
    check_length,
    conformal_factor,
    delta_t,
    delta_x,
    grid_nodes,
    inner,
    second_difference,
)
from utils.errors import StructureError


def _random_case(rng):
    n = int(rng.integers(4, 513))
    c = float(rng.uniform(-2.0, 2.0))
    h = float(rng.uniform(0.01, 0.5))
    k = float(rng.uniform(0.01, 0.5))
    z_next, z_curr = rng.uniform(-1.0, 1.0, (2, n))
    return n, c, h, k, z_next, z_curr


def test_conformal_factor_zero_rate():
    assert conformal_factor(0.0, 0.3) == 1.0
    assert conformal_factor(0.1, 0.01) == pytest.approx(np.exp(-0.001), rel=1e-15)


def test_time_and_space_operators_commute(rng):
    for _ in range(1000):
        n, c, h, k, z_next, z_curr = _random_case(rng)
        c_space = float(rng.uniform(-2.0, 2.0))
        lhs = delta_t(c, avg_x(c_space, z_next, k), avg_x(c_space, z_curr, k), h)
        rhs = avg_x(c_space, delta_t(c, z_next, z_curr, h), k)
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-13 / h)

        lhs = avg_t(c, delta_x(c_space, z_next, k), delta_x(c_space, z_curr, k), h)
        rhs = delta_x(c_space, avg_t(c, z_next, z_curr, h), k)
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-13 / k)


def test_conformal_product_rule(rng):
    # delta^{2c} <x, y> = <delta^c x, A^c y> + <A^c x, delta^c y>
    for _ in range(1000):
        n, c, h, k, x_next, x_curr = _random_case(rng)
        y_next, y_curr = rng.uniform(-1.0, 1.0, (2, n))
        lhs = delta_t(2.0 * c, x_next * y_next, x_curr * y_curr, h)
        rhs = delta_t(c, x_next, x_curr, h) * avg_t(c, y_next, y_curr, h) + avg_t(
            c, x_next, x_curr, h
        ) * delta_t(c, y_next, y_curr, h)
        np.testing.assert_allclose(h * lhs, h * rhs, rtol=0, atol=1e-13)

        x, y = x_next, y_next
        lhs = delta_x(2.0 * c, x * y, k)
        rhs = delta_x(c, x, k) * avg_x(c, y, k) + avg_x(c, x, k) * delta_x(c, y, k)
        np.testing.assert_allclose(k * lhs, k * rhs, rtol=0, atol=1e-13)


def test_spatial_operators_return_one_entry_per_cell():
    z = np.arange(6.0)
    assert delta_x(0.0, z, 1.0).shape == (5,)
    np.testing.assert_array_equal(delta_x(0.0, z, 1.0), np.ones(5))
    np.testing.assert_array_equal(avg_x(0.0, z, 1.0), z[:-1] + 0.5)


def test_periodic_operators_wrap_last_cell():
    z = np.array([1.0, 2.0, 4.0])
    np.testing.assert_array_equal(delta_x(0.0, z, 1.0, periodic=True), [1.0, 2.0, -3.0])
    np.testing.assert_array_equal(avg_x(0.0, z, 1.0, periodic=True), [1.5, 3.0, 2.5])


def test_operators_carry_component_axis(rng):
    z_next, z_curr = rng.standard_normal((2, 7, 4))
    assert delta_t(0.3, z_next, z_curr, 0.1).shape == (7, 4)
    assert avg_x(0.3, z_next, 0.1).shape == (6, 4)
    np.testing.assert_allclose(inner(z_next, z_curr), np.sum(z_next * z_curr, axis=1))


def test_shape_mismatch_raises():
    with pytest.raises(StructureError):
        delta_t(0.0, np.zeros(3), np.zeros(4), 0.1)
    with pytest.raises(StructureError):
        avg_x(0.0, np.zeros(1), 0.1)
    with pytest.raises(StructureError):
        inner(np.zeros(3), np.zeros(4))


def test_second_difference_of_quadratic_is_constant():
    x = np.linspace(0.0, 1.0, 11)
    np.testing.assert_allclose(second_difference(x**2, 0.1), 2.0 * np.ones(9), atol=1e-10)


def test_second_difference_periodic_sine():
    grid = GridSpec(x_left=0.0, x_right=2.0 * np.pi, dx=2.0 * np.pi / 64, dt=0.1, boundary="periodic")
    x = grid_nodes(grid)
    assert len(x) == 64
    expected = -np.sin(x) * (2.0 - 2.0 * np.cos(grid.dx)) / grid.dx**2
    np.testing.assert_allclose(second_difference(np.sin(x), grid.dx, periodic=True), expected, atol=1e-12)


def test_check_length():
    grid = GridSpec(x_left=0.0, x_right=1.0, dx=0.25, dt=0.1)
    assert grid.n_nodes == 5
    check_length(np.zeros(5), grid)
    with pytest.raises(StructureError):
        check_length(np.zeros(4), grid, "state")
