import numpy as np
import pytest

from src.fem.basis import gauss_interval, gauss_square, lagrange_1d, lattice, points_for_degree, tabulate_q


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_lagrange_partition_of_unity(degree):
    """Verify the 1D basis sums to one and its derivatives sum to zero."""
    x = np.linspace(0.0, 1.0, 17)
    values, derivs = lagrange_1d(degree, x)
    assert np.allclose(values.sum(axis=-1), 1.0)
    assert np.allclose(derivs.sum(axis=-1), 0.0, atol=1e-12)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_tabulate_is_nodal(degree):
    """Verify the Qk basis is the identity matrix on its own lattice."""
    values, _ = tabulate_q(degree, lattice(degree))
    assert np.allclose(values, np.eye((degree + 1) ** 2), atol=1e-12)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_tabulate_gradient_reproduces_linear_function(degree):
    """Verify interpolated 2x + 3y has gradient (2, 3) everywhere."""
    nodes = lattice(degree)
    coeffs = 2 * nodes[:, 0] + 3 * nodes[:, 1]
    xi = np.array([[0.1, 0.7], [0.5, 0.5], [0.9, 0.2]])
    _, grads = tabulate_q(degree, xi)
    assert np.allclose(np.einsum("qai,a->qi", grads, coeffs), [[2.0, 3.0]] * 3)


@pytest.mark.parametrize("n_points", [1, 2, 3, 4, 5])
def test_gauss_interval_exactness(n_points):
    """Verify the n-point rule integrates x^(2n-1) exactly on [0, 1]."""
    rule = gauss_interval(n_points)
    p = 2 * n_points - 1
    assert rule.weights.sum() == pytest.approx(1.0)
    assert np.sum(rule.weights * rule.points[:, 0] ** p) == pytest.approx(1.0 / (p + 1))


def test_gauss_square_tensor_exactness():
    """Verify the square rule integrates x^3 y^5 exactly."""
    rule = gauss_square(3)
    x, y = rule.points[:, 0], rule.points[:, 1]
    assert rule.size == 9
    assert np.sum(rule.weights * x**3 * y**5) == pytest.approx(1.0 / 24.0)


def test_points_for_degree_never_drops_below_k_plus_one():
    """Verify negative extras are ignored."""
    assert points_for_degree(2) == 4
    assert points_for_degree(2, extra=-3) == 3
