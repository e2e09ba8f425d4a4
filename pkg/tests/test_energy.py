import math

import numpy as np
import pytest

from src.fem.space import FeSpace, Field
from src.mesh.builders import build_disc_mesh, build_ridge_mesh
from src.physics.energy import (
    driving_force_rhs,
    energy,
    energy_rate,
    equilibrium_radius,
    gradient_pairing,
    parabolic_cap,
)
from src.physics.params import PhysicsParams
from src.solvers.state import AleState, free_boundary_dofs


def _perturb(state: AleState, psidot: Field, hdot: Field, delta: float) -> AleState:
    return state.advanced(state.psi.axpy(delta, psidot), state.h.axpy(delta, hdot), state.t)


def _central_difference(state: AleState, psidot: Field, hdot: Field, params: PhysicsParams) -> float:
    delta = 1e-5
    forward = energy(_perturb(state, psidot, hdot, delta), params).total
    backward = energy(_perturb(state, psidot, hdot, -delta), params).total
    return (forward - backward) / (2 * delta)


@pytest.fixture
def ridge_state() -> AleState:
    """Perturbed ridge carrying a positive height that vanishes on the free boundaries."""
    _, psi = build_ridge_mesh(1.0, 2.0, 0.1, 1, 2)
    h = psi.space.scalar().interpolate(lambda p: p[:, 0] * (1 - p[:, 0]) * (1 + 0.2 * np.sin(p[:, 1])))
    return AleState(psi=psi, h=h, t=0.0, vol0=1.0)


def test_flat_film_energy_is_wetting_only(disc_identity):
    """Verify h = 0 has energy s times the support area and zero volume."""
    h = disc_identity.space.scalar().zeros()
    report = energy(AleState(disc_identity, h, 0.0, 1.0), PhysicsParams(s=2.0))
    assert report.surface == 0.0
    assert report.volume == 0.0
    assert report.total == pytest.approx(2.0 * report.support_area)
    assert report.support_area == pytest.approx(math.pi, abs=5e-3)
    assert report.contact_length == pytest.approx(2 * math.pi, abs=1e-2)


def test_energy_parts_sum_to_total(cap_state):
    """Verify the reported parts add up to the total."""
    params = PhysicsParams(s=1.0, g_x=(1.0, 0.5), g_z=2.0, eps_line=0.1)
    report = energy(cap_state, params)
    assert sum(report.parts.values()) == pytest.approx(report.total)
    assert report.line == pytest.approx(0.1 * report.contact_length)
    assert report.volume == pytest.approx(1.0)


def test_energy_rate_matches_finite_differences_on_ridge(ridge_state):
    """Verify the exact energy derivative along ALE rates against central differences."""
    params = PhysicsParams(s=1.0, g_x=(0.5, 0.2), g_z=0.3)
    vspace = ridge_state.psi.space
    psidot = vspace.interpolate(lambda p: np.column_stack([0.3 * p[:, 0] * np.cos(p[:, 1]), 0.1 * p[:, 0] * p[:, 1]]))
    hdot = vspace.scalar().interpolate(lambda p: p[:, 0] * (1 - p[:, 0]) * p[:, 1])
    exact = energy_rate(ridge_state, psidot, hdot, params)
    assert exact == pytest.approx(_central_difference(ridge_state, psidot, hdot, params), rel=1e-6)


def test_energy_rate_matches_finite_differences_with_line_tension(cap_state):
    """Verify the line-tension contribution of the energy derivative on the disc."""
    params = PhysicsParams(s=0.5, g_x=(1.0, 0.0), eps_line=0.2)
    vspace = cap_state.psi.space
    psidot = vspace.interpolate(lambda p: np.column_stack([0.2 + 0.1 * p[:, 0] ** 2, 0.3 * p[:, 0] * p[:, 1]]))
    hdot = vspace.scalar().interpolate(lambda p: 0.5 * (1 - p[:, 0] ** 2 - p[:, 1] ** 2))
    exact = energy_rate(cap_state, psidot, hdot, params)
    assert exact == pytest.approx(_central_difference(cap_state, psidot, hdot, params), rel=1e-6)


def test_gradient_pairing_is_the_rate_at_fixed_support(ridge_state):
    """Verify the bulk pairing equals the energy rate with a resting map."""
    params = PhysicsParams(s=1.0, g_x=(0.5, 0.2), g_z=0.3)
    direction = ridge_state.space.interpolate(lambda p: p[:, 0] * (1 - p[:, 0]))
    rate = energy_rate(ridge_state, ridge_state.psi.space.zeros(), direction, params)
    assert gradient_pairing(ridge_state, direction, params) == pytest.approx(rate, rel=1e-12)


def test_equilibrium_radius_matches_cap_slope():
    """Verify the equilibrium cap meets the support with slope sqrt(2 s / sigma)."""
    radius = equilibrium_radius(1.0)
    c, pi_hat = parabolic_cap(radius, 1.0)
    assert radius == pytest.approx((4.0 / (math.pi * math.sqrt(2.0))) ** (1.0 / 3.0))
    assert 2 * c / radius == pytest.approx(math.sqrt(2.0))
    assert pi_hat == pytest.approx(4 * c / radius**2)
    assert math.pi * c * radius**2 / 2 == pytest.approx(1.0)


def test_equilibrium_slope_property():
    """Verify the equilibrium slope of the energy coefficients."""
    assert PhysicsParams(s=2.0, sigma=1.0).equilibrium_slope == pytest.approx(2.0)
    assert PhysicsParams(s=0.0).equilibrium_slope == 0.0


def test_driving_force_is_the_energy_derivative_at_fixed_support(cap_state):
    """Verify the force paired with an interior height rate matches central differences of the energy."""
    params = PhysicsParams(sigma=2.0, s=1.0, g_x=(1.0, 0.5), g_z=2.0)
    space = cap_state.space
    coeffs = np.random.default_rng(7).standard_normal(space.n_dofs)
    coeffs[free_boundary_dofs(space)] = 0.0
    hdot = Field(space, coeffs)
    force = driving_force_rhs(cap_state, params)
    expected = _central_difference(cap_state, cap_state.psi.space.zeros(), hdot, params)
    assert force.implicit is None
    assert force.rhs @ coeffs == pytest.approx(expected, rel=1e-6)


def test_implicit_block_is_the_surface_tension_hessian(cap_state):
    """Verify the implicit block pairs h with a rate as minus tau times the surface-energy derivative."""
    params = PhysicsParams(sigma=2.0, s=1.0)
    space = cap_state.space
    coeffs = np.random.default_rng(11).standard_normal(space.n_dofs)
    coeffs[free_boundary_dofs(space)] = 0.0
    hdot = Field(space, coeffs)
    tau = 0.1
    force = driving_force_rhs(cap_state, params, implicit_tau=tau)
    assert force.implicit is not None
    delta = 1e-5
    forward = energy(cap_state.advanced(cap_state.psi, cap_state.h.axpy(delta, hdot), 0.0), params).surface
    backward = energy(cap_state.advanced(cap_state.psi, cap_state.h.axpy(-delta, hdot), 0.0), params).surface
    derivative = (forward - backward) / (2 * delta)
    assert -(force.implicit @ cap_state.h.coeffs) @ coeffs / tau == pytest.approx(derivative, rel=1e-6)


def test_driving_force_accounts_for_contact_line_motion():
    """Verify the force paired with the Eulerian rate of a dilation matches the energy derivative."""
    psi = FeSpace(build_disc_mesh(2, 2), 2).identity()
    space = psi.space.scalar()
    c, _ = parabolic_cap(1.0, 1.0)
    h = space.interpolate(lambda p: c * (1 - p[:, 0] ** 2 - p[:, 1] ** 2))
    coeffs = h.coeffs.copy()
    coeffs[free_boundary_dofs(space)] = 0.0
    state = AleState(psi=psi, h=h.with_coeffs(coeffs), t=0.0, vol0=1.0)
    params = PhysicsParams(s=1.0)

    # psi -> (1 + delta) psi at fixed height coefficients; the Eulerian rate is -x . grad h = 2 c |x|^2
    hdot = space.interpolate(lambda p: 2 * c * (p[:, 0] ** 2 + p[:, 1] ** 2))
    expected = _central_difference(state, psi, space.zeros(), params)
    force = driving_force_rhs(state, params)
    assert expected == pytest.approx(2 * params.s * energy(state, params).support_area, rel=1e-6)
    assert force.rhs @ hdot.coeffs == pytest.approx(expected, rel=3e-2)
