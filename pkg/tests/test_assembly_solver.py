import math

import numpy as np
import pytest
import scipy.sparse as sp

from src.core.exceptions import AssemblyError, SolverSingular
from src.fem.assembly import (
    BlockLayout,
    assemble,
    curve_stiffness,
    gradient_load_vector,
    load_vector,
    mass_matrix,
    stiffness_matrix,
    symmetric_gradient_matrix,
)
from src.fem.geometry import geometry_at_quadrature
from src.fem.solver import l2_project, solve_direct
from src.mesh.reference_mesh import FacetTag


def test_mass_matrix_sums_to_area(disc_identity):
    """Verify 1^T M 1 equals the area of the support."""
    geo = geometry_at_quadrature(disc_identity)
    space = disc_identity.space.scalar()
    mass = mass_matrix(geo, space)
    ones = np.ones(space.n_dofs)
    assert ones @ (mass @ ones) == pytest.approx(np.sum(geo.measure))
    assert ones @ (mass @ ones) == pytest.approx(math.pi, abs=5e-3)
    assert abs(mass - mass.T).max() < 1e-14


def test_stiffness_annihilates_constants(disc_identity):
    """Verify K 1 = 0 and K is symmetric positive semidefinite on x."""
    geo = geometry_at_quadrature(disc_identity)
    space = disc_identity.space.scalar()
    stiffness = stiffness_matrix(geo, space)
    assert np.allclose(stiffness @ np.ones(space.n_dofs), 0.0, atol=1e-12)
    x = disc_identity.component(0)
    assert x @ (stiffness @ x) == pytest.approx(np.sum(geo.measure))


def test_load_vector_against_gradients(ridge_mesh_and_map):
    """Verify the integral of (1, 0) . grad x over the ridge is its area."""
    _, psi = ridge_mesh_and_map
    geo = geometry_at_quadrature(psi)
    space = psi.space.scalar()
    values = np.zeros(geo.measure.shape + (2,))
    values[..., 0] = 1.0
    vector = gradient_load_vector(geo, space, values)
    assert vector @ psi.component(0) == pytest.approx(2.0)
    assert load_vector(geo, space, 1.0).sum() == pytest.approx(2.0)


def test_reference_measure_ignores_the_deformation(ridge_mesh_and_map):
    """Verify reference-measure mass matrices do not change under scaling."""
    _, psi = ridge_mesh_and_map
    scaled = psi.with_coeffs(3.0 * psi.coeffs)
    space = psi.space.scalar()
    ones = np.ones(space.n_dofs)
    deformed = mass_matrix(geometry_at_quadrature(scaled), space)
    reference = mass_matrix(geometry_at_quadrature(scaled), space, reference=True)
    assert ones @ (deformed @ ones) == pytest.approx(18.0)
    assert ones @ (reference @ ones) == pytest.approx(2.0)


def test_curve_stiffness_of_the_position(ridge_mesh_and_map):
    """Verify the surface Dirichlet energy of y along the free boundaries is their length."""
    _, psi = ridge_mesh_and_map
    bgeo = geometry_at_quadrature(psi, FacetTag.FREE_BOUNDARY)
    space = psi.space.scalar()
    matrix = curve_stiffness(bgeo, space)
    y = psi.component(1)
    assert y @ (matrix @ y) == pytest.approx(4.0)
    assert np.allclose(matrix @ np.ones(space.n_dofs), 0.0, atol=1e-12)


def test_curve_stiffness_needs_facets(ridge_mesh_and_map):
    """Verify curve_stiffness rejects bulk geometries."""
    _, psi = ridge_mesh_and_map
    with pytest.raises(AssemblyError):
        curve_stiffness(geometry_at_quadrature(psi), psi.space.scalar())


def test_symmetric_gradient_kernel_contains_rigid_motions(disc_identity):
    """Verify translations and the infinitesimal rotation have zero strain energy."""
    geo = geometry_at_quadrature(disc_identity)
    space = disc_identity.space
    matrix = symmetric_gradient_matrix(geo, space)
    n = space.n_dofs
    x, y = disc_identity.component(0), disc_identity.component(1)
    for motion in (
        np.concatenate([np.ones(n), np.zeros(n)]),
        np.concatenate([np.zeros(n), np.ones(n)]),
        np.concatenate([-y, x]),
    ):
        assert np.allclose(matrix @ motion, 0.0, atol=1e-11)
    stretch = np.concatenate([x, np.zeros(n)])
    assert stretch @ (matrix @ stretch) == pytest.approx(np.sum(geo.measure))


def test_assemble_rejects_mismatched_block():
    """Verify blocks must match the layout sizes."""
    layout = BlockLayout(("a", "b"), (2, 3))
    with pytest.raises(AssemblyError):
        assemble(layout, {("a", "b"): np.ones((2, 2))})


def test_block_layout_rejects_duplicates():
    """Verify block names must be unique."""
    with pytest.raises(AssemblyError):
        BlockLayout(("a", "a"), (1, 1))


def test_solve_direct_with_fixed_values():
    """Verify fixed unknowns are eliminated and keep their values."""
    layout = BlockLayout(("u",), (3,))
    matrix = sp.csr_matrix(np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]]))
    fixed = {"u": (np.array([0, 2]), np.array([1.0, 3.0]))}
    system = assemble(layout, {("u", "u"): matrix}, {"u": np.zeros(3)}, fixed)
    u = solve_direct(system)["u"]
    assert np.allclose(u, [1.0, 2.0, 3.0])


def test_saddle_block_system():
    """Verify a symmetric block system with a multiplier row is solved per block."""
    layout = BlockLayout(("x", "lam"), (2, 1))
    system = assemble(
        layout,
        {("x", "x"): np.eye(2), ("x", "lam"): np.array([[1.0], [1.0]]), ("lam", "x"): np.array([[1.0, 1.0]])},
        {"lam": np.array([4.0])},
    )
    solution = solve_direct(system)
    assert np.allclose(solution["x"], [2.0, 2.0])
    assert np.allclose(solution["lam"], [-2.0])


def test_singular_system_raises():
    """Verify a zero matrix raises SolverSingular."""
    layout = BlockLayout(("u",), (2,))
    system = assemble(layout, {("u", "u"): sp.csr_matrix((2, 2))}, {"u": np.ones(2)})
    with pytest.raises(SolverSingular):
        solve_direct(system)


def test_l2_projection_reproduces_polynomials(ridge_mesh_and_map):
    """Verify projecting an interpolated Q2 field returns it unchanged."""
    _, psi = ridge_mesh_and_map
    space = psi.space.scalar()
    f = space.interpolate(lambda p: p[:, 0] ** 2 - p[:, 0] * p[:, 1])
    projected = l2_project(f, space, psi)
    assert np.allclose(projected.coeffs, f.coeffs, atol=1e-10)


def test_l2_projection_with_fixed_nodes(ridge_mesh_and_map):
    """Verify fixed nodes of a projection take their prescribed values."""
    _, psi = ridge_mesh_and_map
    space = psi.space.scalar()
    free = space.boundary_dofs(FacetTag.FREE_BOUNDARY)
    projected = l2_project(lambda geo: np.ones(geo.measure.shape), space, psi, fixed=(free, 0.0))
    assert np.allclose(projected.coeffs[free], 0.0)
    assert projected.coeffs.max() > 0.9
