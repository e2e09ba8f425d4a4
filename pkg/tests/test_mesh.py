import numpy as np
import pytest

from src.core.exceptions import ConfigError
from src.mesh.builders import build_disc_mesh, build_ridge_mesh, coarse_disc
from src.mesh.reference_mesh import (
    FACET_VERTICES,
    FacetTag,
    ReferenceMesh,
    ancestor_coordinates,
    facet_points,
    refine_uniform,
)


def test_coarse_disc_topology():
    """Verify the five-block disc has 5 cells, 8 vertices and 4 arc facets."""
    mesh = coarse_disc()
    assert mesh.n_cells == 5
    assert mesh.n_vertices == 8
    assert mesh.tags == {FacetTag.FREE_BOUNDARY}
    assert len(mesh.facets_with_tag(FacetTag.FREE_BOUNDARY)) == 4


def test_refinement_quadruples_cells_and_keeps_boundary_on_circle():
    """Verify refinement counts and that new boundary vertices lie on the unit circle."""
    mesh = build_disc_mesh(2, 2)
    assert mesh.n_cells == 80
    assert mesh.refinement_level == 2
    facets = mesh.facets_with_tag(FacetTag.FREE_BOUNDARY)
    assert len(facets) == 16
    first = np.array([FACET_VERTICES[f][0] for f in facets[:, 1]])
    corners = mesh.vertices[mesh.cells[facets[:, 0], first]]
    assert np.allclose(np.linalg.norm(corners, axis=-1), 1.0)


def test_disc_boundary_points_follow_the_arc():
    """Verify mapped points on a FreeBoundary facet lie on the unit circle."""
    mesh = build_disc_mesh(1, 2)
    cell, facet = mesh.facets_with_tag(FacetTag.FREE_BOUNDARY)[0]
    s = np.linspace(0.0, 1.0, 7)
    xi = facet_points(int(facet), s)
    points = mesh.map_points(xi, np.array([cell]))[0]
    assert np.allclose(np.linalg.norm(points, axis=-1), 1.0)


def test_ridge_mesh_tags_and_identity_map():
    """Verify the ridge carries both tags and delta = 0 gives the identity map."""
    mesh, psi = build_ridge_mesh(1.0, 4.0, 0.0, 0, 2)
    assert mesh.tags == {FacetTag.FREE_BOUNDARY, FacetTag.SLIDING}
    assert mesh.n_cells == 2 * 8
    assert np.allclose(psi.nodal, psi.space.nodes)


def test_ridge_perturbation_moves_only_x():
    """Verify the perturbed map keeps y and scales x by 1 + delta cos(2 pi y / H)."""
    _, psi = build_ridge_mesh(1.0, 4.0, 0.1, 0, 2)
    nodes = psi.space.nodes
    expected = nodes[:, 0] * (1 + 0.1 * np.cos(2 * np.pi * nodes[:, 1] / 4.0))
    assert np.allclose(psi.nodal[:, 1], nodes[:, 1])
    assert np.allclose(psi.nodal[:, 0], expected)


@pytest.mark.parametrize(
    ("kwargs", "key"),
    [
        ({"length": 1.0, "height": 4.0, "delta": 1.0, "refinement": 0, "degree": 2}, "geometry.ridge.delta"),
        ({"length": 1.0, "height": 4.0, "delta": 0.1, "refinement": 0, "degree": 4}, "degree"),
        ({"length": 0.0, "height": 4.0, "delta": 0.1, "refinement": 0, "degree": 2}, "geometry.ridge"),
        ({"length": 1.0, "height": 4.0, "delta": 0.1, "refinement": -1, "degree": 2}, "refinement"),
    ],
)
def test_ridge_mesh_rejects_invalid_arguments(kwargs, key):
    """Verify invalid ridge arguments raise ConfigError naming the key."""
    with pytest.raises(ConfigError) as exc:
        build_ridge_mesh(**kwargs)
    assert exc.value.key == key


def test_clockwise_cells_are_rejected():
    """Verify a clockwise cell fails mesh validation."""
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    facets = np.array([[0, f, FacetTag.FREE_BOUNDARY] for f in range(4)])
    with pytest.raises(ValueError):
        ReferenceMesh(vertices, np.array([[0, 3, 2, 1]]), facets)


def test_untagged_exterior_facet_is_rejected():
    """Verify every exterior facet must carry a tag."""
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    facets = np.array([[0, f, FacetTag.FREE_BOUNDARY] for f in range(3)])
    with pytest.raises(ValueError):
        ReferenceMesh(vertices, np.array([[0, 1, 2, 3]]), facets)


def test_ancestor_coordinates_match_straight_cell_maps():
    """Verify fine points map to the same physical points through their coarse ancestors."""
    coarse, _ = build_ridge_mesh(1.0, 2.0, 0.0, 0, 1)
    fine = refine_uniform(refine_uniform(coarse))
    xi = np.array([[0.2, 0.3], [0.8, 0.6]])
    fine_cells = np.arange(fine.n_cells)
    cells, coarse_xi = ancestor_coordinates(fine_cells, xi, 2)
    assert np.allclose(fine.map_points(xi), coarse.map_points(coarse_xi, cells))
