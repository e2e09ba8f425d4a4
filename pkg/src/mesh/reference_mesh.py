"""
Fixed reference domain of the ALE description.

Cells are quadrilaterals with counter-clockwise corners v0..v3 mapped from the
unit square: v0=(0,0), v1=(1,0), v2=(1,1), v3=(0,1). Local facet f joins
FACET_VERTICES[f] and is parametrised by s in [0, 1] from its first to its
second corner, so the domain boundary is traversed counter-clockwise.
"""

import logging
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

logger = logging.getLogger(__name__)

FACET_VERTICES = ((0, 1), (1, 2), (2, 3), (3, 0))

# xi(s) = FACET_ORIGIN[f] + s * FACET_DIRECTION[f]
FACET_ORIGIN = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
FACET_DIRECTION = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
FACET_NORMAL = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])

# Child i of a quadrisected cell occupies the sub-square with lower corner CHILD_OFFSET[i] / 2.
CHILD_OFFSET = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])

# Parent facet -> the two children covering it, in facet parameter order.
FACET_CHILDREN = ((0, 1), (1, 3), (3, 2), (2, 0))


class FacetTag(IntEnum):
    """Boundary facet tags."""

    FREE_BOUNDARY = 1
    SLIDING = 2


def facet_points(local_facet: int | np.ndarray, s: np.ndarray) -> np.ndarray:
    """
    Map facet parameters to reference-square coordinates.

    Args:
        local_facet: Local facet index (scalar or array broadcastable against s).
        s: Facet parameters in [0, 1].

    Returns:
        Points of shape broadcast(local_facet, s).shape + (2,).
    """
    f = np.asarray(local_facet)
    s = np.asarray(s, dtype=float)
    return FACET_ORIGIN[f] + s[..., None] * FACET_DIRECTION[f]


def bilinear_shape(xi: np.ndarray) -> np.ndarray:
    """
    Bilinear corner weights at reference points.

    Args:
        xi: Points of shape (..., 2).

    Returns:
        Weights of shape (..., 4) in corner order v0..v3.
    """
    x, y = xi[..., 0], xi[..., 1]
    return np.stack([(1 - x) * (1 - y), x * (1 - y), x * y, (1 - x) * y], axis=-1)


def bilinear_gradient(xi: np.ndarray) -> np.ndarray:
    """
    Derivatives of the bilinear corner weights.

    Args:
        xi: Points of shape (..., 2).

    Returns:
        Array of shape (..., 4, 2).
    """
    x, y = xi[..., 0], xi[..., 1]
    dx = np.stack([-(1 - y), 1 - y, y, -y], axis=-1)
    dy = np.stack([-(1 - x), -x, x, 1 - x], axis=-1)
    return np.stack([dx, dy], axis=-1)


@dataclass(frozen=True)
class ReferenceMesh:
    """
    Immutable quadrilateral mesh of the reference domain.

    Attributes:
        vertices: Corner coordinates, shape (nv, 2).
        cells: Counter-clockwise corner indices, shape (nc, 4).
        boundary_facets: Rows (cell, local facet, tag), shape (nb, 3).
        refinement_level: Number of uniform refinements applied to the coarse mesh.
        circular_boundary: Whether FreeBoundary facets are arcs of the unit circle.
    """

    vertices: np.ndarray
    cells: np.ndarray
    boundary_facets: np.ndarray
    refinement_level: int = 0
    circular_boundary: bool = False

    def __post_init__(self) -> None:
        for name in ("vertices", "cells", "boundary_facets"):
            arr = np.array(getattr(self, name), copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        self._validate()

    @property
    def n_cells(self) -> int:
        """Number of cells."""
        return int(self.cells.shape[0])

    @property
    def n_vertices(self) -> int:
        """Number of corner vertices."""
        return int(self.vertices.shape[0])

    @property
    def tags(self) -> set[FacetTag]:
        """Tags present on the boundary."""
        return {FacetTag(int(t)) for t in np.unique(self.boundary_facets[:, 2])}

    def facets_with_tag(self, tag: FacetTag) -> np.ndarray:
        """
        Boundary facets carrying a tag.

        Args:
            tag: Facet tag.

        Returns:
            Array of (cell, local facet) rows.
        """
        rows = self.boundary_facets[self.boundary_facets[:, 2] == int(tag)]
        return rows[:, :2]

    def map_points(self, xi: np.ndarray, cells: np.ndarray | None = None) -> np.ndarray:
        """
        Evaluate the cell geometry maps at reference points.

        The map is bilinear in the corners; on meshes of the disc every cell
        touching the unit circle is blended so that its boundary facet follows
        the circular arc between its corners (uniform in angle).

        Args:
            xi: Reference points of shape (nq, 2), shared by all cells, or
                (ncells, nq, 2) per cell.
            cells: Cell indices (default: all cells).

        Returns:
            Physical reference coordinates of shape (ncells, nq, 2).
        """
        cells = np.arange(self.n_cells) if cells is None else np.asarray(cells)
        xi = np.broadcast_to(xi, (len(cells),) + np.shape(xi)[-2:])
        corners = self.vertices[self.cells[cells]]
        points = np.einsum("cqv,cvi->cqi", bilinear_shape(xi), corners)
        if not self.circular_boundary:
            return points
        position = {int(c): n for n, c in enumerate(cells)}
        for cell, facet in self.facets_with_tag(FacetTag.FREE_BOUNDARY):
            n = position.get(int(cell))
            if n is None:
                continue
            points[n] += self._arc_correction(int(cell), int(facet), xi[n])
        return points

    def _arc_correction(self, cell: int, facet: int, xi: np.ndarray) -> np.ndarray:
        a, b = (self.vertices[self.cells[cell, v]] for v in FACET_VERTICES[facet])
        rel = xi - FACET_ORIGIN[facet]
        s = rel @ FACET_DIRECTION[facet]
        distance = -(rel @ FACET_NORMAL[facet])
        theta_a = np.arctan2(a[1], a[0])
        sweep = np.angle(np.exp(1j * (np.arctan2(b[1], b[0]) - theta_a)))
        theta = theta_a + s * sweep
        radius = 0.5 * (np.hypot(*a) + np.hypot(*b))
        arc = radius * np.column_stack([np.cos(theta), np.sin(theta)])
        chord = (1 - s)[:, None] * a + s[:, None] * b
        return (1 - distance)[:, None] * (arc - chord)

    def _validate(self) -> None:
        corners = self.vertices[self.cells]
        samples = np.array([[0.5, 0.5], [0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        jac = np.einsum("qvj,cvi->cqij", bilinear_gradient(samples), corners)
        det = np.linalg.det(jac)
        bad = np.flatnonzero((det <= 0).any(axis=1))
        if bad.size:
            raise ValueError(f"Cells {bad[:8].tolist()} are not counter-clockwise")
        counts: dict[tuple[int, int], int] = {}
        for cell in self.cells:
            for a, b in FACET_VERTICES:
                key = (min(cell[a], cell[b]), max(cell[a], cell[b]))
                counts[key] = counts.get(key, 0) + 1
        exterior = {k for k, v in counts.items() if v == 1}
        tagged: set[tuple[int, int]] = set()
        for cell, facet, _ in self.boundary_facets:
            a, b = (self.cells[cell, v] for v in FACET_VERTICES[facet])
            key = (min(a, b), max(a, b))
            if key not in exterior or key in tagged:
                raise ValueError(f"Facet {facet} of cell {cell} is not a single exterior facet")
            tagged.add(key)
        if tagged != exterior:
            raise ValueError(f"{len(exterior - tagged)} exterior facet(s) carry no tag")


def refine_uniform(mesh: ReferenceMesh) -> ReferenceMesh:
    """
    Quadrisect every cell.

    Child 4p+i of parent p occupies the sub-square CHILD_OFFSET[i] / 2 + [0, 1/2]^2
    of the parent with the same orientation, so a fine reference coordinate maps
    to the parent by xi_parent = (CHILD_OFFSET[i] + xi_child) / 2. New vertices are
    images of the parent geometry map, hence lie on the unit circle for discs.

    Args:
        mesh: Mesh to refine.

    Returns:
        Refined mesh with refinement_level incremented.
    """
    nv = mesh.n_vertices
    edge_ids: dict[tuple[int, int], int] = {}
    new_points: list[np.ndarray] = []
    midpoint_xi = np.array([[0.5, 0.0], [1.0, 0.5], [0.5, 1.0], [0.0, 0.5], [0.5, 0.5]])
    mapped = mesh.map_points(midpoint_xi)
    children = np.empty((4 * mesh.n_cells, 4), dtype=int)

    for c, cell in enumerate(mesh.cells):
        mid = []
        for f, (a, b) in enumerate(FACET_VERTICES):
            key = (min(cell[a], cell[b]), max(cell[a], cell[b]))
            if key not in edge_ids:
                edge_ids[key] = nv + len(new_points)
                new_points.append(mapped[c, f])
            mid.append(edge_ids[key])
        centre = nv + len(new_points)
        new_points.append(mapped[c, 4])
        v0, v1, v2, v3 = cell
        m0, m1, m2, m3 = mid
        children[4 * c : 4 * c + 4] = [
            [v0, m0, centre, m3],
            [m0, v1, m1, centre],
            [m3, centre, m2, v3],
            [centre, m1, v2, m2],
        ]

    facets = []
    for cell, facet, tag in mesh.boundary_facets:
        for child in FACET_CHILDREN[facet]:
            facets.append((4 * cell + child, facet, tag))

    vertices = np.vstack([mesh.vertices, np.array(new_points)])
    refined = ReferenceMesh(
        vertices=vertices,
        cells=children,
        boundary_facets=np.array(facets, dtype=int),
        refinement_level=mesh.refinement_level + 1,
        circular_boundary=mesh.circular_boundary,
    )
    logger.debug(f"Refined mesh to level {refined.refinement_level}: {refined.n_cells} cells")
    return refined


def ancestor_coordinates(fine_cells: np.ndarray, xi: np.ndarray, levels: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Map fine-mesh reference coordinates to a coarser mesh of the same hierarchy.

    Args:
        fine_cells: Fine cell indices, shape (n,).
        xi: Fine reference coordinates, shape (n, nq, 2) or (nq, 2).
        levels: Number of refinement levels between the meshes.

    Returns:
        Tuple (coarse cell indices (n,), coarse reference coordinates (n, nq, 2)).
    """
    fine_cells = np.asarray(fine_cells)
    out = np.broadcast_to(xi, (len(fine_cells),) + np.shape(xi)[-2:]).astype(float)
    cells = fine_cells.copy()
    for _ in range(levels):
        out = 0.5 * (CHILD_OFFSET[cells % 4][:, None, :] + out)
        cells //= 4
    return cells, out
