import logging

import numpy as np

from src.core.exceptions import ConfigError
from src.fem.basis import SUPPORTED_DEGREES
from src.fem.space import FeSpace, Field
from src.mesh.reference_mesh import FacetTag, ReferenceMesh, refine_uniform

logger = logging.getLogger(__name__)

DISC_CORE_HALF_WIDTH = 0.5


def _check_degree(degree: int) -> None:
    if degree not in SUPPORTED_DEGREES:
        raise ConfigError(f"degree must be one of {SUPPORTED_DEGREES}, got {degree}", key="degree")


def _check_refinement(refinement: int) -> None:
    if refinement < 0:
        raise ConfigError(f"refinement must be non-negative, got {refinement}", key="refinement")


def coarse_disc() -> ReferenceMesh:
    """
    Five-block decomposition of the unit disc.

    A central square with corners (+-a, +-a) is surrounded by four blocks whose
    outer facet is a quarter arc of the unit circle.

    Returns:
        Coarse disc mesh with all boundary facets tagged FreeBoundary.
    """
    a = DISC_CORE_HALF_WIDTH
    r = 1.0 / np.sqrt(2.0)
    vertices = np.array([[-a, -a], [a, -a], [a, a], [-a, a], [-r, -r], [r, -r], [r, r], [-r, r]])
    cells = np.array([[0, 1, 2, 3], [4, 5, 1, 0], [5, 6, 2, 1], [6, 7, 3, 2], [7, 4, 0, 3]])
    facets = np.array([[c, 0, FacetTag.FREE_BOUNDARY] for c in range(1, 5)])
    return ReferenceMesh(vertices, cells, facets, circular_boundary=True)


def build_disc_mesh(refinement: int, degree: int) -> ReferenceMesh:
    """
    Build the reference unit disc.

    Args:
        refinement: Number of uniform refinements of the five-block mesh.
        degree: Polynomial degree the mesh will carry (validated here).

    Returns:
        Disc mesh whose boundary facets are all FreeBoundary.

    Raises:
        ConfigError: If the degree or refinement is invalid.
    """
    _check_degree(degree)
    _check_refinement(refinement)
    mesh = coarse_disc()
    for _ in range(refinement):
        mesh = refine_uniform(mesh)
    logger.info(f"Built disc mesh: level {refinement}, {mesh.n_cells} cells")
    return mesh


def build_ridge_mesh(
    length: float, height: float, delta: float, refinement: int, degree: int
) -> tuple[ReferenceMesh, Field]:
    """
    Build the ridge rectangle [0, L] x [0, H] and its perturbed initial map.

    The coarse mesh has two cells across and enough cells along the ridge to keep
    them close to square. The initial map is
    psi(x, y) = (x, y) + delta * cos(2 pi y / H) * (x, 0).

    Args:
        length: Ridge width L.
        height: Ridge length H (period of the perturbation).
        delta: Perturbation amplitude, |delta| < 1.
        refinement: Number of uniform refinements.
        degree: Polynomial degree of the returned map.

    Returns:
        Tuple (mesh, psi) with psi interpolated into the degree-k vector space.

    Raises:
        ConfigError: On invalid sizes, amplitude, degree or refinement.
    """
    _check_degree(degree)
    _check_refinement(refinement)
    if length <= 0 or height <= 0:
        raise ConfigError(f"ridge sizes must be positive, got L={length}, H={height}", key="geometry.ridge")
    if abs(delta) >= 1:
        raise ConfigError(f"|delta| must be < 1, got {delta}", key="geometry.ridge.delta")

    nx = 2
    ny = max(1, int(round(nx * height / length)))
    xs = np.linspace(0.0, length, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    vertices = np.array([[x, y] for y in ys for x in xs])

    def vid(i: int, j: int) -> int:
        return j * (nx + 1) + i

    cells = []
    facets = []
    for j in range(ny):
        for i in range(nx):
            c = len(cells)
            cells.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)])
            if j == 0:
                facets.append([c, 0, FacetTag.SLIDING])
            if i == nx - 1:
                facets.append([c, 1, FacetTag.FREE_BOUNDARY])
            if j == ny - 1:
                facets.append([c, 2, FacetTag.SLIDING])
            if i == 0:
                facets.append([c, 3, FacetTag.FREE_BOUNDARY])

    mesh = ReferenceMesh(np.array(vertices), np.array(cells), np.array(facets))
    for _ in range(refinement):
        mesh = refine_uniform(mesh)

    space = FeSpace(mesh, degree, components=2)

    def perturbed(points: np.ndarray) -> np.ndarray:
        x, y = points[:, 0], points[:, 1]
        return np.column_stack([x + delta * np.cos(2 * np.pi * y / height) * x, y])

    psi = space.interpolate(perturbed)
    logger.info(f"Built ridge mesh: L={length}, H={height}, delta={delta}, {mesh.n_cells} cells")
    return mesh, psi
