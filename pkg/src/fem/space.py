"""Isoparametric continuous Qk spaces and the fields living on them."""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from src.core.exceptions import AssemblyError
from src.fem.basis import SUPPORTED_DEGREES, lattice, tabulate_q
from src.mesh.reference_mesh import FACET_VERTICES, FacetTag, ReferenceMesh

logger = logging.getLogger(__name__)


def facet_local_nodes(degree: int, facet: int) -> np.ndarray:
    """
    Local node indices on a cell facet, ordered by the facet parameter.

    Args:
        degree: Polynomial degree k.
        facet: Local facet index.

    Returns:
        Array of k + 1 local indices.
    """
    k = degree
    m = np.arange(k + 1)
    ij = {
        0: (m, np.zeros_like(m)),
        1: (np.full_like(m, k), m),
        2: (k - m, np.full_like(m, k)),
        3: (np.zeros_like(m), k - m),
    }[facet]
    return ij[1] * (k + 1) + ij[0]


class FeSpace:
    """
    Continuous degree-k Lagrange space on a quadrilateral reference mesh.

    Vector spaces share the scalar numbering; their coefficient vectors are
    component-blocked, entry c * n_dofs + i holding component c of node i.

    Attributes:
        mesh: Reference mesh.
        degree: Polynomial degree k.
        components: 1 for scalar, 2 for vector spaces.
        dof_map: Global node index per cell and local node, shape (nc, (k+1)^2).
        nodes: Reference coordinates of the global nodes, shape (n_dofs, 2).
    """

    def __init__(self, mesh: ReferenceMesh, degree: int, components: int = 1) -> None:
        if degree not in SUPPORTED_DEGREES:
            raise AssemblyError(f"Unsupported degree {degree}")
        if components not in (1, 2):
            raise AssemblyError(f"Unsupported number of components {components}")
        self.mesh = mesh
        self.degree = degree
        self.components = components
        self.dof_map, self.nodes = self._number_nodes()

    def _number_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        k = self.degree
        nloc = (k + 1) ** 2
        ids: dict[tuple[int, ...], int] = {}
        dof_map = np.empty((self.mesh.n_cells, nloc), dtype=int)
        coords = self.mesh.map_points(lattice(k))
        nodes: list[np.ndarray] = []
        for c, cell in enumerate(self.mesh.cells):
            for a in range(nloc):
                key = self._node_key(c, cell, a % (k + 1), a // (k + 1))
                if key not in ids:
                    ids[key] = len(nodes)
                    nodes.append(coords[c, a])
                dof_map[c, a] = ids[key]
        return dof_map, np.array(nodes)

    def _node_key(self, c: int, cell: np.ndarray, i: int, j: int) -> tuple[int, ...]:
        k = self.degree
        corner = {(0, 0): 0, (k, 0): 1, (k, k): 2, (0, k): 3}.get((i, j))
        if corner is not None:
            return (0, int(cell[corner]))
        if j == 0:
            facet, pos = 0, i
        elif i == k:
            facet, pos = 1, j
        elif j == k:
            facet, pos = 2, k - i
        elif i == 0:
            facet, pos = 3, k - j
        else:
            return (2, c, i, j)
        va, vb = (int(cell[v]) for v in FACET_VERTICES[facet])
        if va > vb:
            va, vb, pos = vb, va, k - pos
        return (1, va, vb, pos)

    @property
    def n_dofs(self) -> int:
        """Number of scalar nodes."""
        return int(self.nodes.shape[0])

    @property
    def size(self) -> int:
        """Length of a coefficient vector."""
        return self.n_dofs * self.components

    @property
    def n_local(self) -> int:
        """Nodes per cell."""
        return int(self.dof_map.shape[1])

    def scalar(self) -> "FeSpace":
        """Scalar space with the same mesh and numbering."""
        if self.components == 1:
            return self
        return self._sibling(1)

    def vector(self) -> "FeSpace":
        """Vector space with the same mesh and numbering."""
        if self.components == 2:
            return self
        return self._sibling(2)

    def _sibling(self, components: int) -> "FeSpace":
        sibling = object.__new__(FeSpace)
        sibling.mesh = self.mesh
        sibling.degree = self.degree
        sibling.components = components
        sibling.dof_map = self.dof_map
        sibling.nodes = self.nodes
        return sibling

    def compatible(self, other: "FeSpace") -> bool:
        """Whether two spaces share mesh, degree and numbering."""
        return self.mesh is other.mesh and self.degree == other.degree

    @cached_property
    def _facet_dofs(self) -> dict[int, np.ndarray]:
        rows: dict[int, list[np.ndarray]] = {}
        for cell, facet, tag in self.mesh.boundary_facets:
            local = facet_local_nodes(self.degree, int(facet))
            rows.setdefault(int(tag), []).append(self.dof_map[cell, local])
        return {tag: np.array(r) for tag, r in rows.items()}

    def facet_dofs(self, tag: FacetTag) -> np.ndarray:
        """
        Global nodes on each facet with a tag, ordered by the facet parameter.

        Args:
            tag: Facet tag.

        Returns:
            Array of shape (n_facets, k + 1).
        """
        return self._facet_dofs.get(int(tag), np.empty((0, self.degree + 1), dtype=int))

    def boundary_dofs(self, tag: FacetTag) -> np.ndarray:
        """
        Sorted scalar nodes lying on facets with a tag.

        Args:
            tag: Facet tag.

        Returns:
            Unique node indices.
        """
        return np.unique(self.facet_dofs(tag))

    def tabulate(self, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Basis values and reference gradients at reference points.

        Args:
            xi: Points of shape (..., 2).

        Returns:
            Tuple (values (..., nloc), gradients (..., nloc, 2)).
        """
        return tabulate_q(self.degree, xi)

    def interpolate(self, func: Callable[[np.ndarray], np.ndarray]) -> "Field":
        """
        Nodal interpolation of a function of the reference coordinates.

        Args:
            func: Maps points (n, 2) to values (n,) or (n, components).

        Returns:
            Interpolating field.
        """
        values = np.asarray(func(self.nodes), dtype=float)
        if self.components == 1:
            return Field(self, values.reshape(-1))
        return Field(self, values.reshape(self.n_dofs, self.components).T.reshape(-1))

    def identity(self) -> "Field":
        """Vector field interpolating the identity map of the reference domain."""
        return self.vector().interpolate(lambda x: x)

    def zeros(self) -> "Field":
        """Zero field."""
        return Field(self, np.zeros(self.size))

    def constant(self, value: float) -> "Field":
        """Constant scalar field."""
        return Field(self, np.full(self.size, float(value)))


@dataclass(frozen=True)
class Field:
    """
    Coefficient vector on a space.

    Attributes:
        space: The space the coefficients refer to.
        coeffs: Component-blocked coefficients of length space.size.
    """

    space: FeSpace
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != (self.space.size,):
            raise AssemblyError(f"Field has {coeffs.shape} coefficients, space expects ({self.space.size},)")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def nodal(self) -> np.ndarray:
        """Coefficients as (n_dofs,) for scalar or (n_dofs, components) for vector fields."""
        if self.space.components == 1:
            return self.coeffs
        return self.coeffs.reshape(self.space.components, self.space.n_dofs).T

    def component(self, c: int) -> np.ndarray:
        """Coefficients of one component."""
        n = self.space.n_dofs
        return self.coeffs[c * n : (c + 1) * n]

    def with_coeffs(self, coeffs: np.ndarray) -> "Field":
        """Field on the same space with other coefficients."""
        return Field(self.space, coeffs)

    def axpy(self, alpha: float, other: "Field") -> "Field":
        """Return self + alpha * other."""
        if other.space.size != self.space.size:
            raise AssemblyError("Cannot combine fields of different sizes")
        return Field(self.space, self.coeffs + alpha * other.coeffs)

    def local(self, cells: np.ndarray) -> np.ndarray:
        """
        Gather cell-local coefficients.

        Args:
            cells: Cell indices.

        Returns:
            Array (ncells, nloc) for scalar or (ncells, nloc, components) for vector fields.
        """
        dofs = self.space.dof_map[cells]
        if self.space.components == 1:
            return self.coeffs[dofs]
        return self.nodal[dofs]


def evaluate(field: Field, cells: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """
    Evaluate a field at reference points of given cells.

    Args:
        field: Field to evaluate.
        cells: Cell indices, shape (n,).
        xi: Reference points, shape (nq, 2) or (n, nq, 2).

    Returns:
        Values of shape (n, nq) or (n, nq, components).
    """
    values, _ = field.space.tabulate(np.asarray(xi, dtype=float))
    local = field.local(np.asarray(cells))
    if values.ndim == 2:
        values = np.broadcast_to(values, (len(cells),) + values.shape)
    if field.space.components == 1:
        return np.einsum("cqa,ca->cq", values, local)
    return np.einsum("cqa,cai->cqi", values, local)
