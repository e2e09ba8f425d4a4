"""
Galerkin forms on the deformed configuration and their block systems.

All forms integrate over the deformed domain psi(omega_ref) using the measures
of a GeometryAtQuad, i.e. J dx_ref in the bulk and A dgamma_ref on facets,
unless ``reference=True`` asks for the reference measure.
"""

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from src.core.exceptions import AssemblyError
from src.fem.geometry import GeometryAtQuad
from src.fem.space import FeSpace

logger = logging.getLogger(__name__)


def _scatter(local: np.ndarray, rows: np.ndarray, cols: np.ndarray, shape: tuple[int, int]) -> sp.csr_matrix:
    r = np.broadcast_to(rows[:, :, None], local.shape)
    c = np.broadcast_to(cols[:, None, :], local.shape)
    return sp.coo_matrix((local.ravel(), (r.ravel(), c.ravel())), shape=shape).tocsr()


def _scatter_vector(local: np.ndarray, rows: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(size)
    np.add.at(out, rows.ravel(), local.ravel())
    return out


def _weights(geo: GeometryAtQuad, coeff: np.ndarray | float | None, reference: bool) -> np.ndarray:
    w = geo.ref_measure if reference else geo.measure
    if coeff is None:
        return w
    coeff = np.asarray(coeff, dtype=float)
    if coeff.ndim and coeff.shape != w.shape:
        raise AssemblyError(f"Coefficient shape {coeff.shape} does not match quadrature {w.shape}")
    return w * coeff


def _require_scalar(*spaces: FeSpace) -> None:
    for space in spaces:
        if space.components != 1:
            raise AssemblyError("Scalar form assembled on a vector space")


def mass_matrix(
    geo: GeometryAtQuad,
    test: FeSpace,
    trial: FeSpace | None = None,
    coeff: np.ndarray | float | None = None,
    reference: bool = False,
) -> sp.csr_matrix:
    """
    Weighted mass matrix, integral of c * u * v.

    Args:
        geo: Bulk or facet geometry.
        test: Test space (rows).
        trial: Trial space (columns), defaults to the test space.
        coeff: Quadrature-point coefficient c, shape (ne, nq), or a constant.
        reference: Integrate with the reference measure.

    Returns:
        Sparse matrix of shape (test.n_dofs, trial.n_dofs).
    """
    trial = trial or test
    _require_scalar(test, trial)
    phi_v, _ = geo.basis(test)
    phi_u, _ = geo.basis(trial)
    w = _weights(geo, coeff, reference)
    local = np.einsum("eq,eqa,eqb->eab", w, phi_v, phi_u)
    return _scatter(
        local, test.dof_map[geo.cells], trial.dof_map[geo.cells], (test.n_dofs, trial.n_dofs)
    )


def stiffness_matrix(
    geo: GeometryAtQuad, space: FeSpace, coeff: np.ndarray | float | None = None
) -> sp.csr_matrix:
    """
    Weighted Eulerian stiffness matrix, integral of c * grad u . grad v.

    Args:
        geo: Bulk geometry.
        space: Scalar space.
        coeff: Quadrature-point coefficient c or a constant.

    Returns:
        Symmetric sparse matrix.
    """
    _require_scalar(space)
    _, grads = geo.basis(space)
    w = _weights(geo, coeff, reference=False)
    local = np.einsum("eq,eqai,eqbi->eab", w, grads, grads)
    dofs = space.dof_map[geo.cells]
    return _scatter(local, dofs, dofs, (space.n_dofs, space.n_dofs))


def load_vector(
    geo: GeometryAtQuad, space: FeSpace, values: np.ndarray | float, reference: bool = False
) -> np.ndarray:
    """
    Load vector, integral of f * v.

    Args:
        geo: Bulk or facet geometry.
        space: Scalar test space.
        values: f at the quadrature points, shape (ne, nq), or a constant.
        reference: Integrate with the reference measure.

    Returns:
        Vector of length space.n_dofs.
    """
    _require_scalar(space)
    phi, _ = geo.basis(space)
    w = _weights(geo, values, reference)
    local = np.einsum("eq,eqa->ea", w, phi)
    return _scatter_vector(local, space.dof_map[geo.cells], space.n_dofs)


def gradient_load_vector(geo: GeometryAtQuad, space: FeSpace, values: np.ndarray) -> np.ndarray:
    """
    Load vector against test gradients, integral of f . grad v.

    Args:
        geo: Bulk geometry.
        space: Scalar test space.
        values: Vector f at the quadrature points, shape (ne, nq, 2).

    Returns:
        Vector of length space.n_dofs.
    """
    _require_scalar(space)
    _, grads = geo.basis(space)
    local = np.einsum("eq,eqi,eqai->ea", geo.measure, values, grads)
    return _scatter_vector(local, space.dof_map[geo.cells], space.n_dofs)


def curve_stiffness(
    geo: GeometryAtQuad, space: FeSpace, coeff: np.ndarray | float | None = None
) -> sp.csr_matrix:
    """
    Surface-gradient stiffness on boundary curves, integral of c * grad_G u . grad_G v.

    On a curve grad_G u . grad_G v = u_s v_s / |x_s|^2 with s the facet parameter.

    Args:
        geo: Facet geometry.
        space: Scalar space.
        coeff: Quadrature-point coefficient c or a constant.

    Returns:
        Symmetric sparse matrix of shape (n_dofs, n_dofs).
    """
    _require_scalar(space)
    if geo.arc_speed is None:
        raise AssemblyError("curve_stiffness needs a facet geometry")
    ds = geo.arc_derivative(space)
    w = _weights(geo, coeff, reference=False) / geo.arc_speed**2
    local = np.einsum("eq,eqa,eqb->eab", w, ds, ds)
    dofs = space.dof_map[geo.cells]
    return _scatter(local, dofs, dofs, (space.n_dofs, space.n_dofs))


def symmetric_gradient_matrix(geo: GeometryAtQuad, space: FeSpace) -> sp.csr_matrix:
    """
    Matrix of the form integral of D(u) : D(v), D(u) = (grad u + grad u^T) / 2.

    Args:
        geo: Bulk geometry.
        space: Vector space (component-blocked numbering).

    Returns:
        Symmetric sparse matrix of shape (2 n_dofs, 2 n_dofs).
    """
    if space.components != 2:
        raise AssemblyError("symmetric_gradient_matrix needs a vector space")
    _, grads = geo.basis(space)
    n = space.n_dofs
    dofs = space.dof_map[geo.cells]
    dot = np.einsum("eq,eqai,eqbi->eab", geo.measure, grads, grads)
    blocks = []
    for alpha in range(2):
        row = []
        for beta in range(2):
            cross = np.einsum("eq,eqa,eqb->eab", geo.measure, grads[..., beta], grads[..., alpha])
            local = 0.5 * (cross + (dot if alpha == beta else 0.0))
            row.append(_scatter(local, dofs, dofs, (n, n)))
        blocks.append(row)
    return sp.bmat(blocks, format="csr")


@dataclass(frozen=True)
class BlockLayout:
    """
    Named contiguous unknown blocks of a linear system.

    Attributes:
        names: Block names in order.
        sizes: Block sizes in order.
    """

    names: tuple[str, ...]
    sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.names) != len(self.sizes) or len(set(self.names)) != len(self.names):
            raise AssemblyError(f"Inconsistent block layout {self.names} / {self.sizes}")

    @property
    def size(self) -> int:
        """Total number of unknowns."""
        return int(sum(self.sizes))

    def offset(self, name: str) -> int:
        """First global index of a block."""
        i = self.names.index(name)
        return int(sum(self.sizes[:i]))

    def slice(self, name: str) -> slice:
        """Global index range of a block."""
        start = self.offset(name)
        return slice(start, start + self.sizes[self.names.index(name)])

    def split(self, vector: np.ndarray) -> dict[str, np.ndarray]:
        """Cut a global vector into named blocks."""
        return {name: vector[self.slice(name)].copy() for name in self.names}


@dataclass
class LinearSystem:
    """
    Sparse block system A x = b with optional essential conditions.

    Attributes:
        matrix: Assembled CSR matrix.
        rhs: Right-hand side.
        layout: Block layout of the unknowns.
        fixed: Global indices with prescribed values, as (indices, values).
        symmetric: Whether the matrix is meant to be symmetric.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    layout: BlockLayout
    fixed: tuple[np.ndarray, np.ndarray] = field(
        default_factory=lambda: (np.empty(0, dtype=int), np.empty(0))
    )
    symmetric: bool = True

    def __post_init__(self) -> None:
        n = self.layout.size
        if self.matrix.shape != (n, n) or self.rhs.shape != (n,):
            raise AssemblyError(f"System shape {self.matrix.shape}/{self.rhs.shape} does not match layout size {n}")

    def symmetry_defect(self) -> float:
        """Relative max-norm of A - A^T."""
        scale = abs(self.matrix).max()
        if scale == 0:
            return 0.0
        return float(abs(self.matrix - self.matrix.T).max() / scale)


def assemble(
    layout: BlockLayout,
    blocks: Mapping[tuple[str, str], sp.spmatrix | np.ndarray],
    rhs: Mapping[str, np.ndarray] | None = None,
    fixed: Mapping[str, tuple[np.ndarray, np.ndarray | float]] | None = None,
    symmetric: bool = True,
) -> LinearSystem:
    """
    Combine named blocks into one sparse system.

    Args:
        layout: Block layout of the unknowns.
        blocks: Matrix blocks keyed by (row block, column block); missing blocks are zero.
        rhs: Right-hand side per row block; missing blocks are zero.
        fixed: Essential conditions per block as (local indices, values).
        symmetric: Whether the system is declared symmetric.

    Returns:
        Assembled LinearSystem.

    Raises:
        AssemblyError: If a block does not match the layout.
    """
    grid: list[list[sp.spmatrix | None]] = []
    for r, rname in enumerate(layout.names):
        row: list[sp.spmatrix | None] = []
        for c, cname in enumerate(layout.names):
            block = blocks.get((rname, cname))
            if block is not None:
                block = sp.csr_matrix(block)
                if block.shape != (layout.sizes[r], layout.sizes[c]):
                    raise AssemblyError(
                        f"Block ({rname}, {cname}) has shape {block.shape}, "
                        f"expected {(layout.sizes[r], layout.sizes[c])}"
                    )
            elif r == c:
                block = sp.csr_matrix((layout.sizes[r], layout.sizes[c]))
            row.append(block)
        grid.append(row)
    matrix = sp.bmat(grid, format="csr")

    b = np.zeros(layout.size)
    for name, values in (rhs or {}).items():
        b[layout.slice(name)] = values

    idx_parts = [np.empty(0, dtype=int)]
    val_parts = [np.empty(0)]
    for name, (indices, values) in (fixed or {}).items():
        indices = np.asarray(indices, dtype=int)
        idx_parts.append(indices + layout.offset(name))
        val_parts.append(np.broadcast_to(np.asarray(values, dtype=float), indices.shape))
    system = LinearSystem(
        matrix=matrix,
        rhs=b,
        layout=layout,
        fixed=(np.concatenate(idx_parts), np.concatenate(val_parts)),
        symmetric=symmetric,
    )
    if symmetric and system.symmetry_defect() > 1e-13:
        logger.warning(f"Declared symmetric system has defect {system.symmetry_defect():.2e}")
    return system
