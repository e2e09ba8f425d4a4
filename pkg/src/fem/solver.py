"""Sparse direct solves of block systems and L2 projections."""

import logging
from collections.abc import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from src.core.exceptions import AssemblyError, SolverSingular
from src.fem.assembly import BlockLayout, LinearSystem, assemble, load_vector, mass_matrix
from src.fem.geometry import GeometryAtQuad, geometry_at_quadrature
from src.fem.space import FeSpace, Field

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-10


def solve_direct(system: LinearSystem) -> dict[str, np.ndarray]:
    """
    Solve a sparse block system by LU factorisation.

    Essential conditions are eliminated: fixed unknowns take their prescribed
    values and their columns are moved to the right-hand side. One step of
    iterative refinement is applied when the relative residual exceeds 1e-10.

    Args:
        system: Assembled system.

    Returns:
        Solution split by block name.

    Raises:
        SolverSingular: If the factorisation fails or produces non-finite values.
    """
    n = system.layout.size
    fixed_idx, fixed_val = system.fixed
    x = np.zeros(n)
    x[fixed_idx] = fixed_val
    free = np.setdiff1d(np.arange(n), fixed_idx, assume_unique=False)

    matrix = system.matrix.tocsr()
    a_free = matrix[free][:, free].tocsc()
    b_free = system.rhs[free] - matrix[free] @ x

    try:
        lu = splu(a_free)
    except RuntimeError as e:
        raise SolverSingular(f"Factorisation of {a_free.shape[0]}x{a_free.shape[0]} system failed: {e}") from e

    y = lu.solve(b_free)
    if not np.all(np.isfinite(y)):
        raise SolverSingular("Factorisation produced non-finite values")

    norm_b = np.linalg.norm(b_free)
    residual = b_free - a_free @ y
    if norm_b > 0 and np.linalg.norm(residual) > RESIDUAL_TOLERANCE * norm_b:
        y = y + lu.solve(residual)
        residual = b_free - a_free @ y
        relative = np.linalg.norm(residual) / norm_b
        if relative > RESIDUAL_TOLERANCE:
            logger.warning(f"Relative residual {relative:.2e} after refinement")

    x[free] = y
    return system.layout.split(x)


def l2_project(
    source: Field | Callable[[GeometryAtQuad], np.ndarray],
    target: FeSpace,
    psi: Field,
    fixed: tuple[np.ndarray, np.ndarray | float] | None = None,
    quadrature_extra: int = 1,
    reference: bool = False,
) -> Field:
    """
    Galerkin L2 projection onto a space over the configuration psi.

    Args:
        source: A field, or a callable returning values at the bulk quadrature
            points of the given geometry, shape (ne, nq) or (ne, nq, components).
        target: Target space on the mesh of psi.
        psi: ALE map defining the integration domain.
        fixed: Essential conditions (scalar node indices, values), applied to every component.
        quadrature_extra: Extra Gauss points per direction.
        reference: Project with respect to the reference measure.

    Returns:
        Projected field on the target space.
    """
    if target.mesh is not psi.space.mesh:
        raise AssemblyError("Projection target lives on a different mesh")
    geo = geometry_at_quadrature(psi, "cells", quadrature_extra)
    values = geo.values(source) if isinstance(source, Field) else np.asarray(source(geo))
    scalar = target.scalar()
    mass = mass_matrix(geo, scalar, reference=reference)
    n = scalar.n_dofs

    coeffs = []
    for c in range(target.components):
        part = values if target.components == 1 else values[..., c]
        rhs = load_vector(geo, scalar, part, reference=reference)
        layout = BlockLayout(("u",), (n,))
        system = assemble(layout, {("u", "u"): mass}, {"u": rhs}, {"u": fixed} if fixed is not None else None)
        coeffs.append(solve_direct(system)["u"])
    return Field(target, np.concatenate(coeffs))
