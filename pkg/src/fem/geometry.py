"""Geometry of the deformed configuration at quadrature points."""

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from src.core.exceptions import AssemblyError, MeshTangled
from src.fem.basis import gauss_interval, gauss_square, points_for_degree
from src.fem.space import FeSpace, Field
from src.mesh.reference_mesh import FACET_DIRECTION, FACET_NORMAL, FacetTag, facet_points

logger = logging.getLogger(__name__)


def _cofactor(m: np.ndarray) -> np.ndarray:
    cof = np.empty_like(m)
    cof[..., 0, 0] = m[..., 1, 1]
    cof[..., 0, 1] = -m[..., 1, 0]
    cof[..., 1, 0] = -m[..., 0, 1]
    cof[..., 1, 1] = m[..., 0, 0]
    return cof


@dataclass
class GeometryAtQuad:
    """
    Geometry of the map psi at the quadrature points of cells or boundary facets.

    Arrays are indexed (element, quadrature point, ...), an element being a cell
    or a boundary facet.

    Attributes:
        psi: Map the geometry was computed from.
        cells: Cell of every element.
        xi: Reference-square coordinates of the quadrature points.
        weights: Quadrature weights on the unit square or interval.
        jac: Derivative of the deformed position with respect to xi.
        F: Deformation gradient of psi with respect to the reference domain.
        J: det F, positive.
        points: Deformed positions psi(x_ref).
        measure: Deformed integration weights (dx or dgamma, quadrature weight included).
        ref_measure: Reference integration weights.
        normal: Outer unit normal of the deformed domain (facets only).
        ref_normal: Outer unit normal of the reference domain (facets only).
        area_ratio: dgamma / dgamma_ref (facets only).
        tangent: Unit tangent along the counter-clockwise boundary (facets only).
        arc_speed: |d psi / ds| along the facet parameter (facets only).
        facet_direction: d xi / ds per element (facets only).
    """

    psi: Field
    cells: np.ndarray
    xi: np.ndarray
    weights: np.ndarray
    jac: np.ndarray
    F: np.ndarray
    J: np.ndarray
    points: np.ndarray
    measure: np.ndarray
    ref_measure: np.ndarray
    normal: np.ndarray | None = None
    ref_normal: np.ndarray | None = None
    area_ratio: np.ndarray | None = None
    tangent: np.ndarray | None = None
    arc_speed: np.ndarray | None = None
    facet_direction: np.ndarray | None = None
    _tables: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict, repr=False)

    @property
    def on_boundary(self) -> bool:
        """Whether the geometry lives on boundary facets."""
        return self.normal is not None

    @property
    def n_elements(self) -> int:
        """Number of cells or facets."""
        return int(self.cells.shape[0])

    def _check_space(self, space: FeSpace) -> None:
        if space.mesh is not self.psi.space.mesh:
            raise AssemblyError("Space and geometry live on different meshes")

    def basis(self, space: FeSpace) -> tuple[np.ndarray, np.ndarray]:
        """
        Basis values and Eulerian gradients of a space at the quadrature points.

        Args:
            space: Space on the same mesh.

        Returns:
            Tuple (values (ne, nq, nloc), gradients (ne, nq, nloc, 2)).
        """
        self._check_space(space)
        if space.degree not in self._tables:
            values, dref = space.tabulate(self.xi if self.on_boundary else self.xi[0])
            if not self.on_boundary:
                values = np.broadcast_to(values, (self.n_elements,) + values.shape)
                dref = np.broadcast_to(dref, (self.n_elements,) + dref.shape)
            inv = np.linalg.inv(self.jac)
            grads = np.einsum("eqaj,eqji->eqai", dref, inv)
            self._tables[space.degree] = (values, grads)
        return self._tables[space.degree]

    def arc_derivative(self, space: FeSpace) -> np.ndarray:
        """
        Derivatives of the basis along the facet parameter, d phi / ds.

        Args:
            space: Space on the same mesh.

        Returns:
            Array (ne, nq, nloc).
        """
        if self.facet_direction is None:
            raise AssemblyError("Arc derivatives need a boundary geometry")
        _, grads = self.basis(space)
        tangent = np.einsum("eqij,ej->eqi", self.jac, self.facet_direction)
        return np.einsum("eqai,eqi->eqa", grads, tangent)

    def values(self, f: Field) -> np.ndarray:
        """
        Evaluate a field at the quadrature points.

        Args:
            f: Scalar or vector field.

        Returns:
            Array (ne, nq) or (ne, nq, components).
        """
        phi, _ = self.basis(f.space)
        local = f.local(self.cells)
        if f.space.components == 1:
            return np.einsum("eqa,ea->eq", phi, local)
        return np.einsum("eqa,eai->eqi", phi, local)

    def gradient(self, f: Field) -> np.ndarray:
        """
        Eulerian gradient of a scalar field, F^{-T} grad_ref f.

        Args:
            f: Scalar field.

        Returns:
            Array (ne, nq, 2).
        """
        if f.space.components != 1:
            raise AssemblyError("gradient() expects a scalar field")
        _, grads = self.basis(f.space)
        return np.einsum("eqai,ea->eqi", grads, f.local(self.cells))


def geometry_at_quadrature(
    psi: Field,
    where: Literal["cells"] | FacetTag = "cells",
    quadrature_extra: int = 1,
) -> GeometryAtQuad:
    """
    Evaluate F, J, the measures and, on facets, the Nanson normal of psi.

    Args:
        psi: Vector field mapping the reference domain to the deformed domain.
        where: "cells" for the bulk rule or a facet tag for the boundary rule.
        quadrature_extra: Extra Gauss points per direction beyond k + 1.

    Returns:
        Geometry at quadrature points.

    Raises:
        AssemblyError: If psi is not a vector field.
        MeshTangled: If the Jacobian is non-positive at some point.
    """
    space = psi.space
    if space.components != 2:
        raise AssemblyError("The ALE map must be a vector field")
    mesh = space.mesh
    n = points_for_degree(space.degree, quadrature_extra)

    if where == "cells":
        rule = gauss_square(n)
        cells = np.arange(mesh.n_cells)
        xi = np.broadcast_to(rule.points, (len(cells),) + rule.points.shape)
        local_facets = None
    else:
        rule = gauss_interval(n)
        facets = mesh.facets_with_tag(FacetTag(where))
        cells = facets[:, 0]
        local_facets = facets[:, 1]
        xi = facet_points(local_facets[:, None], rule.points[None, :, 0])

    phi, dref = space.tabulate(rule.points if local_facets is None else xi)
    if local_facets is None:
        phi = np.broadcast_to(phi, (len(cells),) + phi.shape)
        dref = np.broadcast_to(dref, (len(cells),) + dref.shape)
    deformed = psi.local(cells)
    reference = space.nodes[space.dof_map[cells]]
    jac = np.einsum("eqaj,eai->eqij", dref, deformed)
    ref_jac = np.einsum("eqaj,eai->eqij", dref, reference)
    det = np.linalg.det(jac)
    ref_det = np.linalg.det(ref_jac)

    bad = cells[(det <= 0).any(axis=1)] if det.size else cells[:0]
    if bad.size:
        raise MeshTangled(np.unique(bad))
    if (ref_det <= 0).any():
        raise AssemblyError("Reference cell map is not orientation preserving")

    points = np.einsum("eqa,eai->eqi", phi, deformed)
    F = jac @ np.linalg.inv(ref_jac)
    J = det / ref_det

    if local_facets is None:
        return GeometryAtQuad(
            psi=psi,
            cells=cells,
            xi=np.ascontiguousarray(xi),
            weights=rule.weights,
            jac=jac,
            F=F,
            J=J,
            points=points,
            measure=rule.weights * det,
            ref_measure=rule.weights * ref_det,
        )

    nu_xi = FACET_NORMAL[local_facets]
    nanson = np.einsum("eqij,ej->eqi", _cofactor(jac), nu_xi)
    ref_nanson = np.einsum("eqij,ej->eqi", _cofactor(ref_jac), nu_xi)
    speed = np.linalg.norm(nanson, axis=-1)
    ref_speed = np.linalg.norm(ref_nanson, axis=-1)
    normal = nanson / speed[..., None]
    tangent = np.stack([-normal[..., 1], normal[..., 0]], axis=-1)
    return GeometryAtQuad(
        psi=psi,
        cells=cells,
        xi=xi,
        weights=rule.weights,
        jac=jac,
        F=F,
        J=J,
        points=points,
        measure=rule.weights * speed,
        ref_measure=rule.weights * ref_speed,
        normal=normal,
        ref_normal=ref_nanson / ref_speed[..., None],
        area_ratio=speed / ref_speed,
        tangent=tangent,
        arc_speed=speed,
        facet_direction=FACET_DIRECTION[local_facets],
    )
