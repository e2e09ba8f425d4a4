"""Energy functional, its driving force and closed-form stationary droplets."""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from src.fem.assembly import gradient_load_vector, load_vector, stiffness_matrix
from src.fem.geometry import GeometryAtQuad, geometry_at_quadrature
from src.fem.space import Field
from src.mesh.reference_mesh import FacetTag
from src.physics.params import PhysicsParams
from src.solvers.state import AleState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnergyReport:
    """
    Energy of a state and the integral quantities computed with it.

    Attributes:
        total: Sum of the parts.
        surface: Integral of sigma / 2 |grad h|^2.
        wetting: s times the support area.
        gravity: Integral of h (g_x . x + g_z h / 2).
        line: eps times the contact-line length.
        volume: Integral of h.
        support_area: Area of the support.
        contact_length: Length of the FreeBoundary curves.
    """

    total: float
    surface: float
    wetting: float
    gravity: float
    line: float
    volume: float
    support_area: float
    contact_length: float

    @property
    def parts(self) -> dict[str, float]:
        """Energy contributions by name."""
        return {"surface": self.surface, "wetting": self.wetting, "gravity": self.gravity, "line": self.line}


@dataclass(frozen=True)
class DrivingForce:
    """
    Assembled driving force of the height equation.

    Attributes:
        rhs: Explicit force vector tested with the scalar basis.
        implicit: Block -tau sigma K coupling the height rate, or None for tau = 0.
    """

    rhs: np.ndarray
    implicit: sp.csr_matrix | None


def _gravity_potential(geo: GeometryAtQuad, h: np.ndarray, params: PhysicsParams) -> np.ndarray:
    return geo.points @ np.asarray(params.g_x) + params.g_z * h


def _has_free_boundary(state: AleState) -> bool:
    return FacetTag.FREE_BOUNDARY in state.mesh.tags


def energy(state: AleState, params: PhysicsParams, quadrature_extra: int = 1) -> EnergyReport:
    """
    Evaluate the energy on the deformed configuration.

    Args:
        state: ALE state.
        params: Energy coefficients.
        quadrature_extra: Extra Gauss points per direction.

    Returns:
        Energy report.

    Raises:
        MeshTangled: If psi folds.
    """
    geo = geometry_at_quadrature(state.psi, "cells", quadrature_extra)
    h = geo.values(state.h)
    g = geo.gradient(state.h)
    dx = geo.measure

    surface = float(np.sum(dx * 0.5 * params.sigma * np.sum(g**2, axis=-1)))
    area = float(np.sum(dx))
    gravity = float(np.sum(dx * h * (geo.points @ np.asarray(params.g_x) + 0.5 * params.g_z * h)))
    volume = float(np.sum(dx * h))
    length = 0.0
    if _has_free_boundary(state):
        boundary = geometry_at_quadrature(state.psi, FacetTag.FREE_BOUNDARY, quadrature_extra)
        length = float(np.sum(boundary.measure))

    wetting = params.s * area
    line = params.eps_line * length
    return EnergyReport(
        total=surface + wetting + gravity + line,
        surface=surface,
        wetting=wetting,
        gravity=gravity,
        line=line,
        volume=volume,
        support_area=area,
        contact_length=length,
    )


def driving_force_rhs(
    state: AleState,
    params: PhysicsParams,
    implicit_tau: float = 0.0,
    g_min: float = 1e-8,
    quadrature_extra: int = 1,
    include_boundary: bool = True,
    geometry: GeometryAtQuad | None = None,
    boundary: GeometryAtQuad | None = None,
) -> DrivingForce:
    """
    Assemble the force pairing DE(q) with Eulerian height rates.

    The bulk part is sigma grad h . grad v + (g_x . x + g_z h) v; on FreeBoundary
    facets the density e / |grad h|_reg with e = sigma / 2 |grad h|^2 + s
    accounts for the motion of the contact line.

    Args:
        state: ALE state.
        params: Energy coefficients.
        implicit_tau: Step size of the semi-implicit surface-tension term.
        g_min: Floor of |grad h| in the boundary density.
        quadrature_extra: Extra Gauss points per direction.
        include_boundary: Whether to assemble the contact-line density.
        geometry: Precomputed bulk geometry of state.psi.
        boundary: Precomputed FreeBoundary geometry of state.psi.

    Returns:
        Force vector and optional implicit block.
    """
    space = state.space
    geo = geometry or geometry_at_quadrature(state.psi, "cells", quadrature_extra)
    h = geo.values(state.h)
    stiffness = stiffness_matrix(geo, space)
    rhs = params.sigma * (stiffness @ state.h.coeffs)
    rhs += load_vector(geo, space, _gravity_potential(geo, h, params))

    if include_boundary and _has_free_boundary(state):
        bgeo = boundary or geometry_at_quadrature(state.psi, FacetTag.FREE_BOUNDARY, quadrature_extra)
        g = np.linalg.norm(bgeo.gradient(state.h), axis=-1)
        density = (0.5 * params.sigma * g**2 + params.s) / np.maximum(g, g_min)
        rhs += load_vector(bgeo, space, density)

    implicit = -implicit_tau * params.sigma * stiffness if implicit_tau > 0 else None
    return DrivingForce(rhs=rhs, implicit=implicit)


def energy_rate(
    state: AleState, psidot: Field, hdot_ale: Field, params: PhysicsParams, quadrature_extra: int = 1
) -> float:
    """
    Exact derivative of the discrete energy along ALE rates (psidot, hdot_ale).

    Uses d(dx) = div(psidot) dx and d(grad h) = grad hdot_ale - (grad psidot)^T grad h.

    Args:
        state: ALE state.
        psidot: Rate of the map.
        hdot_ale: Rate of the height coefficients.
        params: Energy coefficients.
        quadrature_extra: Extra Gauss points per direction.

    Returns:
        d/d delta E(psi + delta psidot, h + delta hdot_ale) at delta = 0.
    """
    geo = geometry_at_quadrature(state.psi, "cells", quadrature_extra)
    h = geo.values(state.h)
    g = geo.gradient(state.h)
    _, grads = geo.basis(psidot.space)
    grad_v = np.einsum("eqaj,eai->eqij", grads, psidot.local(geo.cells))
    v = geo.values(psidot)
    div_v = np.trace(grad_v, axis1=-2, axis2=-1)
    dg = geo.gradient(hdot_ale) - np.einsum("eqji,eqj->eqi", grad_v, g)
    dh = geo.values(hdot_ale)

    g_x = np.asarray(params.g_x)
    density = 0.5 * params.sigma * np.sum(g**2, axis=-1) + params.s + h * (geo.points @ g_x + 0.5 * params.g_z * h)
    variation = (
        params.sigma * np.sum(g * dg, axis=-1)
        + h * (v @ g_x)
        + dh * (geo.points @ g_x + params.g_z * h)
        + density * div_v
    )
    rate = float(np.sum(geo.measure * variation))

    if params.eps_line > 0 and _has_free_boundary(state):
        bgeo = geometry_at_quadrature(state.psi, FacetTag.FREE_BOUNDARY, quadrature_extra)
        ds = bgeo.arc_derivative(psidot.space.scalar())
        local = psidot.local(bgeo.cells)
        dtangent = np.einsum("eqa,eai->eqi", ds, local)
        rate += params.eps_line * float(np.sum(bgeo.weights * np.sum(bgeo.tangent * dtangent, axis=-1)))
    return rate


def gradient_pairing(state: AleState, direction: Field, params: PhysicsParams, quadrature_extra: int = 1) -> float:
    """
    Bulk pairing of the energy gradient with a height direction at fixed support.

    Args:
        state: ALE state.
        direction: Scalar field vanishing on FreeBoundary nodes.
        params: Energy coefficients.
        quadrature_extra: Extra Gauss points per direction.

    Returns:
        Integral of sigma grad h . grad v + (g_x . x + g_z h) v.
    """
    geo = geometry_at_quadrature(state.psi, "cells", quadrature_extra)
    h = geo.values(state.h)
    force = gradient_load_vector(geo, state.space, params.sigma * geo.gradient(state.h))
    force += load_vector(geo, state.space, _gravity_potential(geo, h, params))
    return float(force @ direction.coeffs)


def equilibrium_radius(s: float, sigma: float = 1.0, volume: float = 1.0) -> float:
    """
    Contact radius of the stationary droplet without gravity.

    The parabolic cap of volume V with contact slope sqrt(2 s / sigma) has
    radius (4 V / (pi sqrt(2 s / sigma)))^(1/3).

    Args:
        s: Spreading coefficient, positive.
        sigma: Surface tension.
        volume: Droplet volume.

    Returns:
        Equilibrium contact radius.
    """
    slope = np.sqrt(2.0 * s / sigma)
    return float((4.0 * volume / (np.pi * slope)) ** (1.0 / 3.0))


def parabolic_cap(radius: float, volume: float, sigma: float = 1.0) -> tuple[float, float]:
    """
    Height and pressure of the cap h = c (1 - |x|^2 / r^2) with given volume.

    Args:
        radius: Contact radius r.
        volume: Volume pi c r^2 / 2.
        sigma: Surface tension.

    Returns:
        Tuple (c, pi_hat) with pi_hat = -sigma Laplace h = 4 sigma c / r^2.
    """
    c = 2.0 * volume / (np.pi * radius**2)
    return c, 4.0 * sigma * c / radius**2
