"""
Strong contact-line dissipation limit.

The height relaxes instantly: at every time it is the volume-constrained
minimiser of the energy on the current support. The support moves by a
contact-line velocity stabilised with line tension and treated semi-implicitly
through the Laplace-Beltrami operator of the boundary curve.
"""

import logging
from dataclasses import replace

import numpy as np
import scipy.sparse as sp

from src.fem.assembly import BlockLayout, assemble, curve_stiffness, load_vector, mass_matrix, stiffness_matrix
from src.fem.geometry import geometry_at_quadrature
from src.fem.solver import solve_direct
from src.fem.space import Field
from src.mesh.reference_mesh import FacetTag
from src.physics.params import PhysicsParams
from src.solvers.state import QuasistaticState, SimulationContext, free_boundary_dofs
from src.solvers.transient import boundary_velocity_with_mode, check_feasibility, extend_boundary_velocity

logger = logging.getLogger(__name__)


def stationary_shape(
    psi: Field,
    vol0: float,
    params: PhysicsParams,
    ctx: SimulationContext | None = None,
    t: float = 0.0,
) -> tuple[Field, float]:
    """
    Volume-constrained energy minimiser on the support psi(omega_ref).

    Solves sigma K h + g_z M h - pi_hat m = -integral (g_x . x) v with
    m^T h = vol0 and h = 0 on FreeBoundary nodes.

    Args:
        psi: ALE map of the support.
        vol0: Prescribed volume.
        params: Energy coefficients.
        ctx: Context receiving a feasibility warning when min h < 0.
        t: Time stamp for events.

    Returns:
        Tuple (h, pi_hat).

    Raises:
        SolverSingular: If the saddle system is singular.
        MeshTangled: If psi folds.
    """
    quadrature_extra = ctx.quadrature_extra if ctx is not None else 1
    space = psi.space.scalar()
    geo = geometry_at_quadrature(psi, "cells", quadrature_extra)
    operator = params.sigma * stiffness_matrix(geo, space)
    if params.g_z:
        operator = operator + params.g_z * mass_matrix(geo, space)
    ones = load_vector(geo, space, 1.0)
    column = sp.csr_matrix(-ones[:, None])
    gravity = load_vector(geo, space, geo.points @ np.asarray(params.g_x))

    layout = BlockLayout(("h", "pi_hat"), (space.n_dofs, 1))
    system = assemble(
        layout,
        {("h", "h"): operator, ("h", "pi_hat"): column, ("pi_hat", "h"): column.T},
        {"h": -gravity, "pi_hat": np.array([-vol0])},
        {"h": (free_boundary_dofs(space), 0.0)},
    )
    solution = solve_direct(system)
    h = Field(space, solution["h"])
    pi_hat = float(solution["pi_hat"][0])

    min_h = float(h.coeffs.min())
    if min_h < 0:
        message = f"stationary shape has min h = {min_h:.3e}"
        if ctx is not None:
            ctx.record("feasibility_warning", message, t)
        else:
            logger.warning(message)
    return h, pi_hat


def initial_quasistatic_state(psi: Field, vol0: float, ctx: SimulationContext, t: float = 0.0) -> QuasistaticState:
    """
    Build a state whose height is the stationary shape on psi.

    Args:
        psi: ALE map of the initial support.
        vol0: Volume.
        ctx: Simulation context.
        t: Initial time.

    Returns:
        Quasistatic state.
    """
    h, pi_hat = stationary_shape(psi, vol0, ctx.params, ctx, t)
    return QuasistaticState(psi=psi, h=h, t=t, vol0=vol0, pi_hat=pi_hat)


def contact_velocity(state: QuasistaticState, ctx: SimulationContext, tau: float) -> Field:
    """
    Contact-line velocity with semi-implicit line tension.

    Solves on the FreeBoundary curves, for both components,
    integral of xdot . v + tau eps n grad_G xdot : grad_G v
    = integral of f . v - eps n grad_G x : grad_G v,
    with f = -n (s - sigma / 2 |grad h|^2) nu and n = n0 |grad h|_reg^theta.

    Args:
        state: Quasistatic state.
        ctx: Simulation context.
        tau: Step size of the implicit curvature term.

    Returns:
        Vector field supported on the FreeBoundary nodes.
    """
    vspace = state.psi.space
    space = vspace.scalar()
    bgeo = geometry_at_quadrature(state.psi, FacetTag.FREE_BOUNDARY, ctx.quadrature_extra)
    assert bgeo.normal is not None
    free = free_boundary_dofs(space)
    params = ctx.params

    slope = np.linalg.norm(bgeo.gradient(state.h), axis=-1)
    mobility = ctx.mobilities.mobility_contact(slope, ctx.g_min)
    force = -mobility * (params.s - 0.5 * params.sigma * slope**2)

    mass = mass_matrix(bgeo, space).tocsr()[free][:, free]
    operator = mass
    curvature = None
    if params.eps_line > 0:
        curvature = curve_stiffness(bgeo, space, coeff=mobility).tocsr()[free][:, free]
        operator = mass + tau * params.eps_line * curvature

    layout = BlockLayout(("xdot",), (len(free),))
    coeffs = np.zeros(vspace.size)
    for c in range(2):
        rhs = load_vector(bgeo, space, force * bgeo.normal[..., c])[free]
        if curvature is not None:
            rhs -= params.eps_line * (curvature @ state.psi.component(c)[free])
        solution = solve_direct(assemble(layout, {("xdot", "xdot"): operator}, {"xdot": rhs}))
        coeffs[c * space.n_dofs + free] = solution["xdot"]
    return Field(vspace, coeffs)


def quasistatic_step(state: QuasistaticState, ctx: SimulationContext, tau: float) -> QuasistaticState:
    """
    Move the support by the contact-line velocity and re-solve the height.

    Args:
        state: Input state, left untouched on failure.
        ctx: Simulation context.
        tau: Step size.

    Returns:
        State at t + tau.

    Raises:
        MeshTangled: If the moved map folds.
        FeasibilityViolation: If the new height is too negative.
    """
    xdot = contact_velocity(state, ctx, tau)
    bgeo = geometry_at_quadrature(state.psi, FacetTag.FREE_BOUNDARY, ctx.quadrature_extra)
    assert bgeo.normal is not None
    speed = np.sum(bgeo.values(xdot) * bgeo.normal, axis=-1)
    velocity, w = boundary_velocity_with_mode(
        speed[..., None] * bgeo.normal, bgeo, ctx.tangential_mode, ctx, state.t
    )
    psidot, _ = extend_boundary_velocity(state, velocity, ctx)
    psi = state.psi.axpy(tau, psidot)
    geometry_at_quadrature(psi, "cells", ctx.quadrature_extra)

    h, pi_hat = stationary_shape(psi, state.vol0, ctx.params, ctx, state.t + tau)
    check_feasibility(h, ctx)
    logger.debug(f"Quasistatic step to t={state.t + tau:.6g}: w={w}, pi_hat={pi_hat:.6e}")
    return replace(state, psi=psi, h=h, t=state.t + tau, pi_hat=pi_hat)
