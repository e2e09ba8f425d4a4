"""
Decoupled semi-implicit base step of the transient model.

Step 1 solves for the Eulerian height rate, the pressure and the contact-line
multiplier on the frozen configuration. Step 2 extends the resulting boundary
velocity into an ALE velocity by minimising the symmetric-gradient energy.
Step 3 converts the Eulerian rate into the rate of the height coefficients.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from src.core.exceptions import FeasibilityViolation
from src.fem.assembly import (
    BlockLayout,
    assemble,
    load_vector,
    mass_matrix,
    stiffness_matrix,
    symmetric_gradient_matrix,
)
from src.fem.geometry import GeometryAtQuad, geometry_at_quadrature
from src.fem.solver import l2_project, solve_direct
from src.fem.space import FeSpace, Field
from src.mesh.reference_mesh import FacetTag
from src.physics.energy import driving_force_rhs
from src.solvers.state import AleState, KinematicRates, SimulationContext, TangentialMode, free_boundary_dofs

logger = logging.getLogger(__name__)

SINGULAR_TRANSLATION_RATIO = 1e-10


@dataclass(frozen=True)
class Step1Result:
    """
    Output of the force/dissipation solve.

    Attributes:
        hdot: Eulerian height rate.
        pi: Pressure.
        zeta: Contact-line multiplier on zeta_dofs (empty in weak mode).
        zeta_dofs: FreeBoundary scalar nodes.
        dissipation: pi^T K_m pi + zeta^T N zeta.
        power: Force vector paired with hdot.
    """

    hdot: Field
    pi: Field
    zeta: np.ndarray
    zeta_dofs: np.ndarray
    dissipation: float
    power: float


@dataclass(frozen=True)
class Step2Result:
    """
    Output of the ALE extension.

    Attributes:
        psidot: ALE velocity.
        lam: Constraint multipliers.
        w: Translation velocity used for the tangential component.
    """

    psidot: Field
    lam: np.ndarray
    w: np.ndarray


def _geometries(state: AleState, ctx: SimulationContext) -> tuple[GeometryAtQuad, GeometryAtQuad | None]:
    geo = geometry_at_quadrature(state.psi, "cells", ctx.quadrature_extra)
    if FacetTag.FREE_BOUNDARY not in state.mesh.tags:
        return geo, None
    return geo, geometry_at_quadrature(state.psi, FacetTag.FREE_BOUNDARY, ctx.quadrature_extra)


def _regularised_slope(
    bgeo: GeometryAtQuad, h: Field, ctx: SimulationContext, t: float
) -> tuple[np.ndarray, np.ndarray]:
    g = bgeo.gradient(h)
    norm = np.linalg.norm(g, axis=-1)
    degenerate = norm < ctx.g_min
    if degenerate.any():
        ctx.record("degeneracy", f"|grad h| below g_min at {int(degenerate.sum())} contact-line point(s)", t)
    return g, np.maximum(norm, ctx.g_min)


def step1_solve(state: AleState, ctx: SimulationContext, tau: float) -> Step1Result:
    """
    Solve the symmetric saddle system for (hdot, pi, zeta).

    Rows: force identification with the implicit -tau sigma K block on hdot,
    the bulk mass on hdot with the m-weighted stiffness on pi, and the boundary
    mass on hdot with the n |grad h|^2-weighted boundary mass on zeta. The weak
    model drops zeta and its row.

    Args:
        state: Input state.
        ctx: Simulation context.
        tau: Step size of the semi-implicit surface-tension term (0 for explicit).

    Returns:
        Rates and the discrete dissipation.

    Raises:
        SolverSingular: If the saddle system is singular.
        MeshTangled: If psi folds.
    """
    space = state.space
    geo, bgeo = _geometries(state, ctx)
    h_q = geo.values(state.h)

    mass = mass_matrix(geo, space)
    km = stiffness_matrix(geo, space, coeff=ctx.mobilities.mobility_bulk(h_q))
    force = driving_force_rhs(
        state, ctx.params, tau, ctx.g_min, ctx.quadrature_extra, geometry=geo, boundary=bgeo
    )
    n = space.n_dofs
    blocks: dict[tuple[str, str], sp.spmatrix] = {("pi", "hdot"): mass, ("hdot", "pi"): mass, ("pi", "pi"): km}
    if force.implicit is not None:
        blocks[("hdot", "hdot")] = force.implicit

    use_zeta = ctx.model != "weak" and bgeo is not None
    zeta_dofs = free_boundary_dofs(space) if use_zeta else np.empty(0, dtype=int)
    names: tuple[str, ...] = ("hdot", "pi")
    sizes: tuple[int, ...] = (n, n)
    n_matrix = None
    if use_zeta:
        assert bgeo is not None
        _regularised_slope(bgeo, state.h, ctx, state.t)
        g = np.linalg.norm(bgeo.gradient(state.h), axis=-1)
        weight = ctx.mobilities.mobility_contact(g, ctx.g_min) * g**2
        coupling = mass_matrix(bgeo, space).tocsr()[:, zeta_dofs]
        n_matrix = mass_matrix(bgeo, space, coeff=weight).tocsr()[zeta_dofs][:, zeta_dofs]
        blocks[("hdot", "zeta")] = coupling
        blocks[("zeta", "hdot")] = coupling.T.tocsr()
        blocks[("zeta", "zeta")] = n_matrix
        names += ("zeta",)
        sizes += (len(zeta_dofs),)

    layout = BlockLayout(names, sizes)
    solution = solve_direct(assemble(layout, blocks, {"hdot": force.rhs}))
    hdot = Field(space, solution["hdot"])
    pi = Field(space, solution["pi"])
    zeta = solution.get("zeta", np.empty(0))

    dissipation = float(pi.coeffs @ (km @ pi.coeffs))
    if n_matrix is not None:
        dissipation += float(zeta @ (n_matrix @ zeta))
    power = float(force.rhs @ hdot.coeffs)
    logger.debug(f"Step 1 at t={state.t:.6g}: dissipation={dissipation:.6e}, power={power:.6e}")
    return Step1Result(hdot=hdot, pi=pi, zeta=zeta, zeta_dofs=zeta_dofs, dissipation=dissipation, power=power)


def translation_from_normal_speed(
    bgeo: GeometryAtQuad, normal_speed: np.ndarray, ctx: SimulationContext, t: float
) -> np.ndarray:
    """
    Least-squares rigid translation of a normal boundary speed.

    Solves (integral of nu x nu) w = integral of v_n nu over the boundary.

    Args:
        bgeo: FreeBoundary geometry.
        normal_speed: Normal speed at the boundary quadrature points.
        ctx: Simulation context receiving a fallback event.
        t: Time stamp for events.

    Returns:
        Translation vector, zero if the normal matrix is singular.
    """
    nu = bgeo.normal
    assert nu is not None
    matrix = np.einsum("eq,eqi,eqj->ij", bgeo.measure, nu, nu)
    rhs = np.einsum("eq,eq,eqi->i", bgeo.measure, normal_speed, nu)
    eigenvalues = np.linalg.eigvalsh(matrix)
    if eigenvalues[0] <= SINGULAR_TRANSLATION_RATIO * max(eigenvalues[-1], 1e-300):
        ctx.record("translation_fallback", "normal matrix of the contact line is singular, using w = 0", t)
        return np.zeros(2)
    return np.linalg.solve(matrix, rhs)


def _normal_velocity(
    state: AleState, hdot: Field, bgeo: GeometryAtQuad, ctx: SimulationContext
) -> np.ndarray:
    rate = bgeo.values(hdot)
    if ctx.model == "weak":
        slope = max(ctx.params.equilibrium_slope, ctx.g_min)
        assert bgeo.normal is not None
        return (rate / slope)[..., None] * bgeo.normal
    g, slope = _regularised_slope(bgeo, state.h, ctx, state.t)
    return -(rate / slope**2)[..., None] * g


def estimate_translation(state: AleState, hdot: Field, ctx: SimulationContext) -> np.ndarray:
    """
    Translation velocity best matching the normal boundary velocity hdot / |grad h|.

    Args:
        state: Input state.
        hdot: Eulerian height rate.
        ctx: Simulation context.

    Returns:
        Translation vector w (zero without FreeBoundary).
    """
    if FacetTag.FREE_BOUNDARY not in state.mesh.tags:
        return np.zeros(2)
    bgeo = geometry_at_quadrature(state.psi, FacetTag.FREE_BOUNDARY, ctx.quadrature_extra)
    assert bgeo.normal is not None
    speed = np.sum(_normal_velocity(state, hdot, bgeo, ctx) * bgeo.normal, axis=-1)
    return translation_from_normal_speed(bgeo, speed, ctx, state.t)


def extend_boundary_velocity(
    state: AleState, boundary_velocity: np.ndarray | None, ctx: SimulationContext
) -> tuple[Field, np.ndarray]:
    """
    Extend a FreeBoundary velocity into the domain.

    Minimises the integral of D(v) : D(v) subject to the L2 projection of the
    trace of v on FreeBoundary facets (reference measure) matching the data.
    On Sliding facets the vertical component vanishes and tangential slip is free.

    Args:
        state: State defining the configuration.
        boundary_velocity: Velocity at the FreeBoundary quadrature points, shape (nf, nq, 2).
        ctx: Simulation context.

    Returns:
        Tuple (psidot, multipliers).
    """
    vspace: FeSpace = state.psi.space
    scalar = vspace.scalar()
    n = scalar.n_dofs
    geo = geometry_at_quadrature(state.psi, "cells", ctx.quadrature_extra)
    stiffness = symmetric_gradient_matrix(geo, vspace)

    sliding = scalar.boundary_dofs(FacetTag.SLIDING)
    fixed = {"psidot": (sliding + n, 0.0)} if sliding.size else {}
    blocks: dict[tuple[str, str], sp.spmatrix] = {("psidot", "psidot"): stiffness}
    rhs: dict[str, np.ndarray] = {}
    names: tuple[str, ...] = ("psidot",)
    sizes: tuple[int, ...] = (2 * n,)

    if boundary_velocity is not None:
        bgeo = geometry_at_quadrature(state.psi, FacetTag.FREE_BOUNDARY, ctx.quadrature_extra)
        free = free_boundary_dofs(scalar)
        free_y = np.setdiff1d(free, sliding)
        trace_mass = mass_matrix(bgeo, scalar, reference=True).tocsr()
        rows_x = trace_mass[free]
        rows_y = trace_mass[free_y]
        constraint = sp.bmat([[rows_x, None], [None, rows_y]], format="csr")
        data = np.concatenate([
            load_vector(bgeo, scalar, boundary_velocity[..., 0], reference=True)[free],
            load_vector(bgeo, scalar, boundary_velocity[..., 1], reference=True)[free_y],
        ])
        blocks[("lam", "psidot")] = constraint
        blocks[("psidot", "lam")] = constraint.T.tocsr()
        rhs["lam"] = data
        names += ("lam",)
        sizes += (constraint.shape[0],)

    solution = solve_direct(assemble(BlockLayout(names, sizes), blocks, rhs, fixed))
    return Field(vspace, solution["psidot"]), solution.get("lam", np.empty(0))


def boundary_velocity_with_mode(
    normal_velocity: np.ndarray, bgeo: GeometryAtQuad, mode: TangentialMode, ctx: SimulationContext, t: float
) -> tuple[np.ndarray, np.ndarray]:
    """
    Add the tangential component selected by the mode to a normal boundary velocity.

    Args:
        normal_velocity: Normal velocity vectors at the FreeBoundary quadrature points.
        bgeo: FreeBoundary geometry.
        mode: "zero" keeps the normal velocity, "traveling_wave" adds (w . t) t.
        ctx: Simulation context.
        t: Time stamp for events.

    Returns:
        Tuple (boundary velocity, translation w).
    """
    if mode == "zero":
        return normal_velocity, np.zeros(2)
    assert bgeo.normal is not None and bgeo.tangent is not None
    speed = np.sum(normal_velocity * bgeo.normal, axis=-1)
    w = translation_from_normal_speed(bgeo, speed, ctx, t)
    # Tangential part of w; (w . t) t is the same for either orientation of t.
    tangential = (bgeo.tangent @ w)[..., None] * bgeo.tangent
    return normal_velocity + tangential, w


def step2_reconstruct(
    state: AleState, hdot: Field, ctx: SimulationContext, tangential_mode: TangentialMode | None = None
) -> Step2Result:
    """
    Reconstruct the ALE velocity from the Eulerian height rate.

    On FreeBoundary facets the trace of psidot matches -grad h hdot / |grad h|_reg^2,
    plus (w . t) t in traveling_wave mode.

    Args:
        state: Input state.
        hdot: Eulerian height rate from step 1.
        ctx: Simulation context.
        tangential_mode: Overrides ctx.tangential_mode.

    Returns:
        ALE velocity, multipliers and translation.
    """
    mode = tangential_mode or ctx.tangential_mode
    if FacetTag.FREE_BOUNDARY not in state.mesh.tags:
        psidot, lam = extend_boundary_velocity(state, None, ctx)
        return Step2Result(psidot=psidot, lam=lam, w=np.zeros(2))
    bgeo = geometry_at_quadrature(state.psi, FacetTag.FREE_BOUNDARY, ctx.quadrature_extra)
    velocity, w = boundary_velocity_with_mode(_normal_velocity(state, hdot, bgeo, ctx), bgeo, mode, ctx, state.t)
    psidot, lam = extend_boundary_velocity(state, velocity, ctx)
    return Step2Result(psidot=psidot, lam=lam, w=w)


def step3_project(state: AleState, hdot: Field, psidot: Field, ctx: SimulationContext) -> Field:
    """
    Rate of the height coefficients, the L2 projection of hdot + psidot . grad h.

    FreeBoundary nodes are constrained to zero.

    Args:
        state: Input state.
        hdot: Eulerian height rate.
        psidot: ALE velocity.
        ctx: Simulation context.

    Returns:
        hdot_ale on the scalar space.
    """

    def convective(geo: GeometryAtQuad) -> np.ndarray:
        return geo.values(hdot) + np.sum(geo.values(psidot) * geo.gradient(state.h), axis=-1)

    free = free_boundary_dofs(state.space)
    return l2_project(
        convective, state.space, state.psi, fixed=(free, 0.0), quadrature_extra=ctx.quadrature_extra
    )


def compute_rates(state: AleState, ctx: SimulationContext, tau: float) -> KinematicRates:
    """
    Run steps 1 to 3 on a state.

    Args:
        state: Input state.
        ctx: Simulation context.
        tau: Step size.

    Returns:
        Rate bundle.
    """
    step1 = step1_solve(state, ctx, tau)
    step2 = step2_reconstruct(state, step1.hdot, ctx)
    hdot_ale = step3_project(state, step1.hdot, step2.psidot, ctx)
    return KinematicRates(
        hdot_eulerian=step1.hdot,
        pi=step1.pi,
        zeta=step1.zeta,
        zeta_dofs=step1.zeta_dofs,
        psidot=step2.psidot,
        lam=step2.lam,
        hdot_ale=hdot_ale,
        w=step2.w,
        dissipation=step1.dissipation,
        power=step1.power,
    )


def check_feasibility(h: Field, ctx: SimulationContext) -> None:
    """
    Reject heights below the feasibility tolerance.

    Raises:
        FeasibilityViolation: If min h < -feasibility_tol.
    """
    min_h = float(h.coeffs.min())
    if min_h < -ctx.feasibility_tol:
        raise FeasibilityViolation(min_h, ctx.feasibility_tol)


def base_step(state: AleState, ctx: SimulationContext, tau: float) -> AleState:
    """
    One first-order semi-implicit step q <- q + tau * rate.

    Args:
        state: Input state, left untouched on failure.
        ctx: Simulation context.
        tau: Step size, positive.

    Returns:
        Updated state.

    Raises:
        MeshTangled: If the updated map folds.
        FeasibilityViolation: If the updated height is too negative.
    """
    rates = compute_rates(state, ctx, tau)
    psi = state.psi.axpy(tau, rates.psidot)
    h = state.h.axpy(tau, rates.hdot_ale)
    geometry_at_quadrature(psi, "cells", ctx.quadrature_extra)
    check_feasibility(h, ctx)
    return state.advanced(psi, h, state.t + tau)


def dissipation(state: AleState, ctx: SimulationContext) -> float:
    """
    Dissipation rate of the explicit (tau = 0) rates of a state.

    Args:
        state: ALE state.
        ctx: Simulation context.

    Returns:
        Integral of m |grad pi|^2 plus the contact-line term n |grad h|^2 zeta^2.
    """
    return step1_solve(state, ctx, 0.0).dissipation
