"""Wiring of a RunConfig into an initial state, a context and a trajectory."""

import logging
from collections.abc import Sequence
from typing import Any

from src.core.config_loader import load_settings
from src.core.run_config import RunConfig
from src.fem.space import FeSpace, Field
from src.mesh.builders import build_disc_mesh, build_ridge_mesh
from src.physics.energy import equilibrium_radius
from src.solvers.quasistatic import initial_quasistatic_state, stationary_shape
from src.solvers.state import AleState, SimulationContext
from src.stepping.stepper import Trajectory, TrajectorySink, run

logger = logging.getLogger(__name__)


def build_context(config: RunConfig) -> SimulationContext:
    """
    Simulation context of a configuration.

    Args:
        config: Validated configuration.

    Returns:
        Fresh context with an empty event list.
    """
    assert config.tangential_mode is not None
    return SimulationContext(
        params=config.physics,
        mobilities=config.mobilities,
        model=config.model,
        tangential_mode=config.tangential_mode,
        g_min=config.g_min,
        feasibility_tol=config.feasibility_tol,
        quadrature_extra=config.quadrature_extra,
    )


def build_initial_map(config: RunConfig) -> Field:
    """
    Initial ALE map of the configured support.

    Args:
        config: Validated configuration.

    Returns:
        Identity on the disc, scaled to the equilibrium radius of the configured
        volume for the weak model; the perturbed map on the ridge.
    """
    geometry = config.geometry
    if geometry.ridge is not None:
        ridge = geometry.ridge
        _, psi = build_ridge_mesh(ridge.L, ridge.H, ridge.delta, ridge.refinement, config.degree)
        return psi
    assert geometry.disc is not None
    mesh = build_disc_mesh(geometry.disc.refinement, config.degree)
    psi = FeSpace(mesh, config.degree, 2).identity()
    if config.model != "weak":
        return psi
    assert config.volume is not None
    radius = equilibrium_radius(config.physics.s, config.physics.sigma, config.volume)
    logger.debug(f"Weak model starts on the equilibrium disc of radius {radius:.6g}")
    return psi.with_coeffs(radius * psi.coeffs)


def build_initial_state(config: RunConfig, ctx: SimulationContext) -> AleState:
    """
    Initial state: the stationary shape of the configured volume on the initial support.

    Args:
        config: Validated configuration.
        ctx: Simulation context receiving a feasibility warning if any.

    Returns:
        QuasistaticState for the strong model, AleState otherwise.
    """
    psi = build_initial_map(config)
    assert config.volume is not None
    if config.model == "strong":
        return initial_quasistatic_state(psi, config.volume, ctx)
    h, _ = stationary_shape(psi, config.volume, config.physics, ctx)
    return AleState(psi=psi, h=h, t=0.0, vol0=config.volume)


def simulate(
    config: RunConfig,
    sinks: Sequence[TrajectorySink] = (),
    settings: dict[str, Any] | None = None,
) -> Trajectory:
    """
    Run a configuration from its initial state.

    Args:
        config: Validated configuration.
        sinks: Receivers of rows and snapshots.
        settings: Settings as returned by load_settings (loaded if None).

    Returns:
        Trajectory summary.
    """
    ridge_settings = (settings if settings is not None else load_settings())["ridge"]
    ctx = build_context(config)
    initial = build_initial_state(config, ctx)
    logger.info(
        f"Simulating {config.model} model on {'ridge' if config.geometry.ridge else 'disc'}, "
        f"degree {config.degree}, {initial.space.n_dofs} height dofs"
    )
    return run(
        initial,
        config.stepper,
        ctx,
        sinks,
        width_samples=ridge_settings["width_samples"],
        w_min=ridge_settings["w_min"],
    )
