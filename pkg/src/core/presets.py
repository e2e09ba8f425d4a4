"""Benchmark run configurations."""

import logging
from typing import Literal

from src.core.run_config import DiscGeometry, GeometryConfig, OutputConfig, RidgeGeometry, RunConfig
from src.physics.params import BulkMobility, ContactLaw, MobilityLaws, PhysicsParams, PowerLaw
from src.stepping.stepper import Scheme, StepperConfig

logger = logging.getLogger(__name__)

SlidingVariant = Literal["i", "ii", "iii", "iv"]

SLIDING_VARIANTS: dict[str, dict[str, float]] = {
    "i": {"g_z": 0.0, "s": 1.0},
    "ii": {"g_z": 50.0, "s": 2.0},
    "iii": {"g_z": 50.0, "s": 1.0},
    "iv": {"g_z": 50.0, "s": 0.5},
}
SLIDING_G_X = 5.0
CONVERGENCE_G_X = 2.0
TRAVELING_G_X = 13.0 / 4.0
FEASIBILITY_G_X = (2.0, 4.0, 6.0, 8.0, 10.0)
FEASIBILITY_EPS = 0.01
STATIONARY_EPS = (5.0, 0.5, 0.05)
RIDGE_TRANSIENT_N0 = (0.1, 1.0, 10.0)
RIDGE_STRONG_THETA: tuple[Literal[-1, 0, 1], ...] = (0, 1, -1)
RIDGE_EPS = 0.02


def _mobilities(n0: float = 1.0, theta: Literal[-1, 0, 1] = 0) -> MobilityLaws:
    return MobilityLaws(m=BulkMobility(power=PowerLaw(m0=1.0, alpha=2.0)), n=ContactLaw(n0=n0, theta=theta))


def sliding_droplet(
    variant: SlidingVariant = "i",
    refinement: int = 2,
    degree: Literal[1, 2, 3] = 2,
    tau: float = 0.005,
    t_end: float = 2.0,
    scheme: Scheme = Scheme.RICH2,
) -> RunConfig:
    """
    Transient droplet sliding down an inclined plane.

    Args:
        variant: Parameter set i) to iv) varying normal gravity and spreading coefficient.
        refinement: Disc refinement level.
        degree: Element degree.
        tau: Step size.
        t_end: Final time.
        scheme: Time discretisation.

    Returns:
        Validated configuration.
    """
    if variant not in SLIDING_VARIANTS:
        raise ValueError(f"Unknown sliding variant '{variant}'")
    values = SLIDING_VARIANTS[variant]
    return RunConfig(
        model="transient",
        geometry=GeometryConfig(disc=DiscGeometry(refinement=refinement)),
        degree=degree,
        physics=PhysicsParams(sigma=1.0, s=values["s"], g_x=(SLIDING_G_X, 0.0), g_z=values["g_z"]),
        mobilities=_mobilities(),
        stepper=StepperConfig(scheme=scheme, tau=tau, t_end=t_end),
        volume=1.0,
    )


def convergence_droplet(
    tau: float = 0.01,
    scheme: Scheme = Scheme.SEMI1,
    refinement: int = 3,
    degree: Literal[1, 2, 3] = 2,
    t_end: float = 0.1,
) -> RunConfig:
    """Sliding droplet used for convergence studies (g_x = 2, T = 0.1)."""
    return RunConfig(
        model="transient",
        geometry=GeometryConfig(disc=DiscGeometry(refinement=refinement)),
        degree=degree,
        physics=PhysicsParams(sigma=1.0, s=1.0, g_x=(CONVERGENCE_G_X, 0.0)),
        mobilities=_mobilities(),
        stepper=StepperConfig(scheme=scheme, tau=tau, t_end=t_end),
        volume=1.0,
    )


def stationary_droplet(
    eps_line: float = 0.05,
    refinement: int = 2,
    degree: Literal[1, 2, 3] = 2,
    tau: float = 1.0 / 40.0,
    t_end: float = 5.0,
) -> RunConfig:
    """
    Quasistatic droplet relaxing from the unit disc to its equilibrium disc.

    Args:
        eps_line: Line tension.
        refinement: Disc refinement level.
        degree: Element degree.
        tau: Step size.
        t_end: Final time.

    Returns:
        Validated configuration.
    """
    return RunConfig(
        model="strong",
        geometry=GeometryConfig(disc=DiscGeometry(refinement=refinement)),
        degree=degree,
        physics=PhysicsParams(sigma=1.0, s=1.0, eps_line=eps_line),
        mobilities=_mobilities(),
        stepper=StepperConfig(scheme=Scheme.SEMI1, tau=tau, t_end=t_end),
        volume=1.0,
        tangential_mode="zero",
    )


def traveling_droplet(
    refinement: int = 2,
    degree: Literal[1, 2, 3] = 2,
    tau: float = 1.0 / 40.0,
    t_end: float = 5.0,
    scheme: Scheme = Scheme.SEMI1,
) -> RunConfig:
    """Quasistatic droplet converging to a traveling wave under in-plane gravity."""
    return RunConfig(
        model="strong",
        geometry=GeometryConfig(disc=DiscGeometry(refinement=refinement)),
        degree=degree,
        physics=PhysicsParams(sigma=1.0, s=1.0, g_x=(TRAVELING_G_X, 0.0), eps_line=RIDGE_EPS),
        mobilities=_mobilities(),
        stepper=StepperConfig(scheme=scheme, tau=tau, t_end=t_end),
        volume=1.0,
    )


def feasibility_member(g_x: float, refinement: int = 3, degree: Literal[1, 2, 3] = 2) -> RunConfig:
    """
    Stationary shape on the unit disc under in-plane gravity.

    Only the initial stationary shape is computed, so t_end is zero.
    """
    return RunConfig(
        model="strong",
        geometry=GeometryConfig(disc=DiscGeometry(refinement=refinement)),
        degree=degree,
        physics=PhysicsParams(sigma=1.0, s=1.0, g_x=(g_x, 0.0), g_z=0.0, eps_line=FEASIBILITY_EPS),
        mobilities=_mobilities(),
        stepper=StepperConfig(scheme=Scheme.SEMI1, tau=0.01, t_end=0.0),
        volume=1.0,
        output=OutputConfig(csv=False),
    )


def ridge_transient(
    n0: float = 1.0,
    refinement: int = 1,
    degree: Literal[1, 2, 3] = 2,
    tau: float = 0.005,
    t_end: float = 20.0,
) -> RunConfig:
    """
    Transient ridge with contact-line friction n0 and m(h) = h^2.

    Args:
        n0: Contact-line mobility.
        refinement: Ridge refinement level.
        degree: Element degree.
        tau: Step size.
        t_end: Final time; runs normally end earlier by pinch-off.

    Returns:
        Validated configuration.
    """
    return RunConfig(
        model="transient",
        geometry=GeometryConfig(ridge=RidgeGeometry(refinement=refinement)),
        degree=degree,
        physics=PhysicsParams(sigma=1.0, s=1.0),
        mobilities=_mobilities(n0=n0),
        stepper=StepperConfig(scheme=Scheme.SEMI1, tau=tau, t_end=t_end),
    )


def ridge_strong(
    theta: Literal[-1, 0, 1] = 0,
    refinement: int = 1,
    degree: Literal[1, 2, 3] = 2,
    tau: float = 0.005,
    t_end: float = 20.0,
) -> RunConfig:
    """Quasistatic ridge with contact-line mobility n = |grad h|^theta and line tension 0.02."""
    return RunConfig(
        model="strong",
        geometry=GeometryConfig(ridge=RidgeGeometry(refinement=refinement)),
        degree=degree,
        physics=PhysicsParams(sigma=1.0, s=1.0, eps_line=RIDGE_EPS),
        mobilities=_mobilities(n0=1.0, theta=theta),
        stepper=StepperConfig(scheme=Scheme.SEMI1, tau=tau, t_end=t_end),
    )


def ridge_presets(model: Literal["transient", "strong"] = "strong") -> dict[str, RunConfig]:
    """
    Named ridge configurations of one model.

    Args:
        model: Model of the presets.

    Returns:
        Mapping from a label such as "theta=-1" or "n0=10" to its configuration.
    """
    if model == "transient":
        return {f"n0={n0:g}": ridge_transient(n0) for n0 in RIDGE_TRANSIENT_N0}
    return {f"theta={theta}": ridge_strong(theta) for theta in RIDGE_STRONG_THETA}


PRESETS = {
    "sliding": sliding_droplet,
    "convergence": convergence_droplet,
    "stationary": stationary_droplet,
    "traveling": traveling_droplet,
    "ridge-transient": ridge_transient,
    "ridge-strong": ridge_strong,
}
