"""Base-step chains, Richardson extrapolation and the trajectory loop."""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Protocol

from pydantic import BaseModel, ConfigDict, Field

from src.core.exceptions import RidgeCollapsed, TerminalEvent
from src.diagnostics.monitors import ScalarSeries, SeriesRow, is_ridge, monitor
from src.solvers.quasistatic import quasistatic_step
from src.solvers.state import AleState, ModelKind, SimulationContext, SolverEvent
from src.solvers.transient import base_step

logger = logging.getLogger(__name__)

StepFunction = Callable[[AleState, SimulationContext, float], AleState]


class Scheme(StrEnum):
    """Time discretisation schemes."""

    SEMI1 = "SEMI1"
    RICH2 = "RICH2"
    RICH3 = "RICH3"

    @property
    def order(self) -> int:
        """Formal order of the scheme."""
        return int(self.value[-1])


class StepperConfig(BaseModel):
    """
    Time stepping parameters.

    Attributes:
        scheme: SEMI1, RICH2 or RICH3.
        tau: Macro step size.
        t_end: Final time.
        snapshot_every: Snapshot period in macro steps.
        solver: Model whose base step is used.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    scheme: Scheme = Scheme.SEMI1
    tau: float = Field(gt=0)
    t_end: float = Field(ge=0)
    snapshot_every: int = Field(default=10, ge=1)
    solver: ModelKind = "transient"


def richardson_weights(order: int) -> dict[int, float]:
    """
    Weights of the sub-chain endpoints of an extrapolated step.

    q(1, tau) is one base step and
    q(r + 1, tau) = (2^r q(r, tau / 2) - q(r, tau)) / (2^r - 1).

    Args:
        order: Extrapolation order r >= 1.

    Returns:
        Mapping from the number of sub-steps to its weight; weights sum to 1.
    """
    weights = {1: 1.0}
    for r in range(1, order):
        factor = 2.0**r
        halved = {2 * k: w for k, w in weights.items()}
        combined: dict[int, float] = {}
        for k, w in halved.items():
            combined[k] = combined.get(k, 0.0) + factor * w / (factor - 1)
        for k, w in weights.items():
            combined[k] = combined.get(k, 0.0) - w / (factor - 1)
        weights = combined
    return dict(sorted(weights.items(), reverse=True))


def step_function_for(model: ModelKind) -> StepFunction:
    """Base step of a model."""
    if model == "strong":
        return quasistatic_step  # type: ignore[return-value]
    return base_step


def substep_chain(state: AleState, step_fn: StepFunction, ctx: SimulationContext, tau: float, k: int) -> AleState:
    """
    Apply k base steps of size tau / k.

    Args:
        state: Initial state.
        step_fn: Base step.
        ctx: Simulation context.
        tau: Total step.
        k: Number of sub-steps, k >= 1.

    Returns:
        State at state.t + tau.
    """
    if k < 1:
        raise ValueError(f"Number of sub-steps must be positive, got {k}")
    t0 = state.t
    for _ in range(k):
        state = step_fn(state, ctx, tau / k)
    return state.advanced(state.psi, state.h, t0 + tau)


def extrapolated_step(
    state: AleState, step_fn: StepFunction, ctx: SimulationContext, tau: float, scheme: Scheme
) -> AleState:
    """
    One macro step of a scheme by Richardson extrapolation of sub-chains.

    Args:
        state: Initial state shared by every sub-chain.
        step_fn: Base step.
        ctx: Simulation context.
        tau: Macro step.
        scheme: Time discretisation scheme.

    Returns:
        Coefficient-wise combination of the sub-chain endpoints at state.t + tau.
    """
    weights = richardson_weights(scheme.order)
    if len(weights) == 1:
        return substep_chain(state, step_fn, ctx, tau, 1)
    endpoints = [(w, substep_chain(state, step_fn, ctx, tau, k)) for k, w in weights.items()]
    return endpoints[0][1].combine(endpoints, state.t + tau)


class TrajectorySink(Protocol):
    """Receiver of monitor rows and snapshots."""

    def on_row(self, row: SeriesRow) -> None:
        """Receive a monitor row."""

    def on_snapshot(self, state: AleState, index: int) -> None:
        """Receive a snapshot of the state after index macro steps."""


@dataclass
class Trajectory:
    """
    Summary of a run.

    Attributes:
        final_state: Last accepted state.
        exit_reason: "completed" or the kind of the terminal event.
        n_steps: Accepted macro steps.
        series: Monitor rows.
        events: Non-terminal events recorded during the run.
        message: Description of the terminal event, if any.
    """

    final_state: AleState
    exit_reason: str
    n_steps: int
    series: ScalarSeries
    events: list[SolverEvent] = field(default_factory=list)
    message: str = ""

    @property
    def completed(self) -> bool:
        """Whether the run reached t_end."""
        return self.exit_reason == "completed"


def run(
    initial: AleState,
    config: StepperConfig,
    ctx: SimulationContext,
    sinks: Sequence[TrajectorySink] = (),
    width_samples: int = 64,
    w_min: float = 1e-3,
) -> Trajectory:
    """
    Step from the initial state to t_end or a terminal event.

    Args:
        initial: Initial state.
        config: Stepping parameters.
        ctx: Simulation context.
        sinks: Receivers of rows and snapshots.
        width_samples: Samples of the ridge width.
        w_min: Ridge width ending the run.

    Returns:
        Trajectory summary; terminal events are reported as its exit reason.
    """
    step_fn = step_function_for(config.solver)
    series = ScalarSeries(ridge=is_ridge(initial.mesh))
    state = initial
    t_start = initial.t
    n_total = max(int(round((config.t_end - t_start) / config.tau)), 0)
    exit_reason, message, steps = "completed", "", 0

    def emit(row: SeriesRow) -> None:
        series.append(row)
        for sink in sinks:
            sink.on_row(row)

    emit(monitor(state, ctx, 0, width_samples))
    for sink in sinks:
        sink.on_snapshot(state, 0)

    logger.info(f"Run started: {config.solver}, {config.scheme}, tau={config.tau}, {n_total} steps")
    try:
        for n in range(1, n_total + 1):
            state = extrapolated_step(state, step_fn, ctx, config.tau, config.scheme)
            state = state.advanced(state.psi, state.h, t_start + n * config.tau)
            steps = n
            row = monitor(state, ctx, n, width_samples)
            emit(row)
            if n % config.snapshot_every == 0 or n == n_total:
                for sink in sinks:
                    sink.on_snapshot(state, n)
            if row.ridge_width is not None and row.ridge_width < w_min:
                raise RidgeCollapsed(row.ridge_width, w_min)
    except TerminalEvent as e:
        exit_reason, message = e.kind, str(e)
        logger.warning(f"Run stopped at t={state.t:.6g} after {steps} steps: {message}")
        for sink in sinks:
            sink.on_snapshot(state, steps)

    logger.info(f"Run finished: {exit_reason}, t={state.t:.6g}, {steps} steps, {len(ctx.events)} events")
    return Trajectory(
        final_state=state,
        exit_reason=exit_reason,
        n_steps=steps,
        series=series,
        events=list(ctx.events),
        message=message,
    )
