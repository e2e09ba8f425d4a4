"""
Experimental orders of convergence.

Self-convergence studies in space and time compare every member of a sweep
with the finest member on the common reference mesh. The one-dimensional
degenerate elliptic problem -(mu u')' + u = f on (0, 1) with natural boundary
conditions serves as an oracle with known regularity.
"""

import asyncio
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import partial
from typing import Literal, TypeVar

import numpy as np
import scipy.sparse as sp

from src.core.presets import FEASIBILITY_G_X, feasibility_member
from src.core.run_config import RunConfig, with_resolution
from src.core.runtime import get_runtime_settings
from src.fem.assembly import BlockLayout, assemble
from src.fem.basis import SUPPORTED_DEGREES, gauss_interval, lagrange_1d
from src.fem.geometry import geometry_at_quadrature
from src.fem.solver import solve_direct
from src.fem.space import evaluate
from src.mesh.reference_mesh import ancestor_coordinates
from src.solvers.state import AleState
from src.stepping.simulation import build_context, build_initial_state, simulate
from src.stepping.stepper import Trajectory

logger = logging.getLogger(__name__)

T = TypeVar("T")

MACHINE_ERROR = 1e-13
GOLDEN_EXPONENT = 0.5 * (math.sqrt(5.0) - 1.0)

MuKind = Literal["degenerate", "regular"]


@dataclass(frozen=True)
class EocRow:
    """
    One member of a convergence study.

    Attributes:
        label: Resolution descriptor such as "level=3" or "tau=0.005".
        resolution: Mesh size or step size.
        error: Error against the reference (NaN for invalid members).
        eoc: log2 of the error ratio to the previous row (NaN if undefined).
        valid: False if the member ended early or its error is unusable.
        note: Reason for an invalid or undefined entry.
        max_error: Max-norm error, if computed.
    """

    label: str
    resolution: float
    error: float
    eoc: float = math.nan
    valid: bool = True
    note: str = ""
    max_error: float = math.nan


@dataclass
class EocTable:
    """
    Errors of a sweep ordered from coarse to fine.

    Attributes:
        quantity: What is measured, e.g. "L2(h)+L2(psi)".
        reference: Description of the reference solution.
        rows: Rows from coarse to fine.
    """

    quantity: str
    reference: str
    rows: list[EocRow] = field(default_factory=list)

    columns = ("label", "resolution", "error", "eoc", "max_error", "valid", "note")

    @classmethod
    def from_errors(
        cls,
        quantity: str,
        reference: str,
        labels: Sequence[str],
        resolutions: Sequence[float],
        errors: Sequence[float],
        max_errors: Sequence[float] | None = None,
        notes: Sequence[str] | None = None,
    ) -> "EocTable":
        """
        Build a table, computing the EOC of consecutive rows.

        The EOC is log(e_prev / e) / log(r_prev / r), which is log2 of the error
        ratio under bisection. It is undefined when either error is invalid or at
        machine precision.

        Args:
            quantity: What is measured.
            reference: Description of the reference solution.
            labels: Row labels.
            resolutions: Mesh or step sizes, decreasing.
            errors: Errors (NaN marks an invalid member).
            max_errors: Optional max-norm errors.
            notes: Optional notes; a non-empty note marks the row invalid.

        Returns:
            Table.
        """
        table = cls(quantity=quantity, reference=reference)
        previous: tuple[float, float] | None = None
        for i, (label, resolution, error) in enumerate(zip(labels, resolutions, errors, strict=True)):
            note = notes[i] if notes is not None else ""
            valid = not note and math.isfinite(error)
            eoc = math.nan
            if valid and error <= MACHINE_ERROR:
                note = "error at machine precision"
            elif valid and previous is not None and previous[1] > MACHINE_ERROR:
                eoc = math.log(previous[1] / error) / math.log(previous[0] / resolution)
            table.rows.append(
                EocRow(
                    label=label,
                    resolution=float(resolution),
                    error=float(error),
                    eoc=eoc,
                    valid=valid,
                    note=note,
                    max_error=float(max_errors[i]) if max_errors is not None else math.nan,
                )
            )
            previous = (resolution, error) if valid else None
        return table

    @property
    def eocs(self) -> np.ndarray:
        """EOC column."""
        return np.array([r.eoc for r in self.rows])

    @property
    def errors(self) -> np.ndarray:
        """Error column."""
        return np.array([r.error for r in self.rows])

    def records(self) -> list[tuple[str, float, float, float, float, bool, str]]:
        """Rows as tuples in column order."""
        return [(r.label, r.resolution, r.error, r.eoc, r.max_error, r.valid, r.note) for r in self.rows]

    def format(self) -> str:
        """Plain-text rendering for the terminal."""
        lines = [f"# {self.quantity} against {self.reference}", f"{'member':>16} {'error':>14} {'eoc':>8}"]
        for r in self.rows:
            eoc = "-" if math.isnan(r.eoc) else f"{r.eoc:8.3f}"
            flag = "" if r.valid and not r.note else f"  ({r.note or 'invalid'})"
            lines.append(f"{r.label:>16} {r.error:14.6e} {eoc:>8}{flag}")
        return "\n".join(lines)


# One-dimensional oracle


def _mu(kind: MuKind, x: np.ndarray) -> np.ndarray:
    return x**2 if kind == "degenerate" else 1.0 + x**2


def oracle_solution(kind: MuKind) -> tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]:
    """
    Exact solution and right-hand side of the one-dimensional oracle.

    For mu = x^2 and f = x the solution is u = x^c / c - x with c = (sqrt 5 - 1) / 2.
    For mu = 1 + x^2 the manufactured pair u = cos(pi x),
    f = 2 pi x sin(pi x) + ((1 + x^2) pi^2 + 1) cos(pi x) is used.

    Args:
        kind: "degenerate" or "regular".

    Returns:
        Tuple (u, f).
    """
    if kind == "degenerate":
        c = GOLDEN_EXPONENT
        return (lambda x: x**c / c - x), (lambda x: x)
    if kind == "regular":
        return (
            lambda x: np.cos(np.pi * x),
            lambda x: 2 * np.pi * x * np.sin(np.pi * x) + ((1 + x**2) * np.pi**2 + 1) * np.cos(np.pi * x),
        )
    raise ValueError(f"Unknown mu kind '{kind}'")


def solve_oracle(kind: MuKind, degree: int, n_cells: int) -> tuple[np.ndarray, float]:
    """
    Pk finite element solution of the oracle on a uniform mesh.

    Args:
        kind: "degenerate" or "regular".
        degree: Polynomial degree k.
        n_cells: Number of cells.

    Returns:
        Tuple (nodal coefficients, L2 error).
    """
    if degree not in SUPPORTED_DEGREES:
        raise ValueError(f"degree must be one of {SUPPORTED_DEGREES}, got {degree}")
    exact, rhs = oracle_solution(kind)
    h = 1.0 / n_cells
    n_dofs = degree * n_cells + 1
    dofs = degree * np.arange(n_cells)[:, None] + np.arange(degree + 1)
    left = h * np.arange(n_cells)[:, None]

    rule = gauss_interval(degree + 1)
    s = rule.points[:, 0]
    phi, dphi = lagrange_1d(degree, s)
    x = left + h * s
    w = h * rule.weights
    dphi = dphi / h
    local = np.einsum("eq,q,qa,qb->eab", _mu(kind, x), w, dphi, dphi) + np.einsum("q,qa,qb->ab", w, phi, phi)
    load = np.einsum("eq,q,qa->ea", rhs(x), w, phi)

    rows = np.broadcast_to(dofs[:, :, None], local.shape).ravel()
    cols = np.broadcast_to(dofs[:, None, :], local.shape).ravel()
    matrix = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n_dofs, n_dofs)).tocsr()
    vector = np.zeros(n_dofs)
    np.add.at(vector, dofs, load)
    u = solve_direct(assemble(BlockLayout(("u",), (n_dofs,)), {("u", "u"): matrix}, {"u": vector}))["u"]

    fine = gauss_interval(degree + 8)
    fs = fine.points[:, 0]
    fphi, _ = lagrange_1d(degree, fs)
    fx = left + h * fs
    diff = exact(fx) - u[dofs] @ fphi.T
    error = float(np.sqrt(np.sum(h * fine.weights * diff**2)))
    return u, error


def appendix_a_oracle(kind: MuKind, degree: int, refinements: Sequence[int]) -> EocTable:
    """
    L2 convergence of the one-dimensional oracle under uniform refinement.

    Args:
        kind: "degenerate" (mu = x^2) or "regular" (mu = 1 + x^2).
        degree: Polynomial degree k in {1, 2, 3}.
        refinements: Levels; level r has 2^r cells.

    Returns:
        Table of L2 errors against the exact solution.
    """
    labels, sizes, errors = [], [], []
    for level in refinements:
        n_cells = 2**level
        _, error = solve_oracle(kind, degree, n_cells)
        labels.append(f"N={n_cells}")
        sizes.append(1.0 / n_cells)
        errors.append(error)
    table = EocTable.from_errors(f"L2(u), mu={kind}, P{degree}", "exact solution", labels, sizes, errors)
    logger.info(f"Oracle {kind} P{degree}: final EOC {table.rows[-1].eoc:.3f}")
    return table


# Self-convergence of trajectories


@dataclass(frozen=True)
class StateDifference:
    """
    Difference of two states on the reference mesh of the finer one.

    Attributes:
        l2: L2 norm of the h difference plus L2 norm of the psi difference.
        max: Max over quadrature points of both differences.
    """

    l2: float
    max: float


def nested_difference(coarse: AleState, fine: AleState, quadrature_extra: int = 1) -> StateDifference:
    """
    Compare two states whose meshes belong to the same refinement hierarchy.

    The coarse fields are evaluated at the fine quadrature points through the
    parent-child relation of uniform refinement.

    Args:
        coarse: State on the coarser (or same) mesh.
        fine: State on the finer mesh.
        quadrature_extra: Extra Gauss points per direction.

    Returns:
        L2 and max-norm differences.
    """
    levels = fine.mesh.refinement_level - coarse.mesh.refinement_level
    if levels < 0:
        raise ValueError("the first state must live on the coarser mesh")
    geo = geometry_at_quadrature(fine.psi, "cells", quadrature_extra)
    cells, xi = ancestor_coordinates(geo.cells, geo.xi, levels)
    dh = geo.values(fine.h) - evaluate(coarse.h, cells, xi)
    dpsi = np.linalg.norm(geo.points - evaluate(coarse.psi, cells, xi), axis=-1)
    l2 = np.sqrt(np.sum(geo.ref_measure * dh**2)) + np.sqrt(np.sum(geo.ref_measure * dpsi**2))
    return StateDifference(l2=float(l2), max=float(max(np.abs(dh).max(), dpsi.max())))


async def gather_limited(jobs: Sequence[Callable[[], T]], threads: int | None = None) -> list[T]:
    """
    Run blocking jobs in worker threads, at most `threads` at a time.

    Args:
        jobs: Zero-argument callables.
        threads: Concurrency cap; THINFILM_THREADS when None.

    Returns:
        Results in job order.
    """
    limit = asyncio.Semaphore(threads if threads is not None else get_runtime_settings().threads)

    async def one(job: Callable[[], T]) -> T:
        async with limit:
            return await asyncio.to_thread(job)

    return list(await asyncio.gather(*(one(job) for job in jobs)))


def _table_from_members(
    quantity: str,
    reference: str,
    labels: list[str],
    resolutions: list[float],
    members: list[Trajectory],
    ref: Trajectory,
    quadrature_extra: int,
) -> EocTable:
    errors, max_errors, notes = [], [], []
    for member in members:
        if not ref.completed:
            errors.append(math.nan)
            max_errors.append(math.nan)
            notes.append(f"reference ended early: {ref.exit_reason}")
        elif not member.completed:
            errors.append(math.nan)
            max_errors.append(math.nan)
            notes.append(f"ended early: {member.exit_reason}")
        else:
            diff = nested_difference(member.final_state, ref.final_state, quadrature_extra)
            errors.append(diff.l2)
            max_errors.append(diff.max)
            notes.append("")
    return EocTable.from_errors(quantity, reference, labels, resolutions, errors, max_errors, notes)


async def eoc_space(config: RunConfig, refinements: Sequence[int], threads: int | None = None) -> EocTable:
    """
    Spatial self-convergence under uniform refinement.

    Args:
        config: Base configuration; only the refinement level changes.
        refinements: Increasing levels; the last one is the reference.
        threads: Concurrency cap.

    Returns:
        Table of the non-reference members.
    """
    levels = sorted(refinements)
    if len(levels) < 2:
        raise ValueError("eoc_space needs at least two refinement levels")
    configs = [with_resolution(config, refinement=level) for level in levels]
    results = await gather_limited([partial(simulate, c) for c in configs], threads)
    logger.info(f"Spatial sweep finished: {[r.exit_reason for r in results]}")
    return _table_from_members(
        "L2(h)+L2(psi)",
        f"level={levels[-1]}",
        [f"level={level}" for level in levels[:-1]],
        [2.0**-level for level in levels[:-1]],
        results[:-1],
        results[-1],
        config.quadrature_extra,
    )


async def eoc_time(config: RunConfig, taus: Sequence[float], threads: int | None = None) -> EocTable:
    """
    Temporal self-convergence under step-size bisection.

    Args:
        config: Base configuration; only tau changes.
        taus: Step sizes; the smallest one is the reference.
        threads: Concurrency cap.

    Returns:
        Table of the non-reference members.
    """
    steps = sorted(taus, reverse=True)
    if len(steps) < 2:
        raise ValueError("eoc_time needs at least two step sizes")
    configs = [with_resolution(config, tau=tau) for tau in steps]
    results = await gather_limited([partial(simulate, c) for c in configs], threads)
    logger.info(f"Temporal sweep finished: {[r.exit_reason for r in results]}")
    return _table_from_members(
        "L2(h)+L2(psi)",
        f"tau={steps[-1]:g}",
        [f"tau={tau:g}" for tau in steps[:-1]],
        list(steps[:-1]),
        results[:-1],
        results[-1],
        config.quadrature_extra,
    )


@dataclass(frozen=True)
class FeasibilityRow:
    """Minimal height of the stationary shape for one in-plane gravity."""

    g_x: float
    min_h: float

    @property
    def positive(self) -> bool:
        """Whether the shape is non-negative."""
        return self.min_h >= 0


def feasibility_member_min_h(config: RunConfig) -> float:
    """Minimal nodal height of the initial stationary shape of a configuration."""
    ctx = build_context(config)
    return float(build_initial_state(config, ctx).h.coeffs.min())


async def feasibility_sweep(
    g_x_values: Sequence[float] = FEASIBILITY_G_X,
    refinement: int = 3,
    degree: Literal[1, 2, 3] = 2,
    threads: int | None = None,
) -> list[FeasibilityRow]:
    """
    Stationary shapes on the unit disc for increasing in-plane gravity.

    Args:
        g_x_values: In-plane gravities.
        refinement: Disc refinement level.
        degree: Element degree.
        threads: Concurrency cap.

    Returns:
        One row per gravity.
    """
    configs = [feasibility_member(g, refinement, degree) for g in g_x_values]
    minima = await gather_limited([partial(feasibility_member_min_h, c) for c in configs], threads)
    return [FeasibilityRow(g_x=float(g), min_h=m) for g, m in zip(g_x_values, minima, strict=True)]
