import logging
from dataclasses import astuple, dataclass, field, fields

import numpy as np

from src.fem.geometry import geometry_at_quadrature
from src.fem.space import evaluate
from src.mesh.reference_mesh import FacetTag, ReferenceMesh, facet_points
from src.physics.energy import energy
from src.solvers.state import AleState, SimulationContext

logger = logging.getLogger(__name__)

RIDGE_COLUMNS = ("ridge_width", "pinch_y")


@dataclass(frozen=True)
class SeriesRow:
    """Scalar monitors of one state."""

    step: int
    t: float
    energy: float
    volume: float
    min_h: float
    max_h: float
    contact_length: float
    centroid_x: float
    centroid_y: float
    ridge_width: float | None = None
    pinch_y: float | None = None


@dataclass
class ScalarSeries:
    """
    Time series of monitors with strictly increasing time.

    Attributes:
        rows: Recorded rows.
        ridge: Whether the ridge columns are present.
    """

    rows: list[SeriesRow] = field(default_factory=list)
    ridge: bool = False

    @property
    def columns(self) -> tuple[str, ...]:
        """Column names, without the ridge columns for droplet runs."""
        names = tuple(f.name for f in fields(SeriesRow))
        return names if self.ridge else tuple(n for n in names if n not in RIDGE_COLUMNS)

    def append(self, row: SeriesRow) -> None:
        """
        Append a row.

        Raises:
            ValueError: If the time does not increase.
        """
        if self.rows and row.t <= self.rows[-1].t:
            raise ValueError(f"Series time must increase: {row.t} after {self.rows[-1].t}")
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        """Values of one column as floats (NaN where absent)."""
        return np.array([np.nan if (v := getattr(r, name)) is None else v for r in self.rows], dtype=float)

    def records(self) -> list[tuple[float | int | None, ...]]:
        """Rows restricted to the series columns."""
        n = len(self.columns)
        return [astuple(r)[:n] for r in self.rows]


@dataclass(frozen=True)
class RidgeWidth:
    """
    Width of a ridge.

    Attributes:
        width: Minimal horizontal gap between the free boundaries (0 if crossed).
        pinch_y: Deformed y-position of the minimal gap.
        gaps: Gap per sample.
        crossed: Whether the curves crossed.
    """

    width: float
    pinch_y: float
    gaps: np.ndarray
    crossed: bool


def is_ridge(mesh: ReferenceMesh) -> bool:
    """Whether a mesh has the ridge topology (Sliding facets present)."""
    return FacetTag.SLIDING in mesh.tags


def _sample_curve(
    state: AleState, facets: np.ndarray, ref_start: np.ndarray, ref_end: np.ndarray, ys: np.ndarray
) -> np.ndarray:
    lo = np.minimum(ref_start[:, 1], ref_end[:, 1])
    hi = np.maximum(ref_start[:, 1], ref_end[:, 1])
    points = np.empty((len(ys), 2))
    for n, y in enumerate(ys):
        idx = int(np.flatnonzero((lo <= y + 1e-12) & (y - 1e-12 <= hi))[0])
        s = (y - ref_start[idx, 1]) / (ref_end[idx, 1] - ref_start[idx, 1])
        xi = facet_points(facets[idx, 1], np.clip(s, 0.0, 1.0))
        points[n] = evaluate(state.psi, np.array([facets[idx, 0]]), xi[None, :])[0, 0]
    return points


def ridge_width(state: AleState, n_samples: int = 64, ctx: SimulationContext | None = None) -> RidgeWidth:
    """
    Minimal horizontal gap between the two deformed free boundaries.

    The gap is sampled at n_samples equispaced reference heights by evaluating
    the map on the straight reference facets.

    Args:
        state: Ridge state.
        n_samples: Number of reference heights.
        ctx: Context receiving a curves-crossed event.

    Returns:
        Ridge width report.

    Raises:
        ValueError: If the mesh has no ridge topology.
    """
    mesh = state.mesh
    if not is_ridge(mesh):
        raise ValueError("ridge_width needs a mesh with Sliding facets")
    facets = mesh.facets_with_tag(FacetTag.FREE_BOUNDARY)
    dofs = state.psi.space.facet_dofs(FacetTag.FREE_BOUNDARY)
    start = state.psi.space.nodes[dofs[:, 0]]
    end = state.psi.space.nodes[dofs[:, -1]]
    x_ref = 0.5 * (start[:, 0] + end[:, 0])
    left = x_ref < 0.5 * (x_ref.min() + x_ref.max())
    ys = np.linspace(min(start[:, 1].min(), end[:, 1].min()), max(start[:, 1].max(), end[:, 1].max()), n_samples)

    p_left = _sample_curve(state, facets[left], start[left], end[left], ys)
    p_right = _sample_curve(state, facets[~left], start[~left], end[~left], ys)
    gaps = p_right[:, 0] - p_left[:, 0]
    i = int(np.argmin(gaps))
    pinch_y = float(0.5 * (p_left[i, 1] + p_right[i, 1]))
    crossed = bool(gaps[i] < 0)
    if crossed:
        message = f"free boundaries crossed near y={pinch_y:.4g}"
        if ctx is not None:
            ctx.record("curves_crossed", message, state.t)
        else:
            logger.warning(message)
    return RidgeWidth(width=max(float(gaps[i]), 0.0), pinch_y=pinch_y, gaps=gaps, crossed=crossed)


def monitor(
    state: AleState, ctx: SimulationContext, step: int, width_samples: int = 64
) -> SeriesRow:
    """
    Scalar monitors of a state.

    Args:
        state: State to monitor.
        ctx: Simulation context.
        step: Step index.
        width_samples: Samples of the ridge width.

    Returns:
        Series row.
    """
    report = energy(state, ctx.params, ctx.quadrature_extra)
    geo = geometry_at_quadrature(state.psi, "cells", ctx.quadrature_extra)
    h = geo.values(state.h)
    mass = np.sum(geo.measure * h)
    moment = np.einsum("eq,eq,eqi->i", geo.measure, h, geo.points)
    centroid = moment / mass if mass != 0 else np.full(2, np.nan)

    width = pinch = None
    if is_ridge(state.mesh):
        ridge = ridge_width(state, width_samples, ctx)
        width, pinch = ridge.width, ridge.pinch_y

    return SeriesRow(
        step=step,
        t=state.t,
        energy=report.total,
        volume=report.volume,
        min_h=float(state.h.coeffs.min()),
        max_h=float(state.h.coeffs.max()),
        contact_length=report.contact_length,
        centroid_x=float(centroid[0]),
        centroid_y=float(centroid[1]),
        ridge_width=width,
        pinch_y=pinch,
    )
