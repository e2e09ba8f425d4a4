"""CSV time series, legacy VTK snapshots and run manifests."""

import csv
import json
import logging
import math
import pathlib
from collections.abc import Iterable, Sequence
from importlib import metadata
from types import TracebackType
from typing import IO, Any

import numpy as np

from src.core.exceptions import OutputError
from src.diagnostics.convergence import EocTable
from src.diagnostics.monitors import ScalarSeries, SeriesRow
from src.solvers.state import AleState, QuasistaticState

logger = logging.getLogger(__name__)

PACKAGE_NAME = "thinfilm-ale"
VTK_QUAD = 9


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        value = float(value)
        return "nan" if math.isnan(value) else f"{value:.11e}"
    return str(value)


def _open(path: pathlib.Path) -> IO[str]:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="", encoding="utf-8")
    except OSError as e:
        raise OutputError(str(path), e.strerror or str(e)) from e


def _write_rows(path: pathlib.Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with _open(path) as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(v) for v in row])


def write_csv(data: ScalarSeries | EocTable, path: str | pathlib.Path) -> pathlib.Path:
    """
    Write a monitor series or an EOC table as CSV.

    Floats are written in scientific notation with 12 significant digits and
    lines end with LF, so identical data gives identical bytes.

    Args:
        data: Series or table.
        path: Target file.

    Returns:
        The written path.

    Raises:
        OutputError: If the file cannot be written.
    """
    path = pathlib.Path(path)
    if isinstance(data, ScalarSeries):
        _write_rows(path, data.columns, data.records())
    else:
        _write_rows(path, EocTable.columns, data.records())
    logger.debug(f"Wrote {path}")
    return path


def _sub_quads(degree: int) -> np.ndarray:
    k = degree
    quads = []
    for j in range(k):
        for i in range(k):
            a = j * (k + 1) + i
            quads.append([a, a + 1, a + k + 2, a + k + 1])
    return np.array(quads)


def write_vtk(
    state: AleState,
    path: str | pathlib.Path,
    pi: np.ndarray | None = None,
    point_data: dict[str, np.ndarray] | None = None,
) -> pathlib.Path:
    """
    Write the deformed mesh as a legacy ASCII unstructured grid.

    Every degree-k cell is split into k^2 linear quadrilaterals through its
    Lagrange nodes. Point data are the scalars "h" and "pi" and the vector
    "displacement" psi - id.

    Args:
        state: State to write.
        path: Target file.
        pi: Nodal pressure; the volume multiplier of a quasistatic state, else zero.
        point_data: Additional nodal scalars.

    Returns:
        The written path.

    Raises:
        OutputError: If the file cannot be written.
    """
    path = pathlib.Path(path)
    vspace = state.psi.space
    points = state.psi.nodal
    displacement = points - vspace.nodes
    n_points = points.shape[0]
    if pi is None:
        pi = np.full(n_points, state.pi_hat if isinstance(state, QuasistaticState) else 0.0)
    scalars = {"h": state.h.coeffs, "pi": np.asarray(pi)} | dict(point_data or {})

    local = _sub_quads(vspace.degree)
    cells = vspace.dof_map[:, local].reshape(-1, 4)

    with _open(path) as fp:
        fp.write("# vtk DataFile Version 2.0\n")
        fp.write(f"thin film t={state.t:.11e}\n")
        fp.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fp.write(f"POINTS {n_points} double\n")
        for x, y in points:
            fp.write(f"{x:.11e} {y:.11e} 0\n")
        fp.write(f"CELLS {len(cells)} {5 * len(cells)}\n")
        for cell in cells:
            fp.write(f"4 {' '.join(str(int(v)) for v in cell)}\n")
        fp.write(f"CELL_TYPES {len(cells)}\n")
        fp.write(f"{VTK_QUAD}\n" * len(cells))
        fp.write(f"POINT_DATA {n_points}\n")
        for name, values in scalars.items():
            if len(values) != n_points:
                raise ValueError(f"point data '{name}' has {len(values)} values, expected {n_points}")
            fp.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in values:
                fp.write(f"{v:.11e}\n")
        fp.write("VECTORS displacement double\n")
        for dx, dy in displacement:
            fp.write(f"{dx:.11e} {dy:.11e} 0\n")
    logger.debug(f"Wrote snapshot {path}")
    return path


def code_version() -> str:
    """Installed package version, or "unknown" when running from a checkout."""
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        return "unknown"


def write_manifest(directory: str | pathlib.Path, config_json: str, summary: dict[str, Any]) -> pathlib.Path:
    """
    Write manifest.json next to the outputs of a run.

    Args:
        directory: Output directory.
        config_json: Resolved configuration as JSON.
        summary: Exit reason, step count, events and similar facts.

    Returns:
        The written path.
    """
    path = pathlib.Path(directory) / "manifest.json"
    document = {"version": code_version(), "config": json.loads(config_json)} | summary
    with _open(path) as fp:
        json.dump(document, fp, indent=2, sort_keys=True)
        fp.write("\n")
    return path


class CsvSeriesSink:
    """
    Stream monitor rows into a CSV file.

    Rows are flushed as they arrive so that a run ending on a terminal event
    leaves its partial series on disk.
    """

    def __init__(self, path: str | pathlib.Path, ridge: bool = False) -> None:
        self.path = pathlib.Path(path)
        self.columns = ScalarSeries(ridge=ridge).columns
        self._fp: IO[str] | None = None
        self._writer: Any = None

    def __enter__(self) -> "CsvSeriesSink":
        self._fp = _open(self.path)
        self._writer = csv.writer(self._fp, lineterminator="\n")
        self._writer.writerow(self.columns)
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        tb: TracebackType | None,
    ) -> None:
        if self._fp is not None:
            self._fp.close()
            self._fp = None

    def on_row(self, row: SeriesRow) -> None:
        """Append one row."""
        if self._fp is None:
            raise RuntimeError("CsvSeriesSink used outside of its context")
        values = [getattr(row, name) for name in self.columns]
        self._writer.writerow([_format(v) for v in values])
        self._fp.flush()

    def on_snapshot(self, state: AleState, index: int) -> None:
        """Snapshots are not part of the series."""


class VtkSnapshotSink:
    """Write every snapshot as snapshot_NNNNN.vtk."""

    def __init__(self, directory: str | pathlib.Path) -> None:
        self.directory = pathlib.Path(directory)
        self.written: list[pathlib.Path] = []

    def on_row(self, row: SeriesRow) -> None:
        """Rows are not part of the snapshots."""

    def on_snapshot(self, state: AleState, index: int) -> None:
        """Write one snapshot, overwriting an earlier file of the same index."""
        path = write_vtk(state, self.directory / f"snapshot_{index:05d}.vtk")
        if path not in self.written:
            self.written.append(path)
