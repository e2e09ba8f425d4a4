import json

import numpy as np
import pytest

from src.core.exceptions import OutputError
from src.core.presets import convergence_droplet
from src.diagnostics.convergence import EocTable
from src.diagnostics.monitors import ScalarSeries, SeriesRow
from src.output.writers import (
    CsvSeriesSink,
    VtkSnapshotSink,
    _format,
    write_csv,
    write_manifest,
    write_vtk,
)
from src.solvers.state import QuasistaticState

ROW = SeriesRow(0, 0.0, 1.5, 1.0, 0.0, 0.6, 6.28, 0.0, 0.0)


@pytest.mark.parametrize(
    ("value", "expected"),
    [(0.1, "1.00000000000e-01"), (float("nan"), "nan"), (None, ""), (True, "1"), (np.int64(3), "3"), ("x", "x")],
)
def test_value_formatting(value, expected):
    """Verify floats get 12 significant digits and other values a plain rendering."""
    assert _format(value) == expected


def test_empty_series_writes_header_only(tmp_path):
    """Verify an empty series gives a single header line."""
    path = write_csv(ScalarSeries(), tmp_path / "series.csv")
    assert path.read_text() == "step,t,energy,volume,min_h,max_h,contact_length,centroid_x,centroid_y\n"


def test_ridge_series_has_width_columns(tmp_path):
    """Verify ridge series carry the width and pinch columns."""
    series = ScalarSeries(ridge=True)
    series.append(SeriesRow(0, 0.0, 1.0, 1.0, 0.0, 1.0, 8.0, 0.5, 2.0, 0.9, 2.0))
    lines = write_csv(series, tmp_path / "ridge.csv").read_text().splitlines()
    assert lines[0].endswith("ridge_width,pinch_y")
    assert lines[1].split(",")[-2:] == ["9.00000000000e-01", "2.00000000000e+00"]


def test_eoc_table_csv(tmp_path):
    """Verify EOC tables are written with their notes and validity flags."""
    table = EocTable.from_errors("e", "exact", ["N=4", "N=8"], [0.25, 0.125], [1e-2, 2.5e-3])
    lines = write_csv(table, tmp_path / "eoc.csv").read_text().splitlines()
    assert lines[0] == "label,resolution,error,eoc,max_error,valid,note"
    assert lines[1] == "N=4,2.50000000000e-01,1.00000000000e-02,nan,nan,1,"
    assert lines[2].split(",")[3] == "2.00000000000e+00"


def test_unwritable_path_raises_output_error(tmp_path):
    """Verify a path below a regular file cannot be written."""
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    with pytest.raises(OutputError) as exc:
        write_csv(ScalarSeries(), blocker / "series.csv")
    assert "series.csv" in exc.value.path


def test_vtk_snapshot_of_the_identity_map(tmp_path, cap_state):
    """Verify points, sub-quadrilaterals and zero displacement of an undeformed state."""
    path = write_vtk(cap_state, tmp_path / "cap.vtk")
    text = path.read_text().splitlines()
    n_points = cap_state.space.n_dofs
    n_quads = cap_state.mesh.n_cells * cap_state.degree**2
    assert text[0] == "# vtk DataFile Version 2.0"
    assert f"POINTS {n_points} double" in text
    assert f"CELLS {n_quads} {5 * n_quads}" in text
    assert f"POINT_DATA {n_points}" in text
    start = text.index("VECTORS displacement double") + 1
    displacement = np.array([line.split() for line in text[start : start + n_points]], dtype=float)
    assert np.allclose(displacement, 0.0)
    pi_start = text.index("SCALARS pi double 1") + 2
    assert all(float(v) == 0.0 for v in text[pi_start : pi_start + n_points])


def test_vtk_uses_the_volume_multiplier_of_quasistatic_states(tmp_path, cap_state):
    """Verify quasistatic snapshots write pi_hat as the pressure."""
    state = QuasistaticState(psi=cap_state.psi, h=cap_state.h, t=0.0, vol0=1.0, pi_hat=2.5)
    text = write_vtk(state, tmp_path / "q.vtk").read_text().splitlines()
    pi_start = text.index("SCALARS pi double 1") + 2
    assert float(text[pi_start]) == 2.5


def test_vtk_rejects_mismatched_point_data(tmp_path, cap_state):
    """Verify extra point data must have one value per node."""
    with pytest.raises(ValueError):
        write_vtk(cap_state, tmp_path / "bad.vtk", point_data={"extra": np.zeros(3)})


def test_manifest_contents(tmp_path):
    """Verify the manifest holds version, resolved config and run summary."""
    config = convergence_droplet()
    path = write_manifest(tmp_path, config.to_json(), {"exit_reason": "completed", "n_steps": 10})
    document = json.loads(path.read_text())
    assert set(document) == {"version", "config", "exit_reason", "n_steps"}
    assert document["config"]["stepper"]["tau"] == config.stepper.tau
    assert path.name == "manifest.json"


def test_csv_sink_streams_rows(tmp_path):
    """Verify rows are on disk while the sink is still open."""
    path = tmp_path / "out" / "series.csv"
    with CsvSeriesSink(path) as sink:
        sink.on_row(ROW)
        assert len(path.read_text().splitlines()) == 2
    assert path.read_text().splitlines()[1].startswith("0,0.00000000000e+00,1.50000000000e+00")


def test_csv_sink_needs_its_context(tmp_path):
    """Verify rows cannot be written before the file is opened."""
    with pytest.raises(RuntimeError):
        CsvSeriesSink(tmp_path / "series.csv").on_row(ROW)


def test_vtk_sink_names_snapshots_by_index(tmp_path, cap_state):
    """Verify snapshot files are numbered and a repeated index is overwritten."""
    sink = VtkSnapshotSink(tmp_path)
    sink.on_snapshot(cap_state, 0)
    sink.on_snapshot(cap_state, 12)
    sink.on_snapshot(cap_state, 12)
    assert [p.name for p in sink.written] == ["snapshot_00000.vtk", "snapshot_00012.vtk"]
    assert (tmp_path / "snapshot_00012.vtk").exists()
