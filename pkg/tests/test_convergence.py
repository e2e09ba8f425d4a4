import math
import threading
import time
from unittest.mock import patch

import numpy as np
import pytest

from src.core.presets import convergence_droplet
from src.diagnostics.convergence import (
    GOLDEN_EXPONENT,
    EocTable,
    appendix_a_oracle,
    eoc_space,
    eoc_time,
    gather_limited,
    nested_difference,
    oracle_solution,
    solve_oracle,
)
from src.diagnostics.monitors import ScalarSeries
from src.mesh.builders import build_ridge_mesh
from src.solvers.state import AleState
from src.stepping.stepper import Trajectory


def _ridge_state(refinement: int) -> AleState:
    _, psi = build_ridge_mesh(1.0, 2.0, 0.0, refinement, 2)
    h = psi.space.scalar().interpolate(lambda p: p[:, 0] * (1 - p[:, 0]) * (1 + p[:, 1]))
    return AleState(psi=psi, h=h, t=0.1, vol0=1.0)


def _trajectory(state: AleState, exit_reason: str = "completed") -> Trajectory:
    return Trajectory(final_state=state, exit_reason=exit_reason, n_steps=10, series=ScalarSeries())


def test_eoc_of_halving_errors():
    """Verify errors divided by 4 per bisection give EOC 2."""
    table = EocTable.from_errors("e", "exact", ["a", "b", "c"], [1.0, 0.5, 0.25], [1.0, 0.25, 0.0625])
    assert math.isnan(table.eocs[0])
    assert np.allclose(table.eocs[1:], 2.0)
    assert all(r.valid for r in table.rows)
    assert table.records()[1][:4] == ("b", 0.5, 0.25, pytest.approx(2.0))


def test_machine_precision_errors_have_no_eoc():
    """Verify an error at machine precision stays valid with an undefined EOC."""
    table = EocTable.from_errors("e", "exact", ["a", "b"], [1.0, 0.5], [1e-3, 1e-15])
    row = table.rows[1]
    assert row.valid
    assert math.isnan(row.eoc)
    assert row.note == "error at machine precision"


def test_noted_rows_are_invalid_and_break_the_eoc_chain():
    """Verify a noted member is invalid and its successor has no EOC."""
    table = EocTable.from_errors(
        "e",
        "exact",
        ["a", "b", "c"],
        [1.0, 0.5, 0.25],
        [1.0, math.nan, 0.0625],
        notes=["", "ended early: mesh_tangled", ""],
    )
    assert [r.valid for r in table.rows] == [True, False, True]
    assert math.isnan(table.rows[2].eoc)
    assert "(ended early: mesh_tangled)" in table.format()


def test_degenerate_oracle_solves_the_equation():
    """Verify u = x^c / c - x satisfies the boundary value u(1) = c."""
    u, f = oracle_solution("degenerate")
    assert u(np.array([1.0]))[0] == pytest.approx(GOLDEN_EXPONENT)
    assert f(np.array([0.5]))[0] == 0.5
    with pytest.raises(ValueError):
        oracle_solution("constant")


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_regular_oracle_converges_optimally(degree):
    """Verify mu = 1 + x^2 gives L2 order k + 1."""
    table = appendix_a_oracle("regular", degree, [2, 3, 4, 5])
    assert [r.label for r in table.rows] == ["N=4", "N=8", "N=16", "N=32"]
    assert table.rows[-1].eoc == pytest.approx(degree + 1, abs=0.3)


def test_degenerate_oracle_converges_at_first_order():
    """Verify mu = x^2 limits the L2 order to about one for P2."""
    table = appendix_a_oracle("degenerate", 2, [3, 4, 5, 6, 7])
    assert table.rows[-1].eoc == pytest.approx(1.0, abs=0.25)
    assert np.all(np.diff(table.errors) < 0)


def test_oracle_rejects_unsupported_degree():
    """Verify only degrees 1 to 3 are available."""
    with pytest.raises(ValueError):
        solve_oracle("regular", 4, 8)


def test_nested_difference_of_identical_states_is_zero(cap_state):
    """Verify a state compared with itself has zero difference."""
    diff = nested_difference(cap_state, cap_state)
    assert diff.l2 == pytest.approx(0.0, abs=1e-14)
    assert diff.max == pytest.approx(0.0, abs=1e-14)


def test_nested_difference_across_levels():
    """Verify a polynomial state is reproduced on the refined mesh."""
    coarse, fine = _ridge_state(0), _ridge_state(1)
    diff = nested_difference(coarse, fine)
    assert diff.l2 == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        nested_difference(fine, coarse)


@pytest.mark.asyncio
async def test_gather_limited_keeps_order_and_cap():
    """Verify results come back in job order and at most `threads` jobs run at once."""
    lock = threading.Lock()
    running = {"now": 0, "peak": 0}

    def job(i: int) -> int:
        with lock:
            running["now"] += 1
            running["peak"] = max(running["peak"], running["now"])
        time.sleep(0.01)
        with lock:
            running["now"] -= 1
        return i

    results = await gather_limited([lambda i=i: job(i) for i in range(5)], threads=1)
    assert results == [0, 1, 2, 3, 4]
    assert running["peak"] == 1


@pytest.mark.asyncio
async def test_eoc_time_of_identical_members(cap_state):
    """Verify identical final states give machine-precision rows labelled by tau."""
    with patch("src.diagnostics.convergence.simulate", return_value=_trajectory(cap_state)) as mock_simulate:
        table = await eoc_time(convergence_droplet(), [0.05, 0.1, 0.025], threads=1)
    assert mock_simulate.call_count == 3
    assert [c.args[0].stepper.tau for c in mock_simulate.call_args_list] == [0.1, 0.05, 0.025]
    assert [r.label for r in table.rows] == ["tau=0.1", "tau=0.05"]
    assert table.reference == "tau=0.025"
    assert all(r.valid and r.note == "error at machine precision" for r in table.rows)


@pytest.mark.asyncio
async def test_eoc_time_marks_members_that_ended_early(cap_state):
    """Verify a member stopped by a terminal event is reported as invalid."""

    def fake_simulate(config):
        reason = "mesh_tangled" if config.stepper.tau == 0.1 else "completed"
        return _trajectory(cap_state, reason)

    with patch("src.diagnostics.convergence.simulate", side_effect=fake_simulate):
        table = await eoc_time(convergence_droplet(), [0.1, 0.05, 0.025], threads=1)
    assert not table.rows[0].valid
    assert table.rows[0].note == "ended early: mesh_tangled"
    assert table.rows[1].valid


@pytest.mark.asyncio
async def test_eoc_space_with_failed_reference(cap_state):
    """Verify every member is invalid when the reference run ended early."""

    def fake_simulate(config):
        reason = "feasibility" if config.geometry.refinement == 3 else "completed"
        return _trajectory(cap_state, reason)

    with patch("src.diagnostics.convergence.simulate", side_effect=fake_simulate):
        table = await eoc_space(convergence_droplet(), [2, 1, 3], threads=1)
    assert [r.label for r in table.rows] == ["level=1", "level=2"]
    assert [r.resolution for r in table.rows] == [0.5, 0.25]
    assert all(r.note == "reference ended early: feasibility" for r in table.rows)


@pytest.mark.asyncio
async def test_sweeps_need_two_members():
    """Verify single-member sweeps are rejected."""
    with pytest.raises(ValueError):
        await eoc_time(convergence_droplet(), [0.1])
    with pytest.raises(ValueError):
        await eoc_space(convergence_droplet(), [2])

