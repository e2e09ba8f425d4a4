import numpy as np
import pytest

from src.core.exceptions import FitRejected
from src.diagnostics.fitting import MIN_SAMPLES, fit_power_exponent, fit_width_series


def test_power_fit_recovers_exponent_and_collapse_time():
    """Verify w = 2 (1 - t)^1.5 gives p = 1.5 and t_c = 1."""
    t = np.linspace(0.0, 0.9, 20)
    result = fit_power_exponent(t, 2.0 * (1.0 - t) ** 1.5)
    assert result.model == "power"
    assert result.exponent == pytest.approx(1.5, abs=0.02)
    assert result.t_c == pytest.approx(1.0, abs=0.01)
    assert result.r_squared > 0.999
    assert result.n_samples == 20


def test_exponential_fit_recovers_rate():
    """Verify w = 3 exp(-2 t) gives rate -2 and prefactor 3."""
    t = np.linspace(0.0, 2.0, 12)
    result = fit_power_exponent(t, 3.0 * np.exp(-2.0 * t), model="exponential")
    assert result.exponent == pytest.approx(-2.0)
    assert result.prefactor == pytest.approx(3.0)
    assert result.t_c is None
    assert result.r_squared == pytest.approx(1.0)


@pytest.mark.parametrize(
    ("t", "w"),
    [
        (np.arange(MIN_SAMPLES - 1.0), np.linspace(1.0, 0.5, MIN_SAMPLES - 1)),
        (np.arange(10.0), np.r_[np.linspace(1.0, 0.5, 9), 0.6]),
        (np.arange(10.0), np.r_[np.linspace(1.0, 0.1, 9), 0.0]),
        (np.r_[0.0, np.arange(9.0)], np.linspace(1.0, 0.1, 10)),
    ],
    ids=["too-short", "increasing-tail", "zero-width", "repeated-time"],
)
def test_unusable_series_are_rejected(t, w):
    """Verify short, non-monotone or non-positive series raise FitRejected."""
    with pytest.raises(FitRejected):
        fit_power_exponent(t, w)


def test_unknown_fit_model():
    """Verify an unknown model name is a ValueError."""
    t = np.linspace(0.0, 1.0, 10)
    with pytest.raises(ValueError):
        fit_power_exponent(t, np.exp(-t), model="logistic")


def test_width_series_fit_uses_the_decreasing_tail():
    """Verify only the tail is fitted and a final zero width is dropped."""
    t = np.linspace(0.0, 3.9, 40)
    w = np.where(t < 1.85, 0.1 + 0.01 * t, np.exp(-t))
    w[-1] = 0.0
    result = fit_width_series(t, w, model="exponential")
    assert result.exponent == pytest.approx(-1.0)
    assert result.n_samples == 20
