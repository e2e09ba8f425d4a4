"""Asymptotic fits of ridge-width series near pinch-off."""

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import linregress

from src.core.exceptions import FitRejected

logger = logging.getLogger(__name__)

MIN_SAMPLES = 8

FitModel = Literal["power", "exponential"]


@dataclass(frozen=True)
class FitResult:
    """
    Outcome of a width fit.

    Attributes:
        model: "power" (w ~ (t_c - t)^p) or "exponential" (w ~ exp(rate t)).
        exponent: p in power mode, rate in exponential mode.
        r_squared: Coefficient of determination of the log-linear regression.
        prefactor: exp(intercept) of the regression.
        t_c: Estimated collapse time (power mode only).
        n_samples: Samples used.
    """

    model: FitModel
    exponent: float
    r_squared: float
    prefactor: float
    t_c: float | None
    n_samples: int


def _check_series(t: np.ndarray, w: np.ndarray) -> None:
    if t.shape != w.shape or t.ndim != 1:
        raise FitRejected(f"t and w must be 1D arrays of equal length, got {t.shape} and {w.shape}")
    if len(t) < MIN_SAMPLES:
        raise FitRejected(f"need at least {MIN_SAMPLES} samples, got {len(t)}")
    if np.any(np.diff(t) <= 0):
        raise FitRejected("times must increase strictly")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise FitRejected("widths must be positive and finite")
    tail = w[len(w) // 2 :]
    if np.any(np.diff(tail) > 0):
        raise FitRejected("width tail is not monotonically decreasing")


def _log_fit(x: np.ndarray, w: np.ndarray) -> tuple[float, float, float]:
    result = linregress(x, np.log(w))
    return float(result.slope), float(result.intercept), float(result.rvalue**2)


def fit_power_exponent(t: np.ndarray, w: np.ndarray, model: FitModel = "power") -> FitResult:
    """
    Fit w ~ (t_c - t)^p or w ~ exp(rate t) to a decreasing width series.

    In power mode t_c is searched in (t_last, t_last + duration] by a bounded
    scalar minimisation of 1 - R^2 of log w against log(t_c - t).

    Args:
        t: Sample times, strictly increasing.
        w: Widths, positive.
        model: Fit model.

    Returns:
        Fit result.

    Raises:
        FitRejected: With fewer than 8 samples or a non-monotone tail.
    """
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    _check_series(t, w)

    if model == "exponential":
        rate, intercept, r2 = _log_fit(t, w)
        logger.info(f"Exponential fit: rate={rate:.4f}, R^2={r2:.5f}")
        return FitResult("exponential", rate, r2, float(np.exp(intercept)), None, len(t))
    if model != "power":
        raise ValueError(f"Unknown fit model '{model}'")

    duration = t[-1] - t[0]
    lower = t[-1] + 1e-9 * duration

    def misfit(t_c: float) -> float:
        return 1.0 - _log_fit(np.log(t_c - t), w)[2]

    search = minimize_scalar(
        misfit,
        bounds=(lower, t[-1] + duration),
        method="bounded",
        options={"xatol": 1e-12 * duration},
    )
    t_c = float(search.x)
    slope, intercept, r2 = _log_fit(np.log(t_c - t), w)
    logger.info(f"Power fit: exponent={slope:.4f}, t_c={t_c:.6g}, R^2={r2:.5f}")
    return FitResult("power", slope, r2, float(np.exp(intercept)), t_c, len(t))


def fit_width_series(t: np.ndarray, w: np.ndarray, model: FitModel = "power", tail_fraction: float = 0.5) -> FitResult:
    """
    Fit the tail of a ridge-width series.

    Args:
        t: Times of the monitor rows.
        w: Ridge widths of the monitor rows.
        model: Fit model.
        tail_fraction: Fraction of the series, counted from the end, that is fitted.

    Returns:
        Fit result of the tail.

    Raises:
        FitRejected: If the tail is too short or not decreasing.
    """
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    n = max(MIN_SAMPLES, int(np.ceil(tail_fraction * len(t))))
    keep = w > 0
    return fit_power_exponent(t[keep][-n:], w[keep][-n:], model)
