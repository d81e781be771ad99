"""Non-seasonal Holt-Winters (level + slope) exponential smoothing."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DataError, InsufficientDataError


def _check_param(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise ConfigurationError(f"{name} must lie in (0, 1), got {value}")


@dataclass(frozen=True)
class HoltWintersState:
    level: float
    slope: float
    alpha: float
    beta: float

    def __post_init__(self):
        _check_param("alpha", self.alpha)
        _check_param("beta", self.beta)


def hw_init(y1: float, y2: float, alpha: float, beta: float) -> HoltWintersState:
    """Start from level Y_2 and slope Y_2 - Y_1."""
    if not (math.isfinite(y1) and math.isfinite(y2)):
        raise DataError("initial observations must be finite")
    return HoltWintersState(float(y2), float(y2) - float(y1), alpha, beta)


def hw_update(state: HoltWintersState, y_next: float) -> HoltWintersState:
    if not math.isfinite(y_next):
        raise DataError(f"observation must be finite, got {y_next}")
    forecast = state.level + state.slope
    # error-correction form of a' = alpha y + (1 - alpha)(a + b), b' = beta(a' - a) + (1 - beta) b;
    # algebraically identical and exact whenever the forecast is already right
    level = forecast + state.alpha * (y_next - forecast)
    slope = state.slope + state.beta * (level - state.level - state.slope)
    return HoltWintersState(level, slope, state.alpha, state.beta)


def hw_forecast(state: HoltWintersState, h: int = 1) -> float:
    if h < 1:
        raise ConfigurationError(f"horizon must be at least 1, got {h}")
    return state.level + state.slope * h


def default_grid(grid_step: float) -> np.ndarray:
    if not 0.0 < grid_step < 1.0:
        raise ConfigurationError(f"grid_step must lie in (0, 1), got {grid_step}")
    n = int(math.floor(1.0 / grid_step + 1e-9))
    grid = np.round(np.arange(1, n + 1) * grid_step, 12)
    return grid[(grid > 0) & (grid < 1)]


def hw_sse_grid(series: np.ndarray, alphas: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """Sum of squared one-step errors for Y_3..Y_n at every (alpha, beta).

    ``series`` may be 1-D ``(n,)`` or 2-D ``(n, m)`` (m independent series);
    the result has shape ``(len(alphas), len(betas))`` or ``(m, len(alphas), len(betas))``.
    """
    y = np.asarray(series, dtype=float)
    squeeze = y.ndim == 1
    if squeeze:
        y = y[:, None]
    a = np.asarray(alphas, dtype=float)[None, :, None]
    b = np.asarray(betas, dtype=float)[None, None, :]
    shape = (y.shape[1], a.shape[1], b.shape[2])
    level = np.broadcast_to(y[1][:, None, None], shape).copy()
    slope = np.broadcast_to((y[1] - y[0])[:, None, None], shape).copy()
    sse = np.zeros(shape)
    for t in range(2, y.shape[0]):
        obs = y[t][:, None, None]
        forecast = level + slope
        err = obs - forecast
        sse += err * err
        new_level = forecast + a * err
        slope = slope + b * (new_level - level - slope)
        level = new_level
    return sse[0] if squeeze else sse


def hw_fit(series, grid_step: float = 0.05) -> tuple[float, float]:
    """Grid-search (alpha, beta) minimizing the squared one-step errors; ties go to smaller alpha, then beta."""
    y = np.asarray(series, dtype=float)
    if y.size < 3:
        raise InsufficientDataError("Holt-Winters fitting needs at least 3 observations")
    if not np.all(np.isfinite(y)):
        raise DataError("series must be finite")
    grid = default_grid(grid_step)
    sse = hw_sse_grid(y, grid, grid)
    # argmin over the row-major flattening returns the first minimum: smallest alpha, then beta
    i, j = np.unravel_index(int(np.argmin(sse)), sse.shape)
    return float(grid[i]), float(grid[j])


def hw_prediction_path(series, alpha, beta) -> np.ndarray:
    """One-step forecasts for every index (NaN for the first two).

    Element ``t`` predicts ``series[t]`` from ``series[:t]``; the final element
    forecasts the next value. ``alpha``/``beta`` may be scalars or per-column
    arrays when ``series`` is 2-D.
    """
    y = np.asarray(series, dtype=float)
    out = np.full((y.shape[0] + 1,) + y.shape[1:], np.nan)
    if y.shape[0] < 2:
        return out
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    level = y[1].copy()
    slope = y[1] - y[0]
    for t in range(2, y.shape[0]):
        forecast = level + slope
        out[t] = forecast
        new_level = forecast + a * (y[t] - forecast)
        slope = slope + b * (new_level - level - slope)
        level = new_level
    out[y.shape[0]] = level + slope
    return out
