"""ARIMA(p, d, q): ARMA on the d-times differenced series."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from ..errors import InsufficientDataError
from .arma import ArmaModel, arma_prediction_path, arma_predict_one_step


@dataclass(frozen=True)
class DifferencingOp:
    """``initial_values[i]`` is the first element of the i-times differenced series."""

    d: int
    initial_values: tuple[float, ...] = ()

    def invert(self, diffed) -> np.ndarray:
        x = np.asarray(diffed, dtype=float)
        for seed in reversed(self.initial_values):
            x = np.r_[seed, seed + np.cumsum(x)]
        return x


def apply_differencing(series, d: int) -> tuple[np.ndarray, DifferencingOp]:
    x = np.asarray(series, dtype=float)
    if d < 0:
        raise ValueError("differencing order must be nonnegative")
    if x.size <= d:
        raise InsufficientDataError(f"need more than {d} points to difference {d} times")
    seeds = []
    for _ in range(d):
        seeds.append(float(x[0]))
        x = np.diff(x)
    return x, DifferencingOp(d, tuple(seeds))


def undifference_forecast(history: np.ndarray, d: int, diff_forecast):
    """Map a forecast of the d-th difference at time n+1 back to the level X_{n+1}.

    X_{n+1} = D^d X_{n+1} - sum_{k=1}^d C(d, k) (-1)^k X_{n+1-k}
    """
    out = np.asarray(diff_forecast, dtype=float).copy()
    for k in range(1, d + 1):
        out -= comb(d, k) * (-1) ** k * history[-k]
    return out


def arima_predict_one_step(model: ArmaModel, diff: DifferencingOp | int, history) -> float:
    d = diff.d if isinstance(diff, DifferencingOp) else int(diff)
    x = np.asarray(history, dtype=float)
    if x.size <= d:
        raise InsufficientDataError(f"history must be longer than d={d}")
    diffed, _ = apply_differencing(x, d)
    return float(undifference_forecast(x, d, arma_predict_one_step(model, diffed)))


def arima_prediction_path(model: ArmaModel, d: int, series) -> np.ndarray:
    """One-step ARIMA forecasts; element ``t`` predicts ``series[t]`` (NaN for t <= d)."""
    x = np.asarray(series, dtype=float)
    out = np.full(x.size + 1, np.nan)
    if x.size <= d:
        return out
    diffed, _ = apply_differencing(x, d)
    diff_path = arma_prediction_path(model, diffed)  # diff_path[i] predicts diffed[i] = D^d x[i + d]
    for t in range(d + 1, x.size + 1):
        out[t] = undifference_forecast(x[:t], d, diff_path[t - d])
    return out
