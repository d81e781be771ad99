"""MSE metric, held-out evaluation, per-OD linear baselines and the experiment sweeps."""

from __future__ import annotations

import io
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .core import (
    Normalizer,
    TrafficSeries,
    WindowedDataset,
    build_windows,
    evaluation_windows,
    fit_normalizer,
    split_chronological,
)
from .errors import ConfigurationError, DimensionError, MetricError, TmForecastError
from .linear import (
    arar_fit,
    arar_prediction_path,
    arima_prediction_path,
    arma_prediction_path,
    fit_arma,
    hw_prediction_path,
    hw_sse_grid,
)
from .linear.arima import apply_differencing
from .linear.holtwinters import default_grid
from .neural import MlpBaseline, Network, TrainConfig, mlp_train, train

log = logging.getLogger(__name__)

CSV_HEADER = "axis,value,mse_normalized,mse_raw,seconds"


def mse(observed, predicted) -> float:
    y = np.asarray(observed, dtype=np.float64).reshape(-1)
    yhat = np.asarray(predicted, dtype=np.float64).reshape(-1)
    if y.size == 0 or y.size != yhat.size:
        raise MetricError(f"mse needs equal nonzero lengths, got {y.size} and {yhat.size}")
    d = y - yhat
    return float(np.mean(d * d))


@dataclass(frozen=True)
class EvalReport:
    method_name: str
    overall_mse: float
    per_od_mse: np.ndarray
    n_predictions: int
    overall_mse_raw: float = float("nan")


def naive_last_value(window) -> np.ndarray:
    return np.asarray(window, dtype=np.float64)[-1].copy()


def _as_predictor(predictor) -> Callable[[np.ndarray, int], np.ndarray]:
    if hasattr(predictor, "predict_at"):
        return predictor.predict_at
    if hasattr(predictor, "predict"):
        return lambda window, t: predictor.predict(window)
    return lambda window, t: predictor(window)


def evaluate(predictor, test: WindowedDataset, normalizer: Normalizer, name: str = "model") -> EvalReport:
    """One-step predictions for every sample of a raw-scale ``test`` set, scored in normalized space.

    ``predictor`` is a model with ``predict(window)``, an object with
    ``predict_at(window, target_timestamp)``, or a plain ``window -> vector``
    callable. It always receives normalized windows.
    """
    if len(test) == 0:
        raise MetricError("test set is empty")
    call = _as_predictor(predictor)
    inputs = normalizer.normalize(test.inputs)
    targets = normalizer.normalize(test.targets)
    preds = np.empty_like(targets)
    for k in range(len(test)):
        yhat = np.asarray(call(inputs[k], int(test.target_timestamps[k])), dtype=np.float64)
        if yhat.shape != targets[k].shape:
            raise DimensionError(f"prediction shape {yhat.shape} != target shape {targets[k].shape}")
        preds[k] = yhat
    sq = (targets - preds) ** 2
    per_od = sq.mean(axis=0)
    overall = float(sq.mean())
    return EvalReport(name, overall, per_od, len(test), overall * normalizer.scale**2)


class PathPredictor:
    """Serves precomputed one-step forecasts keyed by target timestamp.

    ``path[t - start]`` is the forecast of slot ``t`` made from slots before
    it. Entries the model could not produce (too little history) fall back to
    the last value of the window.
    """

    def __init__(self, path: np.ndarray, start: int = 0):
        self.path = path
        self.start = start

    def predict_at(self, window, t: int) -> np.ndarray:
        row = self.path[t - self.start]
        return np.where(np.isfinite(row), row, np.asarray(window)[-1])


@dataclass
class PerOdBaseline:
    """A univariate predictor fitted independently to every OD flow.

    Flows whose fit fails (constant or all-zero flows make the estimators
    singular) use the training mean; for differenced models the fallback is
    "no change", i.e. the last value.
    """

    kind: str  # "arma" | "arima" | "arar" | "holt_winters"
    order: tuple[int, ...] = ()
    grid_step: float = 0.05
    models: list = field(default_factory=list)
    fallbacks: int = 0

    def fit(self, train_values: np.ndarray) -> "PerOdBaseline":
        y = np.asarray(train_values, dtype=np.float64)
        self.models, self.fallbacks = [], 0
        if self.kind == "holt_winters":
            grid = default_grid(self.grid_step)
            sse = hw_sse_grid(y, grid, grid).reshape(y.shape[1], -1)
            best = np.argmin(sse, axis=1)
            ia, ib = np.unravel_index(best, (grid.size, grid.size))
            self.models = list(zip(grid[ia], grid[ib]))
            return self
        for k in range(y.shape[1]):
            col = y[:, k]
            try:
                if self.kind == "arma":
                    model = fit_arma(col, *(self.order or (1, 0)))
                elif self.kind == "arima":
                    p, d, q = self.order or (1, 1, 0)
                    model = fit_arma(apply_differencing(col, d)[0], p, q)
                elif self.kind == "arar":
                    model = arar_fit(col)
                else:
                    raise ConfigurationError(f"unknown baseline kind {self.kind!r}")
            except (TmForecastError, np.linalg.LinAlgError) as exc:
                if isinstance(exc, ConfigurationError):
                    raise
                self.fallbacks += 1
                model = ("mean", float(np.mean(col)))
            self.models.append(model)
        if self.fallbacks:
            log.info("%s: %d of %d flows used the fallback predictor", self.kind, self.fallbacks, y.shape[1])
        return self

    def prediction_path(self, values: np.ndarray) -> np.ndarray:
        """``(T + 1, K)`` one-step forecasts over a full series (row t predicts slot t)."""
        x = np.asarray(values, dtype=np.float64)
        if self.kind == "holt_winters":
            alphas = np.array([a for a, _ in self.models])
            betas = np.array([b for _, b in self.models])
            return hw_prediction_path(x, alphas, betas)
        out = np.full((x.shape[0] + 1, x.shape[1]), np.nan)
        d = (self.order or (1, 1, 0))[1] if self.kind == "arima" else 0
        for k, model in enumerate(self.models):
            col = x[:, k]
            if isinstance(model, tuple):
                if d:
                    out[1:, k] = col  # no-change forecast
                else:
                    out[:, k] = model[1]
            elif self.kind == "arma":
                out[:, k] = arma_prediction_path(model, col)
            elif self.kind == "arima":
                out[:, k] = arima_prediction_path(model, d, col)
            else:
                out[:, k] = arar_prediction_path(model, col)
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run needs besides the data.

    ``train_len=None`` keeps the 263/309 training fraction of the reference
    protocol.
    """

    window: int = 10
    train_len: int | None = None
    hidden_sizes: tuple[int, ...] = (100,)
    train: TrainConfig = TrainConfig()
    mlp_hidden: int = 100
    arma_order: tuple[int, int] = (1, 0)
    arima_order: tuple[int, int, int] = (1, 1, 0)
    hw_grid_step: float = 0.05
    output_peephole: str = "current"

    def resolved_train_len(self, n_slots: int) -> int:
        if self.train_len is not None:
            return self.train_len
        return max(1, min(n_slots - 1, round(n_slots * 263 / 309)))


@dataclass
class Split:
    """Normalized training windows plus raw evaluation windows for one series."""

    normalizer: Normalizer
    train: WindowedDataset
    test: WindowedDataset
    train_len: int
    series: TrafficSeries


def prepare_split(series: TrafficSeries, window: int, train_len: int) -> Split:
    train_series, _ = split_chronological(series, train_len)
    normalizer = fit_normalizer(series, range(train_len))
    train_ds = build_windows(train_series, window).map_values(normalizer.normalize)
    test_ds = evaluation_windows(series, train_len, window)
    # split hygiene: no evaluation target may fall in the training range
    assert np.all(test_ds.target_timestamps >= series.start + train_len)
    assert np.all(train_ds.target_timestamps < series.start + train_len)
    return Split(normalizer, train_ds, test_ds, train_len, series)


@dataclass
class LstmRun:
    report: EvalReport
    network: Network
    normalizer: Normalizer
    loss_curve: list[float]
    seconds: float


def run_lstm(series: TrafficSeries, cfg: ExperimentConfig, hidden_sizes: Sequence[int] | None = None,
             split: Split | None = None, name: str = "lstm") -> LstmRun:
    """Train a fresh network on the training range and evaluate it on the held-out range."""
    train_len = cfg.resolved_train_len(len(series))
    split = split or prepare_split(series, cfg.window, train_len)
    sizes = tuple(hidden_sizes or cfg.hidden_sizes)
    width = series.n_nodes**2
    net = Network.initialize(width, sizes, width, cfg.train.init_scale, cfg.train.seed, cfg.output_peephole)
    t0 = time.perf_counter()
    net, curve = train(net, split.train, cfg.train)
    seconds = time.perf_counter() - t0
    report = evaluate(net, split.test, split.normalizer, name)
    return LstmRun(report, net, split.normalizer, curve, seconds)


@dataclass(frozen=True)
class SweepPoint:
    value: object
    mse_normalized: float
    mse_raw: float
    seconds: float
    error: str | None = None
    n_predictions: int = 0

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class SweepResult:
    axis_name: str
    points: list[SweepPoint]

    def __post_init__(self):
        if not self.points:
            raise ConfigurationError("a sweep needs at least one point")
        values = [p.value for p in self.points]
        if len(set(values)) != len(values):
            raise ConfigurationError("sweep configuration values must be distinct")

    @property
    def all_failed(self) -> bool:
        return all(p.failed for p in self.points)

    def point(self, value) -> SweepPoint:
        return next(p for p in self.points if p.value == value)

    def to_csv(self, timing: bool = True) -> str:
        """Plot-ready CSV; ``timing=False`` writes ``nan`` seconds so reruns are byte-identical."""
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for p in self.points:
            secs = repr(float(p.seconds)) if timing else "nan"
            buf.write(f"{self.axis_name},{p.value},{float(p.mse_normalized)!r},{float(p.mse_raw)!r},{secs}\n")
        return buf.getvalue()


_POINT_ERRORS = (TmForecastError, np.linalg.LinAlgError, FloatingPointError)


def _check_distinct(values: Sequence) -> None:
    if not values:
        raise ConfigurationError("sweep values must be nonempty")
    if len(set(values)) != len(values):
        raise ConfigurationError(f"duplicate sweep values: {list(values)}")


def _lstm_point(series, cfg, sizes, split, value) -> SweepPoint:
    try:
        run = run_lstm(series, cfg, sizes, split)
    except _POINT_ERRORS as exc:
        log.warning("sweep point %s failed: %s", value, exc)
        return SweepPoint(value, float("nan"), float("nan"), float("nan"), str(exc))
    return SweepPoint(value, run.report.overall_mse, run.report.overall_mse_raw, run.seconds,
                      n_predictions=run.report.n_predictions)


def sweep_hidden_size(series: TrafficSeries, window: int, sizes: Sequence[int],
                      cfg: ExperimentConfig | TrainConfig = ExperimentConfig()) -> SweepResult:
    """One single-layer network per hidden size, identical seed and training config."""
    cfg = _experiment(cfg, window)
    _check_distinct(sizes)
    split = prepare_split(series, window, cfg.resolved_train_len(len(series)))
    return SweepResult("hidden_units", [_lstm_point(series, cfg, (s,), split, s) for s in sizes])


def sweep_depth(series: TrafficSeries, window: int, depths: Sequence[int], width: int,
                cfg: ExperimentConfig | TrainConfig = ExperimentConfig()) -> SweepResult:
    """One network per depth, every layer ``width`` cells wide."""
    cfg = _experiment(cfg, window)
    _check_distinct(depths)
    if any(d < 1 for d in depths) or width < 1:
        raise ConfigurationError("depths and width must be positive")
    split = prepare_split(series, window, cfg.resolved_train_len(len(series)))
    return SweepResult("hidden_layers", [_lstm_point(series, cfg, (width,) * d, split, d) for d in depths])


def _experiment(cfg, window: int) -> ExperimentConfig:
    if isinstance(cfg, TrainConfig):
        return ExperimentConfig(window=window, train=cfg)
    return replace(cfg, window=window)


METHODS = ("naive", "holt_winters", "arma", "arar", "arima", "mlp", "lstm")


def compare_methods(series: TrafficSeries, window: int,
                    cfg: ExperimentConfig | TrainConfig = ExperimentConfig(),
                    methods: Sequence[str] = METHODS) -> tuple[SweepResult, dict[str, EvalReport]]:
    """Evaluate every method on the same chronological split and evaluation windows."""
    cfg = _experiment(cfg, window)
    _check_distinct(methods)
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ConfigurationError(f"unknown methods: {sorted(unknown)}")
    split = prepare_split(series, window, cfg.resolved_train_len(len(series)))
    norm_values = split.normalizer.normalize(series.values)
    train_values = norm_values[: split.train_len]
    points, reports = [], {}
    for method in methods:
        t0 = time.perf_counter()
        try:
            if method == "naive":
                report = evaluate(naive_last_value, split.test, split.normalizer, method)
            elif method == "lstm":
                report = run_lstm(series, cfg, split=split).report
            elif method == "mlp":
                mlp = MlpBaseline.initialize(window, series.n_nodes**2, cfg.mlp_hidden,
                                             cfg.train.init_scale, cfg.train.seed)
                mlp_train(mlp, split.train, cfg.train)
                report = evaluate(mlp, split.test, split.normalizer, method)
            else:
                order = {"arma": cfg.arma_order, "arima": cfg.arima_order}.get(method, ())
                baseline = PerOdBaseline(method, tuple(order), cfg.hw_grid_step).fit(train_values)
                path = PathPredictor(baseline.prediction_path(norm_values), series.start)
                report = evaluate(path, split.test, split.normalizer, method)
        except _POINT_ERRORS as exc:
            log.warning("method %s failed: %s", method, exc)
            points.append(SweepPoint(method, float("nan"), float("nan"), float("nan"), str(exc)))
            continue
        seconds = time.perf_counter() - t0
        reports[method] = report
        points.append(SweepPoint(method, report.overall_mse, report.overall_mse_raw, seconds,
                                 n_predictions=report.n_predictions))
    return SweepResult("method", points), reports
