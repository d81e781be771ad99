"""Traffic-matrix data model: vectorization, normalization, splitting, windowing.

A traffic matrix (TM) holds the N x N origin-destination volumes of one time
slot. Row concatenation turns it into a traffic vector of length N**2 where
entry ``n = i * N + j`` is the volume from node ``i`` to node ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ConfigurationError, DegenerateScaleError, DimensionError, DataError


def _frozen_array(values, ndim: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise DimensionError(f"{what} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TrafficMatrix:
    volumes: np.ndarray
    timestamp: int = 0

    def __post_init__(self):
        vol = _frozen_array(self.volumes, 2, "volumes")
        if vol.shape[0] != vol.shape[1] or vol.shape[0] == 0:
            raise DimensionError(f"volumes must be a non-empty square grid, got {vol.shape}")
        if not np.all(np.isfinite(vol)) or np.any(vol < 0):
            raise DataError("traffic volumes must be finite and nonnegative")
        object.__setattr__(self, "volumes", vol)

    @property
    def n_nodes(self) -> int:
        return self.volumes.shape[0]

    def __eq__(self, other):
        if not isinstance(other, TrafficMatrix):
            return NotImplemented
        return self.timestamp == other.timestamp and np.array_equal(self.volumes, other.volumes)


@dataclass(frozen=True)
class TrafficVector:
    values: np.ndarray
    timestamp: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, 1, "values"))

    def __len__(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, TrafficVector):
            return NotImplemented
        return self.timestamp == other.timestamp and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class TrafficSeries:
    """T consecutive traffic vectors stored as a ``(T, N**2)`` array.

    Row ``k`` carries slot index ``start + k``.
    """

    n_nodes: int
    values: np.ndarray
    start: int = 0
    interval_minutes: int = 15

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ConfigurationError("n_nodes must be positive")
        if self.interval_minutes < 1:
            raise ConfigurationError("interval_minutes must be positive")
        vals = np.array(self.values, dtype=np.float64)
        if vals.size == 0:
            vals = vals.reshape(0, self.n_nodes**2)
        if vals.ndim != 2 or vals.shape[1] != self.n_nodes**2:
            raise DimensionError(
                f"series values must have shape (T, {self.n_nodes**2}), got {vals.shape}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_vectors(cls, vectors, n_nodes: int, interval_minutes: int = 15) -> "TrafficSeries":
        vectors = list(vectors)
        if not vectors:
            return cls(n_nodes, np.empty((0, n_nodes**2)), 0, interval_minutes)
        stamps = [v.timestamp for v in vectors]
        if any(b - a != 1 for a, b in zip(stamps, stamps[1:])):
            raise DataError("timestamps must increase by exactly 1")
        return cls(n_nodes, np.stack([v.values for v in vectors]), stamps[0], interval_minutes)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def timestamps(self) -> np.ndarray:
        return np.arange(self.start, self.start + len(self))

    @property
    def vectors(self) -> list[TrafficVector]:
        return [TrafficVector(row, self.start + k) for k, row in enumerate(self.values)]

    def __getitem__(self, k: int) -> TrafficVector:
        if k < 0:
            k += len(self)
        return TrafficVector(self.values[k], self.start + k)

    def slice(self, lo: int, hi: int) -> "TrafficSeries":
        """Sub-series of rows ``[lo, hi)`` with timestamps preserved."""
        return TrafficSeries(self.n_nodes, self.values[lo:hi], self.start + lo, self.interval_minutes)

    def with_values(self, values: np.ndarray) -> "TrafficSeries":
        return TrafficSeries(self.n_nodes, values, self.start, self.interval_minutes)

    def __eq__(self, other):
        if not isinstance(other, TrafficSeries):
            return NotImplemented
        return (
            self.n_nodes == other.n_nodes
            and self.start == other.start
            and self.interval_minutes == other.interval_minutes
            and np.array_equal(self.values, other.values)
        )


def vectorize(m: TrafficMatrix) -> TrafficVector:
    return TrafficVector(m.volumes.reshape(-1), m.timestamp)


def devectorize(v: TrafficVector, n_nodes: int) -> TrafficMatrix:
    if len(v) != n_nodes * n_nodes:
        raise DimensionError(f"vector of length {len(v)} cannot form a {n_nodes}x{n_nodes} matrix")
    return TrafficMatrix(v.values.reshape(n_nodes, n_nodes), v.timestamp)


@dataclass(frozen=True)
class Normalizer:
    """Max-scaling: ``normalize(x) = x / scale``."""

    scale: float

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise DegenerateScaleError(f"normalizer scale must be positive, got {self.scale}")

    def normalize(self, x):
        return np.asarray(x, dtype=np.float64) / self.scale

    def denormalize(self, x):
        return np.asarray(x, dtype=np.float64) * self.scale


def _as_range(fit_range, n: int) -> range:
    if isinstance(fit_range, slice):
        return range(n)[fit_range]
    if isinstance(fit_range, range):
        return fit_range
    lo, hi = fit_range
    return range(lo, hi)


def fit_normalizer(series: TrafficSeries, fit_range=None) -> Normalizer:
    """Scale by the largest volume among the rows in ``fit_range`` (row indices).

    Only the fitting rows are inspected, so a test split never leaks into the scale.
    """
    rows = _as_range(fit_range if fit_range is not None else range(len(series)), len(series))
    if len(rows) == 0 or rows.start < 0 or rows[-1] >= len(series):
        raise ConfigurationError(f"fit range {rows} is empty or outside the series")
    peak = float(np.max(series.values[rows.start : rows.stop : rows.step]))
    if not peak > 0:
        raise DegenerateScaleError("fitting range is all zero; cannot normalize")
    return Normalizer(peak)


@dataclass(frozen=True)
class WindowedDataset:
    """Supervised samples: ``inputs[k]`` is W consecutive vectors, ``targets[k]`` the next one.

    ``target_timestamps[k]`` is the slot of ``targets[k]``; the inputs cover the
    W slots right before it, oldest first.
    """

    window: int
    inputs: np.ndarray
    targets: np.ndarray
    target_timestamps: np.ndarray

    def __len__(self) -> int:
        return self.targets.shape[0]

    @property
    def width(self) -> int:
        return self.targets.shape[1]

    def input_timestamps(self, k: int) -> np.ndarray:
        t = int(self.target_timestamps[k])
        return np.arange(t - self.window, t)

    @property
    def samples(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        return zip(self.inputs, self.targets)

    def map_values(self, fn) -> "WindowedDataset":
        return WindowedDataset(self.window, fn(self.inputs), fn(self.targets), self.target_timestamps)

    def subset(self, mask) -> "WindowedDataset":
        return WindowedDataset(
            self.window, self.inputs[mask], self.targets[mask], self.target_timestamps[mask]
        )


def build_windows(series: TrafficSeries, window: int) -> WindowedDataset:
    T = len(series)
    if not 1 <= window <= T - 1:
        raise ConfigurationError(f"window must lie in [1, {T - 1}] for a series of length {T}")
    X = series.values
    idx = np.arange(T - window)[:, None] + np.arange(window)[None, :]
    inputs = X[idx]
    targets = X[window:]
    return WindowedDataset(window, inputs, targets.copy(), series.timestamps[window:].copy())


def split_chronological(series: TrafficSeries, train_len: int) -> tuple[TrafficSeries, TrafficSeries]:
    T = len(series)
    if not 0 < train_len < T:
        raise ConfigurationError(f"train_len must lie in (0, {T}), got {train_len}")
    return series.slice(0, train_len), series.slice(train_len, T)


def evaluation_windows(series: TrafficSeries, train_len: int, window: int) -> WindowedDataset:
    """Windows whose target lies in the held-out range ``[train_len, T)``.

    Inputs may reach back into the training range (they are past observations);
    targets never do.
    """
    split_chronological(series, train_len)
    if not 1 <= window <= train_len:
        raise ConfigurationError(f"window must lie in [1, {train_len}] (the training length)")
    ds = build_windows(series, window)
    return ds.subset(ds.target_timestamps >= series.start + train_len)
