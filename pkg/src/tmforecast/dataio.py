"""Traffic-matrix CSV interchange format and the seeded synthetic traffic generator.

CSV layout: header ``t,f0,f1,...,f{K-1}`` with K = N*N, then one row per slot:
an integer slot index followed by K nonnegative decimal volumes. Slot indices
increase by exactly 1. UTF-8, LF line endings, ``.`` as decimal separator.
Values are written in shortest round-trip form, so save/load is bit-exact.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .core import TrafficSeries
from .errors import ConfigurationError, ParseError

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_INTEGER = re.compile(r"[+-]?\d+")


def _square_root(k: int) -> int | None:
    n = math.isqrt(k)
    return n if n * n == k and n > 0 else None


def parse_csv_text(text: str, interval_minutes: int = 15) -> TrafficSeries:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("missing header", 1)
    header = lines[0].split(",")
    if len(header) < 2 or header[0] != "t":
        raise ParseError("header must start with 't' followed by flow columns", 1)
    for k, name in enumerate(header[1:]):
        if name != f"f{k}":
            raise ParseError(f"expected column 'f{k}', found {name!r}", 1)
    width = len(header) - 1
    n_nodes = _square_root(width)
    if n_nodes is None:
        raise ParseError(f"{width} flow columns is not a perfect square", 1)

    values = np.empty((len(lines) - 1, width))
    start = 0
    for row, line in enumerate(lines[1:]):
        lineno = row + 2
        cells = line.split(",")
        if len(cells) != width + 1:
            raise ParseError(f"expected {width + 1} columns, found {len(cells)}", lineno)
        if not _INTEGER.fullmatch(cells[0]):
            raise ParseError(f"slot index {cells[0]!r} is not an integer", lineno)
        slot = int(cells[0])
        if row == 0:
            start = slot
        elif slot != start + row:
            raise ParseError(f"slot index {slot} breaks the sequence (expected {start + row})", lineno)
        for k, cell in enumerate(cells[1:]):
            if not _NUMBER.fullmatch(cell):
                raise ParseError(f"column f{k}: {cell!r} is not a decimal number", lineno)
            v = float(cell)
            if not math.isfinite(v) or v < 0:
                raise ParseError(f"column f{k}: volume {cell} must be finite and nonnegative", lineno)
            values[row, k] = v
    return TrafficSeries(n_nodes, values, start, interval_minutes)


def parse_csv_bytes(data: bytes, interval_minutes: int = 15) -> TrafficSeries:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError("invalid UTF-8", data.count(b"\n", 0, exc.start) + 1) from None
    return parse_csv_text(text, interval_minutes)


def load_csv(path, interval_minutes: int = 15) -> TrafficSeries:
    return parse_csv_bytes(Path(path).read_bytes(), interval_minutes)


def format_csv(series: TrafficSeries) -> str:
    width = series.n_nodes**2
    out = ["t," + ",".join(f"f{k}" for k in range(width))]
    for t, row in zip(series.timestamps, series.values):
        out.append(f"{t}," + ",".join(repr(float(v)) for v in row))
    return "\n".join(out) + "\n"


def save_csv(series: TrafficSeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_csv(series))


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs of the synthetic traffic generator.

    Amplitudes and ``noise_sigma`` are relative to each flow's base volume.
    ``phase_jitter`` is the spread (radians) of per-flow diurnal phases around
    a network-wide phase. ``common_noise`` in [0, 1] is the share of the noise
    innovations driven by one network-wide factor, which follows its own AR(1)
    with coefficient ``common_phi``; per-flow noise uses ``noise_phi``.
    """

    n_nodes: int = 23
    n_slots: int = 309
    interval_minutes: int = 15
    seed: int = 0
    diurnal_amplitude: float = 0.4
    weekly_amplitude: float = 0.1
    noise_phi: float = 0.0
    noise_sigma: float = 0.2
    spike_rate: float = 0.001
    spike_magnitude: float = 1.0
    base_volume_range: tuple[float, float] = (1.0e4, 1.0e7)
    phase_jitter: float = 0.5
    common_noise: float = 0.2
    common_phi: float = 0.5

    def __post_init__(self):
        lo, hi = (float(v) for v in self.base_volume_range)
        object.__setattr__(self, "base_volume_range", (lo, hi))
        checks = [
            (self.n_nodes >= 1, "n_nodes must be positive"),
            (self.n_slots >= 0, "n_slots must be nonnegative"),
            (self.interval_minutes >= 1, "interval_minutes must be positive"),
            (self.diurnal_amplitude >= 0, "diurnal_amplitude must be nonnegative"),
            (self.weekly_amplitude >= 0, "weekly_amplitude must be nonnegative"),
            (-1 < self.noise_phi < 1, "noise_phi must lie in (-1, 1)"),
            (self.noise_sigma >= 0, "noise_sigma must be nonnegative"),
            (0 <= self.spike_rate <= 1, "spike_rate must be a probability"),
            (self.spike_magnitude >= 0, "spike_magnitude must be nonnegative"),
            (0 < lo <= hi, "base_volume_range must be a positive interval"),
            (self.phase_jitter >= 0, "phase_jitter must be nonnegative"),
            (0 <= self.common_noise <= 1, "common_noise must lie in [0, 1]"),
            (-1 < self.common_phi < 1, "common_phi must lie in (-1, 1)"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigurationError(message)

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "SyntheticConfig":
        """Build from string values (key=value files, CLI flags)."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            key = key.strip().replace("-", "_")
            if key not in types:
                raise ConfigurationError(f"unknown generator setting {key!r}")
            raw = str(raw).strip()
            try:
                if key == "base_volume_range":
                    lo, hi = raw.split(",")
                    kwargs[key] = (float(lo), float(hi))
                elif types[key] in ("int", int):
                    kwargs[key] = int(raw)
                else:
                    kwargs[key] = float(raw)
            except ValueError:
                raise ConfigurationError(f"bad value for {key}: {raw!r}") from None
        return cls(**kwargs)


def read_config_file(path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected key=value", lineno)
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _ar1(innovations: np.ndarray, phi: float) -> np.ndarray:
    out = np.empty_like(innovations)
    if out.shape[0]:
        out[0] = innovations[0] / np.sqrt(1.0 - phi**2)
    for k in range(1, out.shape[0]):
        out[k] = phi * out[k - 1] + innovations[k]
    return out


def generate_synthetic(cfg: SyntheticConfig) -> TrafficSeries:
    """Seasonal traffic with AR(1) noise and multiplicative spikes, one series per OD flow.

    volume(t) = base * (1 + A_d sin(2 pi t / P_d + phase) + A_w sin(2 pi t / P_w + phase_w)
    + noise(t)) * spike(t), clamped at zero. P_d and P_w are one day and one week
    in slots.
    """
    rng = np.random.default_rng(cfg.seed)
    K, T = cfg.n_nodes**2, cfg.n_slots
    lo, hi = cfg.base_volume_range
    base = np.exp(rng.uniform(np.log(lo), np.log(hi), K))
    amp_d = cfg.diurnal_amplitude * rng.uniform(0.5, 1.5, K)
    amp_w = cfg.weekly_amplitude * rng.uniform(0.5, 1.5, K)
    phase_d = rng.uniform(0, 2 * np.pi) + cfg.phase_jitter * rng.standard_normal(K)
    phase_w = rng.uniform(0, 2 * np.pi) + cfg.phase_jitter * rng.standard_normal(K)
    loading = rng.uniform(0.5, 1.5, K)

    t = np.arange(T)[:, None]
    day = 24 * 60 / cfg.interval_minutes
    seasonal = (amp_d * np.sin(2 * np.pi * t / day + phase_d)
                + amp_w * np.sin(2 * np.pi * t / (7 * day) + phase_w))

    # AR(1) noise, started from the stationary distribution: shared factor + per-flow part
    shocks_common = rng.standard_normal(T)
    shocks_own = rng.standard_normal((T, K))
    common = _ar1(cfg.noise_sigma * np.sqrt(cfg.common_noise) * shocks_common, cfg.common_phi)
    own = _ar1(cfg.noise_sigma * np.sqrt(1.0 - cfg.common_noise) * shocks_own, cfg.noise_phi)
    noise = loading * common[:, None] + own

    spikes = np.where(rng.random((T, K)) < cfg.spike_rate,
                      1.0 + cfg.spike_magnitude * rng.random((T, K)), 1.0)
    volumes = np.maximum(base * (1.0 + seasonal + noise) * spikes, 0.0)
    return TrafficSeries(cfg.n_nodes, volumes, 0, cfg.interval_minutes)
