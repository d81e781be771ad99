"""Single-hidden-layer feed-forward baseline on the flattened window."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DimensionError
from .activations import sigmoid
from .network import TrainConfig, sgd_train


@dataclass
class MlpBaseline:
    w_hidden: np.ndarray  # (W * K, M)
    b_hidden: np.ndarray  # (M,)
    w_out: np.ndarray  # (M, K)
    b_out: np.ndarray  # (K,)

    @classmethod
    def initialize(cls, window: int, width: int, n_hidden: int, init_scale: float = 0.1,
                   seed: int = 0) -> "MlpBaseline":
        if min(window, width, n_hidden) < 1:
            raise ConfigurationError("window, width and hidden size must be positive")
        rng = np.random.default_rng(seed)
        return cls(
            rng.uniform(-init_scale, init_scale, (window * width, n_hidden)),
            np.zeros(n_hidden),
            rng.uniform(-init_scale, init_scale, (n_hidden, width)),
            np.zeros(width),
        )

    def params(self) -> list[tuple[str, np.ndarray]]:
        return [(n, getattr(self, n)) for n in ("w_hidden", "b_hidden", "w_out", "b_out")]

    def _flatten(self, window) -> np.ndarray:
        x = np.asarray(window, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.w_hidden.shape[0]:
            raise DimensionError(f"flattened window has {x.shape[0]} values, expected {self.w_hidden.shape[0]}")
        return x

    def predict(self, window) -> np.ndarray:
        hidden = sigmoid(self._flatten(window) @ self.w_hidden + self.b_hidden)
        return hidden @ self.w_out + self.b_out

    def loss_and_grads(self, window, target):
        x = self._flatten(window)
        hidden = sigmoid(x @ self.w_hidden + self.b_hidden)
        err = hidden @ self.w_out + self.b_out - np.asarray(target, dtype=np.float64)
        back = (self.w_out @ err) * hidden * (1.0 - hidden)
        return 0.5 * float(err @ err), [np.outer(x, back), back, np.outer(hidden, err), err]


def mlp_forward(baseline: MlpBaseline, window) -> np.ndarray:
    return baseline.predict(window)


def mlp_train(baseline: MlpBaseline, data, cfg: TrainConfig, callback=None):
    if len(data) == 0:
        raise ConfigurationError("training set is empty")
    curve = sgd_train(baseline, data.inputs, data.targets, cfg, callback)
    return baseline, curve
