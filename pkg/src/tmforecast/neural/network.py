"""Stacked LSTM network with a linear read-out, trained by per-sample SGD."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError, DimensionError, TrainingDivergedError
from .lstm import LstmLayer, LstmTrace, lstm_backward, lstm_forward


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 50
    seed: int = 0
    gradient_clip: float | None = 5.0
    init_scale: float = 0.1

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be positive")
        if self.gradient_clip is not None and not self.gradient_clip > 0:
            raise ConfigurationError("gradient_clip must be positive when set")
        if not self.init_scale > 0:
            raise ConfigurationError("init_scale must be positive")


@dataclass
class Network:
    layers: list[LstmLayer]
    w_out: np.ndarray  # (H_last, K)
    b_out: np.ndarray  # (K,)

    def __post_init__(self):
        if not self.layers:
            raise DimensionError("a network needs at least one LSTM layer")
        for lower, upper in zip(self.layers, self.layers[1:]):
            if upper.n_inputs != lower.n_cells:
                raise DimensionError("layer input size must equal the previous layer's cell count")
        self.w_out = np.asarray(self.w_out, dtype=np.float64)
        self.b_out = np.asarray(self.b_out, dtype=np.float64)
        if self.w_out.shape != (self.layers[-1].n_cells, self.b_out.shape[0]):
            raise DimensionError("output layer shape does not match the last LSTM layer")

    @classmethod
    def initialize(cls, n_inputs: int, hidden_sizes: Sequence[int], n_outputs: int | None = None,
                   init_scale: float = 0.1, seed: int = 0,
                   output_peephole: str = "current") -> "Network":
        if not hidden_sizes or any(hs < 1 for hs in hidden_sizes):
            raise ConfigurationError("hidden sizes must be a nonempty list of positive integers")
        n_outputs = n_inputs if n_outputs is None else n_outputs
        rng = np.random.default_rng(seed)
        layers = []
        width = n_inputs
        for hs in hidden_sizes:
            layers.append(LstmLayer.random(width, hs, rng, init_scale, output_peephole))
            width = hs
        w_out = rng.uniform(-init_scale, init_scale, (width, n_outputs))
        return cls(layers, w_out, np.zeros(n_outputs))

    @property
    def n_inputs(self) -> int:
        return self.layers[0].n_inputs

    @property
    def n_outputs(self) -> int:
        return self.b_out.shape[0]

    @property
    def hidden_sizes(self) -> list[int]:
        return [layer.n_cells for layer in self.layers]

    def params(self) -> list[tuple[str, np.ndarray]]:
        """All weight arrays in declared (serialization) order."""
        out = []
        for i, layer in enumerate(self.layers):
            out.extend((f"layer{i}.{name}", arr) for name, arr in layer.params().items())
        out.append(("output.w_out", self.w_out))
        out.append(("output.b_out", self.b_out))
        return out

    def copy(self) -> "Network":
        return Network([l.copy() for l in self.layers], self.w_out.copy(), self.b_out.copy())

    def forward_traces(self, window) -> tuple[list[LstmTrace], np.ndarray]:
        x = np.asarray(window, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_inputs:
            raise DimensionError(f"window must have shape (W, {self.n_inputs}), got {x.shape}")
        traces = []
        for layer in self.layers:
            tr = lstm_forward(layer, x)
            traces.append(tr)
            x = tr.outputs
        return traces, x[-1] @ self.w_out + self.b_out

    def predict(self, window) -> np.ndarray:
        return self.forward_traces(window)[1]

    def loss_and_grads(self, window, target) -> tuple[float, list[np.ndarray]]:
        """O = 0.5 * sum((y - target)^2) at the last step; gradients follow ``params()`` order."""
        traces, y = self.forward_traces(window)
        err = y - np.asarray(target, dtype=np.float64)
        loss = 0.5 * float(err @ err)
        top = traces[-1]
        grads_out = [np.outer(top.outputs[-1], err), err]
        ext = np.zeros_like(top.outputs)
        ext[-1] = self.w_out @ err
        per_layer = []
        for layer, tr in zip(reversed(self.layers), reversed(traces)):
            gr = lstm_backward(layer, tr, ext)
            per_layer.append(gr)
            ext = gr.d_inputs
        grads = []
        for gr in reversed(per_layer):
            grads.extend(gr.params().values())
        grads.extend(grads_out)
        return loss, grads


def network_forward(net: Network, window) -> np.ndarray:
    return net.predict(window)


def clip_by_global_norm(grads: list[np.ndarray], max_norm: float | None) -> list[np.ndarray]:
    if max_norm is None:
        return grads
    norm = np.sqrt(sum(float(np.vdot(gr, gr)) for gr in grads))
    if norm > max_norm:
        scale = max_norm / norm
        return [gr * scale for gr in grads]
    return grads


def sgd_train(model, inputs: np.ndarray, targets: np.ndarray, cfg: TrainConfig,
              callback=None) -> list[float]:
    """Plain per-sample SGD on ``model.loss_and_grads``; mutates ``model`` in place.

    Returns the per-epoch mean training MSE (mean squared error per output
    component, measured on each sample just before its update). Sample order
    is a fresh permutation per epoch drawn from ``cfg.seed``.
    """
    n = len(targets)
    if n == 0:
        raise ConfigurationError("training set is empty")
    rng = np.random.default_rng(cfg.seed)
    params = [arr for _, arr in model.params()]
    width = targets.shape[1]
    curve = []
    for epoch in range(1, cfg.epochs + 1):
        total = 0.0
        for k in rng.permutation(n):
            loss, grads = model.loss_and_grads(inputs[k], targets[k])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)
            total += 2.0 * loss / width
            for p, gr in zip(params, clip_by_global_norm(grads, cfg.gradient_clip)):
                p -= cfg.learning_rate * gr
        mean_mse = total / n
        if not np.isfinite(mean_mse) or not all(np.all(np.isfinite(p)) for p in params):
            raise TrainingDivergedError(epoch, mean_mse)
        curve.append(mean_mse)
        if callback is not None:
            callback(epoch, mean_mse)
    return curve


def train(net: Network, data, cfg: TrainConfig, callback=None) -> tuple[Network, list[float]]:
    """Train ``net`` in place on a (normalized) WindowedDataset; returns it with its loss curve."""
    if len(data) == 0:
        raise ConfigurationError("training set is empty")
    if data.inputs.shape[2] != net.n_inputs or data.targets.shape[1] != net.n_outputs:
        raise DimensionError("dataset width does not match the network")
    curve = sgd_train(net, data.inputs, data.targets, cfg, callback)
    return net, curve
