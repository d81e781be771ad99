"""Peephole LSTM layer (one cell per memory block) with exact forward pass and BPTT.

Weight layout, shared by every array with a ``4H`` axis: column blocks are
``[input gate | forget gate | cell input | output gate]``. Peephole weights are
rows ``[input gate, forget gate, output gate]``; with one cell per block each
peephole is a per-cell scalar, so they act element-wise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DimensionError
from .activations import f, f_prime, g, g_prime, h, h_prime

IN, FORGET, CELL, OUT = range(4)
PEEP_IN, PEEP_FORGET, PEEP_OUT = range(3)
OUTPUT_PEEPHOLE_MODES = ("current", "previous")


@dataclass
class LstmLayer:
    """Weights of one LSTM layer with ``n_inputs`` inputs and ``n_cells`` blocks.

    ``output_peephole`` selects which state feeds the output gate: ``"current"``
    (s^t, the usual peephole LSTM) or ``"previous"`` (s^{t-1}).
    """

    w_input: np.ndarray  # (I, 4H)
    w_recurrent: np.ndarray  # (H, 4H)
    w_peephole: np.ndarray  # (3, H)
    bias: np.ndarray  # (4H,)
    output_peephole: str = "current"

    PARAMS = ("w_input", "w_recurrent", "w_peephole", "bias")

    def __post_init__(self):
        if self.output_peephole not in OUTPUT_PEEPHOLE_MODES:
            raise ConfigurationError(f"output_peephole must be one of {OUTPUT_PEEPHOLE_MODES}")
        self.w_input = np.asarray(self.w_input, dtype=np.float64)
        self.w_recurrent = np.asarray(self.w_recurrent, dtype=np.float64)
        self.w_peephole = np.asarray(self.w_peephole, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        H = self.w_recurrent.shape[0]
        if (
            self.w_input.ndim != 2
            or self.w_input.shape[1] != 4 * H
            or self.w_recurrent.shape != (H, 4 * H)
            or self.w_peephole.shape != (3, H)
            or self.bias.shape != (4 * H,)
        ):
            raise DimensionError("inconsistent LSTM weight shapes")

    @classmethod
    def zeros(cls, n_inputs: int, n_cells: int, output_peephole: str = "current") -> "LstmLayer":
        H = n_cells
        return cls(
            np.zeros((n_inputs, 4 * H)), np.zeros((H, 4 * H)), np.zeros((3, H)), np.zeros(4 * H),
            output_peephole,
        )

    @classmethod
    def random(cls, n_inputs: int, n_cells: int, rng: np.random.Generator, init_scale: float = 0.1,
               output_peephole: str = "current") -> "LstmLayer":
        """Uniform weights in [-init_scale, init_scale], zero biases."""
        H = n_cells
        return cls(
            rng.uniform(-init_scale, init_scale, (n_inputs, 4 * H)),
            rng.uniform(-init_scale, init_scale, (H, 4 * H)),
            rng.uniform(-init_scale, init_scale, (3, H)),
            np.zeros(4 * H),
            output_peephole,
        )

    @property
    def n_inputs(self) -> int:
        return self.w_input.shape[0]

    @property
    def n_cells(self) -> int:
        return self.w_recurrent.shape[0]

    def block(self, arr: np.ndarray, which: int) -> np.ndarray:
        """View of one gate's columns of a ``(..., 4H)`` array."""
        H = self.n_cells
        return arr[..., which * H : (which + 1) * H]

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.PARAMS}

    def copy(self) -> "LstmLayer":
        return LstmLayer(*(getattr(self, n).copy() for n in self.PARAMS), self.output_peephole)


@dataclass
class LstmTrace:
    """Forward-pass record. Arrays indexed by t = 1..T use row t-1; ``state`` and
    ``cell_output`` have an extra leading row for t = 0 (all zeros)."""

    inputs: np.ndarray  # (T, I)
    pre: np.ndarray  # (T, 4H) a_iota, a_phi, a_c, a_omega
    input_gate: np.ndarray  # (T, H)
    forget_gate: np.ndarray
    output_gate: np.ndarray
    state: np.ndarray  # (T + 1, H)
    cell_output: np.ndarray  # (T + 1, H)

    @property
    def steps(self) -> int:
        return self.inputs.shape[0]

    @property
    def outputs(self) -> np.ndarray:
        """Cell outputs b_c^1..b_c^T."""
        return self.cell_output[1:]


@dataclass
class LstmGradients:
    w_input: np.ndarray
    w_recurrent: np.ndarray
    w_peephole: np.ndarray
    bias: np.ndarray
    delta: np.ndarray  # (T, 4H) unit derivatives dO/da per step
    eps_cell: np.ndarray  # (T, H) dO/db_c
    eps_state: np.ndarray  # (T, H) dO/ds_c
    d_inputs: np.ndarray  # (T, I) dO/dx, fed to the layer below

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in LstmLayer.PARAMS}


def lstm_forward(layer: LstmLayer, inputs) -> LstmTrace:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != layer.n_inputs or x.shape[0] < 1:
        raise DimensionError(f"expected inputs of shape (T>=1, {layer.n_inputs}), got {x.shape}")
    T, H = x.shape[0], layer.n_cells
    p_in, p_forget, p_out = layer.w_peephole
    previous_peephole = layer.output_peephole == "previous"

    xproj = x @ layer.w_input + layer.bias
    pre = np.empty((T, 4 * H))
    b_in = np.empty((T, H))
    b_forget = np.empty((T, H))
    b_out = np.empty((T, H))
    s = np.zeros((T + 1, H))
    bc = np.zeros((T + 1, H))
    for t in range(1, T + 1):
        z = xproj[t - 1] + bc[t - 1] @ layer.w_recurrent
        s_prev = s[t - 1]
        a_in = z[:H] + p_in * s_prev
        a_forget = z[H : 2 * H] + p_forget * s_prev
        a_cell = z[2 * H : 3 * H]
        gi, gf = f(a_in), f(a_forget)
        s[t] = gf * s_prev + gi * g(a_cell)
        a_out = z[3 * H :] + p_out * (s_prev if previous_peephole else s[t])
        go = f(a_out)
        bc[t] = go * h(s[t])
        pre[t - 1, :H] = a_in
        pre[t - 1, H : 2 * H] = a_forget
        pre[t - 1, 2 * H : 3 * H] = a_cell
        pre[t - 1, 3 * H :] = a_out
        b_in[t - 1], b_forget[t - 1], b_out[t - 1] = gi, gf, go
    return LstmTrace(x, pre, b_in, b_forget, b_out, s, bc)


def lstm_backward(layer: LstmLayer, trace: LstmTrace, output_error) -> LstmGradients:
    """Backpropagation through time.

    ``output_error[t-1]`` is the external derivative dO/db_c^t injected at step
    t (from the output layer or the layer above). Recurrent contributions are
    added here. All deltas at t = T + 1 are zero.
    """
    T, H = trace.steps, layer.n_cells
    if trace.inputs.shape[1] != layer.n_inputs or trace.state.shape[1] != H:
        raise DimensionError("trace does not belong to this layer")
    ext = np.asarray(output_error, dtype=np.float64)
    if ext.shape != (T, H):
        raise DimensionError(f"output_error must have shape {(T, H)}, got {ext.shape}")
    p_in, p_forget, p_out = layer.w_peephole
    previous_peephole = layer.output_peephole == "previous"
    s = trace.state

    delta = np.zeros((T, 4 * H))
    eps_c = np.zeros((T, H))
    eps_s = np.zeros((T, H))
    delta_next = np.zeros(4 * H)
    eps_s_next = np.zeros(H)
    forget_next = np.zeros(H)
    for t in range(T, 0, -1):
        a = trace.pre[t - 1]
        a_in, a_forget, a_cell, a_out = a[:H], a[H : 2 * H], a[2 * H : 3 * H], a[3 * H :]
        ec = ext[t - 1] + layer.w_recurrent @ delta_next
        d_out = f_prime(a_out) * h(s[t]) * ec
        es = (
            trace.output_gate[t - 1] * h_prime(s[t]) * ec
            + forget_next * eps_s_next
            + p_in * delta_next[:H]
            + p_forget * delta_next[H : 2 * H]
        )
        es = es + p_out * (delta_next[3 * H :] if previous_peephole else d_out)
        d_cell = trace.input_gate[t - 1] * g_prime(a_cell) * es
        d_forget = f_prime(a_forget) * s[t - 1] * es
        d_in = f_prime(a_in) * g(a_cell) * es
        row = delta[t - 1]
        row[:H], row[H : 2 * H], row[2 * H : 3 * H], row[3 * H :] = d_in, d_forget, d_cell, d_out
        eps_c[t - 1], eps_s[t - 1] = ec, es
        delta_next, eps_s_next, forget_next = row, es, trace.forget_gate[t - 1]

    d_peep = np.empty((3, H))
    d_peep[0] = np.sum(s[:-1] * delta[:, :H], axis=0)
    d_peep[1] = np.sum(s[:-1] * delta[:, H : 2 * H], axis=0)
    out_state = s[:-1] if previous_peephole else s[1:]
    d_peep[2] = np.sum(out_state * delta[:, 3 * H :], axis=0)
    return LstmGradients(
        w_input=trace.inputs.T @ delta,
        w_recurrent=trace.cell_output[:-1].T @ delta,
        w_peephole=d_peep,
        bias=delta.sum(axis=0),
        delta=delta,
        eps_cell=eps_c,
        eps_state=eps_s,
        d_inputs=delta @ layer.w_input.T,
    )
