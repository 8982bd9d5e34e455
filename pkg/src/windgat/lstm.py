"""Single-layer LSTM over the transformed-time axis.

Standard gate equations; only the final hidden state is returned since
the model predicts one horizon vector per window, not a sequence.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .initializers import glorot_uniform
from .tensor import Tensor

GATES = ("input", "forget", "cell", "output")


class LstmLayer:
    """One recurrent layer with input/forget/cell/output gates.

    Weights are Glorot-uniform; the forget-gate bias starts at 1 and the
    others at 0, the usual stabilization when nothing else is known.
    """

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator):
        if input_size < 1 or hidden_size < 1:
            raise ShapeError("input_size and hidden_size must be positive")
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.w = {}  # input weights per gate, hidden x input
        self.u = {}  # recurrent weights per gate, hidden x hidden
        self.b = {}  # biases per gate
        for gate in GATES:
            self.w[gate] = Tensor(glorot_uniform(rng, (hidden_size, input_size)), requires_grad=True)
        for gate in GATES:
            self.u[gate] = Tensor(glorot_uniform(rng, (hidden_size, hidden_size)), requires_grad=True)
        for gate in GATES:
            init = np.ones(hidden_size) if gate == "forget" else np.zeros(hidden_size)
            self.b[gate] = Tensor(init, requires_grad=True)

    def zero_state(self) -> tuple[Tensor, Tensor]:
        return Tensor(np.zeros(self.hidden_size)), Tensor(np.zeros(self.hidden_size))


def lstm_step(layer: LstmLayer, x_t: Tensor, state: tuple[Tensor, Tensor]) -> tuple[Tensor, Tensor]:
    """One recurrence step; returns the new (hidden, cell) pair."""
    if x_t.shape != (layer.input_size,):
        raise ShapeError(f"expected input of shape ({layer.input_size},), got {x_t.shape}")
    h_prev, c_prev = state

    def gate_pre(gate):
        return T.matmul(layer.w[gate], x_t) + T.matmul(layer.u[gate], h_prev) + layer.b[gate]

    i = T.sigmoid(gate_pre("input"))
    f = T.sigmoid(gate_pre("forget"))
    g = T.tanh(gate_pre("cell"))
    o = T.sigmoid(gate_pre("output"))
    c_new = f * c_prev + i * g
    h_new = o * T.tanh(c_new)
    return h_new, c_new


def lstm_forward(layer: LstmLayer, sequence: Tensor) -> Tensor:
    """Run the layer over a (time x input) sequence from a zero state.

    Returns the final hidden state only.
    """
    if sequence.ndim != 2 or sequence.shape[1] != layer.input_size:
        raise ShapeError(
            f"expected sequence (T, {layer.input_size}), got {sequence.shape}"
        )
    if sequence.shape[0] < 1:
        raise ShapeError("empty sequence")
    state = layer.zero_state()
    for t in range(sequence.shape[0]):
        state = lstm_step(layer, sequence[t], state)
    return state[0]
