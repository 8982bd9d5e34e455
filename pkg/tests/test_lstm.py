import math

import numpy as np
import pytest

from windgat.errors import ShapeError
from windgat.lstm import GATES, LstmLayer, lstm_forward, lstm_step
from windgat.tensor import Tensor

from oracles import assert_grads_close, finite_diff_grad


def sig(v):
    return 1.0 / (1.0 + math.exp(-v))


def loop_lstm_step(layer, x, h_prev, c_prev):
    """Scalar re-implementation of the gate equations."""
    hid = layer.hidden_size
    pre = {}
    for gate in GATES:
        pre[gate] = [
            sum(layer.w[gate].data[r, c] * x[c] for c in range(layer.input_size))
            + sum(layer.u[gate].data[r, c] * h_prev[c] for c in range(hid))
            + layer.b[gate].data[r]
            for r in range(hid)
        ]
    h_new, c_new = np.zeros(hid), np.zeros(hid)
    for r in range(hid):
        i = sig(pre["input"][r])
        f = sig(pre["forget"][r])
        g = math.tanh(pre["cell"][r])
        o = sig(pre["output"][r])
        c_new[r] = f * c_prev[r] + i * g
        h_new[r] = o * math.tanh(c_new[r])
    return h_new, c_new


def zeroed_layer(input_size, hidden_size):
    layer = LstmLayer(input_size, hidden_size, np.random.default_rng(0))
    for gate in GATES:
        layer.w[gate].data[:] = 0.0
        layer.u[gate].data[:] = 0.0
        layer.b[gate].data[:] = 0.0
    return layer


class TestStep:
    def test_zero_parameters_give_zero_hidden(self):
        layer = zeroed_layer(3, 2)
        h, c = lstm_step(layer, Tensor([1.0, -2.0, 3.0]), layer.zero_state())
        np.testing.assert_array_equal(h.data, [0.0, 0.0])
        np.testing.assert_array_equal(c.data, [0.0, 0.0])

    def test_hidden_strictly_bounded(self):
        rng = np.random.default_rng(40)
        layer = LstmLayer(4, 3, rng)
        state = layer.zero_state()
        for _ in range(20):
            state = lstm_step(layer, Tensor(rng.normal(scale=5.0, size=4)), state)
            assert (np.abs(state[0].data) < 1.0).all()

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(41)
        layer = LstmLayer(3, 2, rng)
        x = rng.normal(size=3)
        h_prev = rng.normal(size=2) * 0.5
        c_prev = rng.normal(size=2)
        h, c = lstm_step(layer, Tensor(x), (Tensor(h_prev), Tensor(c_prev)))
        eh, ec = loop_lstm_step(layer, x, h_prev, c_prev)
        np.testing.assert_allclose(h.data, eh, atol=1e-12)
        np.testing.assert_allclose(c.data, ec, atol=1e-12)

    def test_input_shape_mismatch(self):
        layer = LstmLayer(3, 2, np.random.default_rng(0))
        with pytest.raises(ShapeError):
            lstm_step(layer, Tensor([1.0, 2.0]), layer.zero_state())


class TestForward:
    def test_single_step_equivalence(self):
        rng = np.random.default_rng(42)
        layer = LstmLayer(3, 2, rng)
        x = rng.normal(size=(1, 3))
        out = lstm_forward(layer, Tensor(x))
        h, _ = lstm_step(layer, Tensor(x[0]), layer.zero_state())
        np.testing.assert_array_equal(out.data, h.data)

    def test_zero_weights_give_zero_output(self):
        layer = zeroed_layer(2, 3)
        out = lstm_forward(layer, Tensor(np.ones((5, 2))))
        np.testing.assert_array_equal(out.data, np.zeros(3))

    def test_empty_sequence_rejected(self):
        layer = LstmLayer(2, 2, np.random.default_rng(0))
        with pytest.raises(ShapeError):
            lstm_forward(layer, Tensor(np.zeros((0, 2))))

    def test_final_state_inside_unit_interval(self):
        rng = np.random.default_rng(43)
        layer = LstmLayer(3, 4, rng)
        out = lstm_forward(layer, Tensor(rng.normal(scale=3.0, size=(8, 3))))
        assert (np.abs(out.data) < 1.0).all()

    def test_deterministic_construction(self):
        a = LstmLayer(3, 2, np.random.default_rng(7))
        b = LstmLayer(3, 2, np.random.default_rng(7))
        for gate in GATES:
            assert (a.w[gate].data == b.w[gate].data).all()
            assert (a.u[gate].data == b.u[gate].data).all()


class TestBackpropThroughTime:
    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(44)
        layer = LstmLayer(3, 2, rng)
        seq = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
        weight = rng.normal(size=2)

        (lstm_forward(layer, seq) * Tensor(weight)).sum().backward()
        params = [seq]
        for group in (layer.w, layer.u, layer.b):
            params.extend(group[g] for g in GATES)
        analytic = [p.grad for p in params]

        def f():
            return float((lstm_forward(layer, Tensor(seq.data)).data * weight).sum())

        fd = finite_diff_grad(f, params)
        assert_grads_close(analytic, fd, rtol=1e-3, atol=1e-8)
