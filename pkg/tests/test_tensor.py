import math

import numpy as np
import pytest

from windgat import tensor as T
from windgat.errors import NumericError, ShapeError
from windgat.tensor import Tensor

from oracles import assert_grads_close, finite_diff_grad


class TestMatmul:
    def test_identity(self):
        out = T.matmul(Tensor([[1.0, 0.0], [0.0, 1.0]]), Tensor([[3.0], [4.0]]))
        np.testing.assert_array_equal(out.data, [[3.0], [4.0]])

    def test_row_by_column(self):
        out = T.matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]]))
        np.testing.assert_array_equal(out.data, [[11.0]])

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 2\)"):
            T.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 2))))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        a = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
        b = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
        loss = T.matmul(a, b).sum()
        loss.backward()
        fd = finite_diff_grad(lambda: float((a.data @ b.data).sum()), [a, b])
        assert_grads_close([a.grad, b.grad], fd, rtol=1e-6)

    def test_matrix_vector_and_vector_matrix(self):
        rng = np.random.default_rng(1)
        m = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
        v = Tensor(rng.normal(size=3), requires_grad=True)
        out = T.matmul(m, v)
        assert out.shape == (4,)
        out.sum().backward()
        fd = finite_diff_grad(lambda: float((m.data @ v.data).sum()), [m, v])
        assert_grads_close([m.grad, v.grad], fd, rtol=1e-6)

        w = Tensor(rng.normal(size=4), requires_grad=True)
        out2 = T.matmul(w, m)
        assert out2.shape == (3,)
        out2.sum().backward()
        fd2 = finite_diff_grad(lambda: float((w.data @ m.data).sum()), [w, m])
        assert_grads_close([w.grad, m.grad], fd2, rtol=1e-6)


class TestSoftmax:
    def test_uniform_input(self):
        out = T.softmax(Tensor([0.0, 0.0, 0.0]), axis=0)
        np.testing.assert_allclose(out.data, [1 / 3, 1 / 3, 1 / 3], atol=1e-15)

    def test_large_values_do_not_overflow(self):
        out = T.softmax(Tensor([1000.0, 1000.0]), axis=0)
        np.testing.assert_allclose(out.data, [0.5, 0.5], atol=1e-15)

    def test_matches_direct_formula(self):
        out = T.softmax(Tensor([1.0, 2.0, 3.0]), axis=0)
        exps = [math.exp(v - 3.0) for v in (1.0, 2.0, 3.0)]
        expected = [e / sum(exps) for e in exps]
        np.testing.assert_allclose(out.data, expected, rtol=1e-15)

    def test_slices_positive_and_normalized(self):
        rng = np.random.default_rng(2)
        x = Tensor(rng.normal(scale=10, size=(4, 5, 3)))
        for axis in range(3):
            out = T.softmax(x, axis=axis)
            assert (out.data > 0).all()
            np.testing.assert_allclose(out.data.sum(axis=axis), 1.0, atol=1e-9)

    def test_gradient(self):
        rng = np.random.default_rng(3)
        x = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
        w = rng.normal(size=(3, 4))  # weighting makes the gradient non-trivial
        (T.softmax(x, axis=1) * Tensor(w)).sum().backward()

        def f():
            e = np.exp(x.data - x.data.max(axis=1, keepdims=True))
            return float((e / e.sum(axis=1, keepdims=True) * w).sum())

        fd = finite_diff_grad(f, [x])
        assert_grads_close([x.grad], fd, rtol=1e-4)


class TestActivations:
    def test_leaky_relu_values(self):
        out = T.leaky_relu(Tensor([5.0, -5.0, 0.0]), slope=0.2)
        np.testing.assert_allclose(out.data, [5.0, -1.0, 0.0])

    def test_leaky_relu_slope_validation(self):
        with pytest.raises(ShapeError):
            T.leaky_relu(Tensor([1.0]), slope=1.5)

    def test_sigmoid_tanh_at_zero(self):
        assert T.sigmoid(Tensor(0.0)).item() == 0.5
        assert T.tanh(Tensor(0.0)).item() == 0.0

    def test_sigmoid_saturates_without_overflow(self):
        out = T.sigmoid(Tensor([1000.0, -1000.0]))
        np.testing.assert_allclose(out.data, [1.0, 0.0], atol=1e-12)

    def test_elu_values(self):
        out = T.elu(Tensor([2.0, 0.0, -1.0]))
        np.testing.assert_allclose(out.data, [2.0, 0.0, math.expm1(-1.0)], rtol=1e-15)

    @pytest.mark.parametrize("op", [T.leaky_relu, T.elu, T.sigmoid, T.tanh])
    def test_gradients(self, op):
        rng = np.random.default_rng(4)
        x = Tensor(rng.normal(size=7) + 0.05, requires_grad=True)  # keep clear of kinks
        op(x).sum().backward()
        fd = finite_diff_grad(lambda: float(np.sum(op(Tensor(x.data)).data)), [x])
        assert_grads_close([x.grad], fd, rtol=1e-4)


class TestShapeOps:
    def test_reshape_row_major_contract(self):
        out = Tensor(np.arange(1.0, 7.0).reshape(2, 3)).reshape((3, 2))
        np.testing.assert_array_equal(out.data, [[1, 2], [3, 4], [5, 6]])

    def test_reshape_roundtrip_is_identity(self):
        x = Tensor(np.arange(24.0).reshape(2, 3, 4))
        back = x.reshape((6, 4)).reshape((2, 3, 4))
        np.testing.assert_array_equal(back.data, x.data)

    def test_reshape_size_mismatch(self):
        with pytest.raises(ShapeError):
            Tensor(np.ones((2, 3))).reshape((4, 2))

    def test_concat_preserves_order(self):
        out = T.concat([Tensor([1.0, 2.0]), Tensor([3.0])], axis=0)
        np.testing.assert_array_equal(out.data, [1.0, 2.0, 3.0])

    def test_concat_gradient_splits(self):
        a = Tensor([[1.0, 2.0]], requires_grad=True)
        b = Tensor([[3.0, 4.0], [5.0, 6.0]], requires_grad=True)
        (T.concat([a, b], axis=0) * Tensor([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])).sum().backward()
        np.testing.assert_array_equal(a.grad, [[1.0, 2.0]])
        np.testing.assert_array_equal(b.grad, [[3.0, 4.0], [5.0, 6.0]])

    def test_concat_incompatible(self):
        with pytest.raises(ShapeError):
            T.concat([Tensor(np.ones((2, 2))), Tensor(np.ones((2, 3)))], axis=0)

    def test_transpose_gradient(self):
        rng = np.random.default_rng(5)
        x = Tensor(rng.normal(size=(2, 3, 4)), requires_grad=True)
        w = rng.normal(size=(4, 2, 3))
        (x.transpose((2, 0, 1)) * Tensor(w)).sum().backward()
        np.testing.assert_allclose(x.grad, w.transpose(1, 2, 0))

    def test_take_row_gradient(self):
        x = Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
        x[1].sum().backward()
        np.testing.assert_array_equal(x.grad, [[0, 0], [1, 1], [0, 0]])


class TestReductions:
    def test_sum_axis_gradient(self):
        rng = np.random.default_rng(6)
        x = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
        w = rng.normal(size=3)
        (x.sum(axis=1) * Tensor(w)).sum().backward()
        np.testing.assert_allclose(x.grad, np.repeat(w[:, None], 4, axis=1))

    def test_min_max_values(self):
        x = Tensor([[4.0, -2.0], [7.0, 1.0]])
        assert T.tensor_max(x).item() == 7.0
        assert T.tensor_min(x).item() == -2.0

    def test_max_subgradient_first_occurrence(self):
        x = Tensor([1.0, 3.0, 3.0], requires_grad=True)
        T.tensor_max(x).backward()
        np.testing.assert_array_equal(x.grad, [0.0, 1.0, 0.0])

    def test_min_max_gradient_against_fd(self):
        rng = np.random.default_rng(7)
        x = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
        (T.tensor_max(x) * 2.0 + T.tensor_min(x) * -3.0).backward()
        fd = finite_diff_grad(lambda: float(2 * x.data.max() - 3 * x.data.min()), [x])
        assert_grads_close([x.grad], fd, rtol=1e-5)


class TestBroadcasting:
    def test_outer_sum_gradients(self):
        rng = np.random.default_rng(8)
        a = Tensor(rng.normal(size=(4, 1)), requires_grad=True)
        b = Tensor(rng.normal(size=(1, 4)), requires_grad=True)
        w = rng.normal(size=(4, 4))
        ((a + b) * Tensor(w)).sum().backward()
        fd = finite_diff_grad(lambda: float(((a.data + b.data) * w).sum()), [a, b])
        assert_grads_close([a.grad, b.grad], fd, rtol=1e-6)

    def test_scalar_times_tensor(self):
        x = Tensor([[1.0, 2.0], [3.0, 4.0]], requires_grad=True)
        (x * 3.0).sum().backward()
        np.testing.assert_array_equal(x.grad, np.full((2, 2), 3.0))

    def test_bias_add_along_last_axis(self):
        x = Tensor(np.zeros((3, 2)), requires_grad=True)
        b = Tensor([1.0, 2.0], requires_grad=True)
        (x + b).sum().backward()
        np.testing.assert_array_equal(b.grad, [3.0, 3.0])
        np.testing.assert_array_equal(x.grad, np.ones((3, 2)))

    def test_power_gradient(self):
        rng = np.random.default_rng(9)
        x = Tensor(rng.uniform(0.5, 2.0, size=5), requires_grad=True)
        T.power(x, -0.5).sum().backward()
        fd = finite_diff_grad(lambda: float((x.data ** -0.5).sum()), [x])
        assert_grads_close([x.grad], fd, rtol=1e-4)


class TestBackward:
    def test_sum_gradient_is_ones(self):
        x = Tensor(np.zeros((2, 3, 4)), requires_grad=True)
        x.sum().backward()
        np.testing.assert_array_equal(x.grad, np.ones((2, 3, 4)))

    def test_elementwise_square(self):
        x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        (x * x).sum().backward()
        np.testing.assert_array_equal(x.grad, [2.0, 4.0, 6.0])

    def test_repeated_use_accumulates(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        (x + x).sum().backward()
        np.testing.assert_array_equal(x.grad, [2.0, 2.0])

    def test_second_backward_resets_then_accumulates(self):
        x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        loss = (x * x).sum()
        loss.backward()
        first = x.grad.copy()
        loss.backward()
        np.testing.assert_array_equal(x.grad, first)

    def test_non_scalar_loss_rejected(self):
        with pytest.raises(ShapeError):
            Tensor([1.0, 2.0], requires_grad=True).backward()

    def test_no_grad_suppresses_tape(self):
        x = Tensor([1.0], requires_grad=True)
        with T.no_grad():
            y = (x * x).sum()
        assert y._backward_fn is None and not y.requires_grad


class TestNumericGuards:
    def test_non_finite_construction_rejected(self):
        with pytest.raises(NumericError):
            Tensor([np.nan])

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_overflowing_op_aborts_with_op_name(self):
        big = Tensor([1e308])
        with pytest.raises(NumericError, match="mul"):
            big * big

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_division_by_zero_detected(self):
        with pytest.raises(NumericError, match="power"):
            T.power(Tensor([0.0]), -1.0)


def test_determinism_bit_identical():
    def run():
        rng = np.random.default_rng(42)
        a = Tensor(rng.normal(size=(5, 5)), requires_grad=True)
        b = Tensor(rng.normal(size=(5, 5)), requires_grad=True)
        loss = T.softmax(T.matmul(a, b), axis=1).sum()
        loss.backward()
        return loss.item(), a.grad.copy(), b.grad.copy()

    l1, ga1, gb1 = run()
    l2, ga2, gb2 = run()
    assert l1 == l2
    assert (ga1 == ga2).all() and (gb1 == gb2).all()
