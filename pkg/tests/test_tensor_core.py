"""Operaciones del núcleo de tensores: valores, gradientes y contabilidad de memoria."""

import itertools

import numpy as np
import pytest

from tensor_core import (
    OpGraph, Tensor, backward, default_dtype, forward_op, memory_tracker, no_grad, ops,
)
from tensor_core.gradcheck import gradcheck
from utils.errors import NumericError, ShapeError


def leaf(rng, *shape):
    return Tensor(rng.standard_normal(shape), requires_grad=True)


def brute_conv4d(x, w, b, padding):
    """Convolución 4D con bucles explícitos"""
    xp = np.pad(x, [(p, p) for p in padding] + [(0, 0)])
    k = w.shape[:4]
    out_extent = tuple(n + 2 * p - kk + 1 for n, p, kk in zip(x.shape[:4], padding, k))
    out = np.zeros(out_extent + (w.shape[5],))
    for pos in itertools.product(*(range(o) for o in out_extent)):
        acc = b.copy()
        for off in itertools.product(*(range(kk) for kk in k)):
            src = tuple(p + o for p, o in zip(pos, off))
            acc += xp[src] @ w[off]
        out[pos] = acc
    return out


class TestElementwiseAndGraph:

    def test_broadcast_add_gradient_sums_over_broadcast_axes(self):
        a = Tensor(np.ones((2, 3)), requires_grad=True)
        b = Tensor(np.ones(3), requires_grad=True)
        ops.sum_(ops.add(a, b)).backward()
        np.testing.assert_array_equal(b.grad, np.full(3, 2.0))
        np.testing.assert_array_equal(a.grad, np.ones((2, 3)))

    def test_shared_node_accumulates_gradient(self):
        x = Tensor(np.array([3.0]), requires_grad=True)
        y = ops.mul(x, x)
        ops.sum_(ops.add(y, y)).backward()
        np.testing.assert_allclose(x.grad, [12.0])

    def test_graph_lists_each_node_once(self):
        x = Tensor(np.ones(2), requires_grad=True)
        y = ops.add(x, x)
        z = ops.sum_(ops.mul(y, y))
        graph = OpGraph(z)
        assert len({id(n) for n in graph.nodes}) == len(graph)
        assert graph.reverse()[0] is z

    def test_backward_requires_scalar_root(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ShapeError):
            backward(ops.mul(x, 2.0))

    def test_non_finite_output_raises(self):
        x = Tensor(np.array([-1.0]))
        with pytest.raises(NumericError):
            ops.log(x)

    def test_no_grad_skips_graph(self):
        x = Tensor(np.ones(2), requires_grad=True)
        with no_grad():
            y = ops.mul(x, 3.0)
        assert not y.requires_grad and y.is_leaf

    def test_forward_op_by_name(self):
        x = Tensor(np.array([[1.0, -2.0]]))
        np.testing.assert_array_equal(forward_op("relu", x).data, [[1.0, 0.0]])
        assert "conv4d" in ops.functional_names()

    def test_unknown_forward_op(self):
        with pytest.raises(ShapeError):
            forward_op("no_existe", Tensor(np.ones(1)))

    def test_operator_sugar(self, float64):
        x = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]), requires_grad=True)
        ops.sum_((x * 2 + 1 - x) ** 2).backward()
        np.testing.assert_allclose(x.grad, 2 * (x.data + 1))
        np.testing.assert_allclose((1 - x).data, 1 - x.data)
        np.testing.assert_allclose((-x / 2).data, -x.data / 2)
        np.testing.assert_allclose((x @ x).data, x.data @ x.data)
        np.testing.assert_array_equal(x[1].data, [3.0, 4.0])

    def test_detach_cuts_graph(self):
        x = Tensor(np.ones(2), requires_grad=True)
        d = ops.mul(x, 2.0).detach()
        assert not d.requires_grad and d.is_leaf


class TestGradients:

    @pytest.mark.parametrize("name", ["exp", "sqrt_pos", "sigmoid", "gelu", "softmax", "log_softmax"])
    def test_unary_ops(self, float64, rng, name):
        x = leaf(rng, 3, 4)
        fns = {
            "exp": ops.exp,
            "sqrt_pos": lambda t: ops.sqrt(ops.add(ops.mul(t, t), 1.0)),
            "sigmoid": ops.sigmoid,
            "gelu": ops.gelu,
            "softmax": lambda t: ops.softmax(t, axis=-1),
            "log_softmax": lambda t: ops.log_softmax(t, axis=-1),
        }
        assert gradcheck(fns[name], [x])[0] <= 1e-5

    def test_matmul_and_linear(self, float64, rng):
        a, b, bias = leaf(rng, 2, 3, 4), leaf(rng, 4, 5), leaf(rng, 5)
        errors = gradcheck(lambda x, w, c: ops.linear(ops.matmul(x, ops.permute(x, (0, 2, 1))) @ x, w, c),
                           [a, b, bias])
        assert max(errors.values()) <= 1e-5

    def test_layer_norm(self, float64, rng):
        x, w, b = leaf(rng, 3, 6), leaf(rng, 6), leaf(rng, 6)
        assert max(gradcheck(lambda *t: ops.layer_norm(*t), [x, w, b]).values()) <= 1e-5

    def test_group_norm(self, float64, rng):
        x, w, b = leaf(rng, 2, 2, 2, 2, 4), leaf(rng, 4), leaf(rng, 4)
        errors = gradcheck(lambda t, ww, bb: ops.group_norm(t, 2, ww, bb), [x, w, b])
        assert max(errors.values()) <= 1e-5

    def test_conv4d(self, float64, rng):
        x, w, b = leaf(rng, 3, 3, 3, 3, 2), leaf(rng, 3, 3, 3, 3, 2, 2), leaf(rng, 2)
        errors = gradcheck(lambda t, ww, bb: ops.conv4d(t, ww, bb, padding=(1, 1, 1, 1)), [x, w, b])
        assert max(errors.values()) <= 1e-5

    def test_maxpool4d(self, float64):
        values = np.random.default_rng(5).permutation(64).astype(np.float64).reshape(2, 4, 2, 4, 1)
        x = Tensor(values, requires_grad=True)
        assert gradcheck(lambda t: ops.maxpool4d(t, (2, 2, 1, 2)), [x], eps=1e-3)[0] <= 1e-5

    def test_interp2d(self, float64, rng):
        x = leaf(rng, 3, 2, 2, 3)
        assert gradcheck(lambda t: ops.interp2d(t, (6, 4), axes=(0, 1)), [x])[0] <= 1e-5

    def test_take_roll_pad_concat(self, float64, rng):
        x, y = leaf(rng, 4, 3), leaf(rng, 2, 3)
        index = np.array([0, 3, 3, 1])

        def fn(a, b):
            rolled = ops.roll(ops.take(a, index, axis=0), [1], [0])
            return ops.concat([ops.pad(rolled, [(1, 0), (0, 0)]), b], axis=0)

        assert max(gradcheck(fn, [x, y]).values()) <= 1e-5

    def test_cross_entropy(self, float64, rng):
        logits = leaf(rng, 4, 4, 2)
        target = rng.integers(0, 2, size=(4, 4))
        assert gradcheck(lambda t: ops.cross_entropy(t, target), [logits])[0] <= 1e-5


class TestReductionsAndNorms:

    def test_sum_accumulates_left_to_right(self):
        values = np.random.default_rng(9).standard_normal(1000).astype(np.float32) * 1e3
        acc = np.float32(0.0)
        for v in values:
            acc = np.float32(acc + v)
        assert ops.sum_(Tensor(values)).item() == acc

    def test_sum_over_axes_matches_row_loop(self):
        values = np.random.default_rng(3).standard_normal((3, 200, 2)).astype(np.float32)
        out = ops.sum_(Tensor(values), axis=1).data
        for i, j in itertools.product(range(3), range(2)):
            acc = np.float32(0.0)
            for v in values[i, :, j]:
                acc = np.float32(acc + v)
            assert out[i, j] == acc

    def test_mean_keepdims_and_empty_axis(self):
        x = Tensor(np.arange(12, dtype=np.float32).reshape(3, 4))
        np.testing.assert_array_equal(ops.mean(x, axis=1, keepdims=True).data, [[1.5], [5.5], [9.5]])
        assert ops.sum_(Tensor(np.zeros((0, 3), dtype=np.float32)), axis=0).shape == (3,)

    @pytest.mark.parametrize("groups", [1, 2, 4])
    def test_group_norm_statistics(self, float64, rng, groups):
        x = Tensor(3.0 * rng.standard_normal((3, 4, 2, 8)) + 2.0)
        w, b = Tensor(np.ones(8)), Tensor(np.zeros(8))
        out = ops.group_norm(x, groups, w, b).data.reshape(-1, groups, 8 // groups)
        np.testing.assert_allclose(out.mean(axis=(0, 2)), 0.0, atol=1e-5)
        np.testing.assert_allclose(out.var(axis=(0, 2)), 1.0, atol=1e-4)

    def test_group_norm_rejects_uneven_groups(self, rng):
        with pytest.raises(ShapeError):
            ops.group_norm(Tensor(rng.standard_normal((2, 6))), 4)


class TestSpatialOps:

    def test_maxpool_row_major_example(self):
        x = Tensor(np.arange(16, dtype=np.float64).reshape(4, 4, 1, 1, 1))
        out = ops.maxpool4d(x, (2, 2, 1, 1), (2, 2, 1, 1))
        np.testing.assert_array_equal(out.data[..., 0, 0, 0], [[5, 7], [13, 15]])

    def test_maxpool_global_and_constant(self):
        x = Tensor(np.random.default_rng(0).standard_normal((2, 2, 2, 2, 3)))
        out = ops.maxpool4d(x, (2, 2, 2, 2))
        np.testing.assert_array_equal(out.data.reshape(3), x.data.reshape(-1, 3).max(axis=0))
        const = ops.maxpool4d(Tensor(np.full((4, 4, 2, 2, 1), 7.0)), (2, 2, 2, 2))
        assert const.shape == (2, 2, 1, 1, 1) and np.all(const.data == 7.0)

    def test_maxpool_routes_gradient_to_argmax(self):
        values = np.random.default_rng(1).standard_normal((4, 4, 2, 2, 2))
        x = Tensor(values, requires_grad=True)
        out = ops.maxpool4d(x, (2, 2, 2, 2))
        g = np.random.default_rng(2).standard_normal(out.shape)
        ops.sum_(ops.mul(out, Tensor(g))).backward()
        np.testing.assert_allclose(x.grad.sum(), g.sum(), rtol=1e-5)
        assert np.count_nonzero(x.grad) == out.data.size

    def test_maxpool_window_too_large(self):
        with pytest.raises(ShapeError):
            ops.maxpool4d(Tensor(np.ones((2, 2, 2, 2, 1))), (3, 1, 1, 1))

    def test_conv4d_delta_kernel_is_identity(self):
        x = Tensor(np.random.default_rng(3).standard_normal((3, 4, 2, 3, 1)))
        w = np.zeros((3, 3, 3, 3, 1, 1))
        w[1, 1, 1, 1, 0, 0] = 1.0
        out = ops.conv4d(x, Tensor(w), padding=(1, 1, 1, 1))
        np.testing.assert_allclose(out.data, x.data, atol=1e-6)

    def test_conv4d_ones_kernel_sums_81(self):
        out = ops.conv4d(Tensor(np.ones((3, 3, 3, 3, 1))), Tensor(np.ones((3, 3, 3, 3, 1, 1))))
        assert out.shape == (1, 1, 1, 1, 1) and out.item() == pytest.approx(81.0)

    def test_conv4d_matches_nested_loops(self, float64):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((5, 5, 5, 5, 2))
        w = rng.standard_normal((3, 3, 3, 3, 2, 3))
        b = rng.standard_normal(3)
        out = ops.conv4d(Tensor(x), Tensor(w), Tensor(b), padding=(1, 0, 1, 0))
        np.testing.assert_allclose(out.data, brute_conv4d(x, w, b, (1, 0, 1, 0)), atol=1e-5)

    def test_conv4d_non_positive_extent(self):
        with pytest.raises(ShapeError):
            ops.conv4d(Tensor(np.ones((2, 2, 2, 2, 1))), Tensor(np.ones((3, 3, 3, 3, 1, 1))))

    def test_interp2d_constant_and_oracle(self, float64):
        const = ops.interp2d(Tensor(np.full((2, 2, 3), 4.0)), (4, 4))
        np.testing.assert_allclose(const.data, 4.0)
        grid = Tensor(np.array([[0.0, 1.0], [1.0, 2.0]])[..., None])
        out = ops.interp2d(grid, (4, 4)).data[..., 0]
        row = np.array([0.0, 0.25, 0.75, 1.0])
        np.testing.assert_allclose(out, row[:, None] + row[None, :], atol=1e-12)


class TestMemoryTracker:

    def test_live_bytes_match_tensor_sizes(self):
        with memory_tracker.session() as tracker:
            tensors = [Tensor(np.zeros((16, 16))), Tensor(np.zeros(100)), Tensor(np.zeros((3, 5, 7)))]
            expected = sum(t.data.nbytes for t in tensors)
            assert abs(tracker.live_bytes - expected) <= 0.01 * expected
            assert tracker.peak_bytes >= tracker.live_bytes

    def test_inactive_tracker_ignores_allocations(self):
        memory_tracker.reset()
        Tensor(np.zeros(1000))
        assert memory_tracker.live_bytes == 0

    def test_default_dtype_context(self):
        with default_dtype(np.float64):
            assert Tensor([1.0]).dtype == np.float64
        assert Tensor([1.0]).dtype == np.float32
