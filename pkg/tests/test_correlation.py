"""Máscara de soporte, correlación coseno e hipercorrelaciones."""

import numpy as np
import pytest

from tensor_core import Tensor
from tensor_core.gradcheck import gradcheck
from models.correlation import (
    FeaturePyramid, PyramidLayer, build_hypercorrelation, correlate, mask_support, resize_mask_nearest,
)
from utils.errors import DataError, ShapeError


def make_pyramid(rng, layers=(1, 2, 3), size=4, channels=3, mask=None):
    mask = np.ones((8, 8), dtype=np.uint8) if mask is None else mask
    entries = [PyramidLayer(l, rng.standard_normal((size, size, channels)),
                            rng.standard_normal((size, size, channels))) for l in layers]
    return FeaturePyramid(entries, mask, {"p": sorted(layers)})


class TestMaskSupport:

    def test_all_ones_mask_is_identity(self, rng):
        features = rng.standard_normal((4, 4, 3))
        out = mask_support(features, np.ones((8, 8), dtype=np.uint8))
        np.testing.assert_allclose(out.data, features.astype(np.float32))

    def test_all_zero_mask(self, rng):
        out = mask_support(rng.standard_normal((4, 4, 3)), np.zeros((8, 8), dtype=np.uint8))
        assert not np.any(out.data)

    def test_single_cell_mask(self, rng):
        features = rng.standard_normal((2, 2, 3))
        out = mask_support(features, np.array([[1, 0], [0, 0]], dtype=np.uint8)).data
        assert np.any(out[0, 0]) and not np.any(out[0, 1]) and not np.any(out[1])

    def test_non_binary_mask(self, rng):
        with pytest.raises(DataError):
            mask_support(rng.standard_normal((2, 2, 1)), np.array([[0, 2], [1, 0]]))

    def test_nearest_resize_uses_floor_index(self):
        mask = np.zeros((8, 8), dtype=np.uint8)
        mask[0:2, 4:6] = 1
        np.testing.assert_array_equal(resize_mask_nearest(mask, (4, 4))[0], [0, 0, 1, 0])


class TestCorrelate:

    def test_identical_and_opposite_vectors(self):
        q = np.array([[[1.0, 2.0]]])
        assert correlate(q, q).item() == pytest.approx(1.0, abs=1e-6)
        assert correlate(q, -q).item() == 0.0

    def test_cosine_oracle(self):
        out = correlate(np.array([[[1.0, 0.0]]]), np.array([[[1.0, 1.0]]]))
        assert out.item() == pytest.approx(0.70710678, abs=1e-6)

    def test_zero_vectors_give_zero(self, rng):
        out = correlate(rng.standard_normal((2, 2, 3)), np.zeros((2, 2, 3)))
        assert out.shape == (2, 2, 2, 2) and not np.any(out.data)

    def test_channel_mismatch(self, rng):
        with pytest.raises(ShapeError):
            correlate(rng.standard_normal((2, 2, 3)), rng.standard_normal((2, 2, 4)))

    def test_scale_invariance(self, float64, rng):
        q, s = rng.standard_normal((3, 3, 4)), rng.standard_normal((2, 2, 4))
        alpha = rng.uniform(0.1, 10.0, size=(3, 3, 1))
        beta = rng.uniform(0.1, 10.0, size=(2, 2, 1))
        np.testing.assert_allclose(correlate(alpha * q, beta * s).data, correlate(q, s).data, atol=1e-6)

    def test_values_in_unit_interval(self, rng):
        out = correlate(rng.standard_normal((4, 4, 5)), rng.standard_normal((3, 3, 5))).data
        assert out.min() >= 0.0 and out.max() <= 1.0 + 1e-6

    def test_swap_transposes(self, float64, rng):
        q, s = rng.standard_normal((3, 2, 4)), rng.standard_normal((2, 3, 4))
        forward = correlate(q, s).data
        swapped = correlate(s, q).data
        np.testing.assert_allclose(forward, np.transpose(swapped, (2, 3, 0, 1)), atol=1e-12)

    def test_gradient(self, float64, rng):
        q = Tensor(rng.standard_normal((2, 2, 3)), requires_grad=True)
        s = Tensor(rng.standard_normal((2, 2, 3)), requires_grad=True)
        assert max(gradcheck(correlate, [q, s]).values()) <= 1e-5


class TestHypercorrelation:

    def test_single_layer_adds_trailing_axis(self, rng):
        pyramid = make_pyramid(rng, layers=(4,))
        out = build_hypercorrelation(pyramid, "p")
        entry = pyramid.layer(4)
        np.testing.assert_array_equal(out.data[..., 0], correlate(entry.query_map, entry.support_map).data)

    def test_slices_follow_ascending_layers(self, rng):
        pyramid = make_pyramid(rng, layers=(7, 2, 5))
        pyramid.groups = {"p": [7, 2, 5]}
        out = build_hypercorrelation(pyramid, "p")
        assert out.shape == (4, 4, 4, 4, 3)
        for index, layer in enumerate([2, 5, 7]):
            entry = pyramid.layer(layer)
            np.testing.assert_array_equal(out.data[..., index],
                                          correlate(entry.query_map, entry.support_map).data)

    def test_heterogeneous_sizes_rejected(self, rng):
        pyramid = make_pyramid(rng, layers=(1,))
        pyramid.layers.append(PyramidLayer(2, rng.standard_normal((2, 2, 3)), rng.standard_normal((2, 2, 3))))
        pyramid.groups = {"p": [1, 2]}
        with pytest.raises(ShapeError):
            build_hypercorrelation(pyramid, "p")
        with pytest.raises(ShapeError):
            pyramid.validate()

    def test_full_scale_query_grid(self, rng):
        for size in (32, 8):
            pyramid = make_pyramid(rng, layers=(1,), size=size, channels=2)
            assert build_hypercorrelation(pyramid, "p").shape[:2] == (size, size)
