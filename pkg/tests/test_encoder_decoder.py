"""Codificador piramidal, decodificador de afinidad y modelo completo."""

import numpy as np
import pytest

from tensor_core import Tensor, ops
from tensor_core.gradcheck import gradcheck
from config.run_config import AGGREGATORS, build_run_config
from episodes.synthetic import SyntheticEpisodeGenerator
from models.aggregator_factory import AggregatorFactory
from models.decoder import AffinityDecoder, DecoderStage, hard_mask, pool_support
from models.encoder import PyramidEncoder, PyramidLevel, upsample_guidance
from models.hyperagg_model import HyperAggModel
from utils.errors import ConfigError, ShapeError


def wake_zero_projections(model, rng, scale=0.1):
    """Las proyecciones de salida arrancan en cero; se perturban para que el gradiente llegue a todo"""
    for name, tensor in model.named_parameters():
        if not np.any(tensor.data):
            tensor.data[...] = scale * rng.standard_normal(tensor.shape)


class TestUpsampleGuidance:

    def test_bilinear_two_to_four(self):
        coarse = np.zeros((2, 1, 1, 1, 1))
        coarse[:, 0, 0, 0, 0] = [1.0, 3.0]
        up = upsample_guidance(Tensor(coarse), (4, 1), (1, 1)).data[:, 0, 0, 0, 0]
        np.testing.assert_allclose(up, [1.0, 1.5, 2.5, 3.0], atol=1e-6)

    def test_constant_volume_stays_constant(self, rng):
        coarse = Tensor(np.full((2, 2, 4, 4, 3), 0.7))
        up = upsample_guidance(coarse, (4, 4), (4, 4))
        assert up.shape == (4, 4, 4, 4, 3)
        np.testing.assert_allclose(up.data, 0.7, atol=1e-6)

    def test_support_mismatch(self, rng):
        with pytest.raises(ShapeError):
            upsample_guidance(Tensor(rng.standard_normal((2, 2, 4, 4, 3))), (4, 4), (2, 2))


class TestPyramidEncoder:

    def test_single_level(self, desk_config, rng):
        level = desk_config.levels[0]
        module = PyramidLevel(desk_config, level, rng)
        out = module(Tensor(rng.uniform(0, 1, (4, 4, 4, 4, 1))))
        assert out.shape == (2, 2, 4, 4, 16)

    def test_coarse_to_fine_outputs(self, desk_config, rng):
        encoder = PyramidEncoder(desk_config, rng)
        correlations = [
            Tensor(rng.uniform(0, 1, (lv.query_size, lv.query_size, lv.support_size, lv.support_size,
                                      lv.num_layers)))
            for lv in desk_config.levels
        ]
        outputs = encoder.forward_levels(correlations)
        assert [o.shape for o in outputs] == [(2, 2, 4, 4, 16), (4, 4, 4, 4, 16), (8, 8, 4, 4, 16)]

    def test_wrong_number_of_levels(self, desk_config, rng):
        encoder = PyramidEncoder(desk_config, rng)
        with pytest.raises(ShapeError):
            encoder([Tensor(rng.uniform(0, 1, (4, 4, 4, 4, 1)))])

    def test_coarsest_level_is_aggregator_of_embedding(self, desk_config, rng):
        encoder = PyramidEncoder(desk_config, rng)
        wake_zero_projections(encoder, rng)
        correlations = [
            Tensor(rng.uniform(0, 1, (lv.query_size, lv.query_size, lv.support_size, lv.support_size,
                                      lv.num_layers)))
            for lv in desk_config.levels
        ]
        coarse = encoder.levels[0]
        expected = coarse.aggregator(coarse.embedding(correlations[0]))
        np.testing.assert_array_equal(encoder.forward_levels(correlations)[0].data, expected.data)

    def test_zeroing_coarse_correlation_changes_finest_output(self, desk_config, rng):
        encoder = PyramidEncoder(desk_config, rng)
        wake_zero_projections(encoder, rng)
        correlations = [
            Tensor(rng.uniform(0, 1, (lv.query_size, lv.query_size, lv.support_size, lv.support_size,
                                      lv.num_layers)))
            for lv in desk_config.levels
        ]
        silenced = [Tensor(np.zeros(correlations[0].shape))] + correlations[1:]
        full, without_coarse = encoder(correlations).data, encoder(silenced).data
        assert np.max(np.abs(full - without_coarse)) > 1e-6

    def test_coarse_level_receives_gradient_through_guidance(self, desk_config, rng):
        encoder = PyramidEncoder(desk_config, rng)
        wake_zero_projections(encoder, rng)
        correlations = [
            Tensor(rng.uniform(0, 1, (lv.query_size, lv.query_size, lv.support_size, lv.support_size,
                                      lv.num_layers)))
            for lv in desk_config.levels
        ]
        out = encoder(correlations)
        ops.sum_(ops.mul(out, Tensor(rng.standard_normal(out.shape)))).backward()
        coarse = [t for n, t in encoder.named_parameters() if n.startswith("p5.")]
        assert coarse and all(np.any(t.grad != 0) for t in coarse)


class TestDecoder:

    def test_pool_support_mean(self):
        volume = np.zeros((1, 1, 2, 2, 1))
        volume[0, 0, :, :, 0] = [[1.0, 2.0], [3.0, 6.0]]
        np.testing.assert_allclose(pool_support(Tensor(volume)).data, [[[3.0]]])

    def test_pool_support_gradient(self, float64, rng):
        volume = Tensor(rng.standard_normal((2, 2, 3, 2, 2)), requires_grad=True)
        assert gradcheck(pool_support, [volume])[0] <= 1e-5

    def test_pool_support_rank(self, rng):
        with pytest.raises(ShapeError):
            pool_support(Tensor(rng.standard_normal((2, 2, 2))))

    def test_hard_mask_ties_go_to_background(self):
        logits = np.array([[[0.0, 0.0], [0.0, 1.0]], [[2.0, -1.0], [-3.0, -3.0]]])
        np.testing.assert_array_equal(hard_mask(logits), [[0, 1], [0, 0]])

    def test_zeroed_projection_ignores_affinity(self, desk_config, rng):
        stage = DecoderStage(desk_config, 0, rng)
        stage.proj_weight.data[...] = 0.0
        pooled = Tensor(rng.standard_normal((8, 8, 16)))
        a = stage(pooled, rng.standard_normal((8, 8, 16))).data
        b = stage(pooled, rng.standard_normal((8, 8, 16))).data
        np.testing.assert_array_equal(a, b)

    def test_affinity_extent_mismatch(self, desk_config, rng):
        stage = DecoderStage(desk_config, 0, rng)
        with pytest.raises(ShapeError):
            stage(Tensor(rng.standard_normal((8, 8, 16))), rng.standard_normal((4, 4, 16)))

    def test_missing_affinity(self, desk_config, rng):
        stage = DecoderStage(desk_config, 0, rng)
        with pytest.raises(ShapeError):
            stage(Tensor(rng.standard_normal((8, 8, 16))))

    def test_stages_double_resolution(self, desk_config, rng):
        decoder = AffinityDecoder(desk_config, rng)
        affinity = [rng.standard_normal((s, s, c)) for s, c in zip((8, 16, 32), desk_config.affinity_channels)]
        decoded = decoder(Tensor(rng.standard_normal((8, 8, 4, 4, 16))), affinity)
        assert decoded.shape == (32, 32, 16)
        assert decoder.predict_mask(decoded).shape == (32, 32, 2)

    def test_predict_flow_needs_flow_task(self, desk_config, rng):
        decoder = AffinityDecoder(desk_config, rng)
        with pytest.raises(ConfigError):
            decoder.predict_flow(Tensor(rng.standard_normal((8, 8, 16))))

    def test_without_affinity_branch(self, tmp_path, rng):
        config = build_run_config("desk", {"use_affinity": False, "out": str(tmp_path)})
        decoder = AffinityDecoder(config, rng)
        assert decoder(Tensor(rng.standard_normal((8, 8, 4, 4, 16))), None).shape == (32, 32, 16)


class TestHyperAggModel:

    @pytest.fixture
    def episode(self, desk_config):
        return SyntheticEpisodeGenerator(desk_config).generate(5, "train", 0, shots=2)

    def test_mask_logits_shape_and_finite_gradients(self, desk_config, episode):
        model = HyperAggModel(desk_config)
        wake_zero_projections(model, np.random.default_rng(2))
        logits = model.forward_shot(episode, 0)
        assert logits.shape == (32, 32, 2)
        ops.cross_entropy(logits, episode.query_mask).backward()
        for name, tensor in model.named_parameters():
            assert tensor.grad is not None and np.all(np.isfinite(tensor.grad)), name
            assert np.any(tensor.grad != 0), name

    def test_same_seed_same_parameters(self, desk_config):
        a = HyperAggModel(desk_config, seed=3).state_dict()
        b = HyperAggModel(desk_config, seed=3).state_dict()
        assert a.keys() == b.keys()
        assert all(np.array_equal(a[k], b[k]) for k in a)

    def test_same_seed_same_forward(self, desk_config, episode):
        first = HyperAggModel(desk_config, seed=3)
        second = HyperAggModel(desk_config, seed=3)
        for model in (first, second):
            wake_zero_projections(model, np.random.default_rng(8))
        np.testing.assert_array_equal(first.forward_shot(episode, 1).data, second.forward_shot(episode, 1).data)
        np.testing.assert_array_equal(first.forward_shot(episode, 0).data, first.forward_shot(episode, 0).data)

    def test_predict_shots_one_mask_per_support(self, desk_config, episode):
        masks = HyperAggModel(desk_config).predict_shots(episode)
        assert len(masks) == 2
        assert all(m.shape == (32, 32) and m.dtype == np.uint8 for m in masks)

    @pytest.mark.parametrize("aggregator", ["conv4d", "identity"])
    def test_other_aggregators(self, tmp_path, aggregator):
        config = build_run_config("desk", {"aggregator": aggregator, "out": str(tmp_path)})
        episode = SyntheticEpisodeGenerator(config).generate(1, "train", 0, shots=1)
        assert HyperAggModel(config).forward_shot(episode).shape == (32, 32, 2)

    def test_flow_task_output(self, tmp_path):
        config = build_run_config("desk", {"task": "flow", "out": str(tmp_path)})
        episode = SyntheticEpisodeGenerator(config).generate_flow(4)
        flow = HyperAggModel(config).predict_flow(episode)
        assert flow.shape == (8, 8, 2)


class TestAggregatorFactory:

    def test_registry_matches_config_choices(self):
        assert sorted(AggregatorFactory.get_supported_aggregators()) == sorted(AGGREGATORS)

    def test_unknown_name(self, desk_config, rng):
        with pytest.raises(ConfigError):
            AggregatorFactory.create_aggregator("lstm", desk_config, desk_config.levels[0], rng)

    def test_conv4d_and_identity_keep_shape(self, desk_config, rng):
        volume = Tensor(rng.standard_normal((2, 2, 4, 4, 16)))
        for name in ("conv4d", "identity"):
            aggregator = AggregatorFactory.create_aggregator(name, desk_config, desk_config.levels[0], rng)
            assert aggregator(volume).shape == volume.shape
        identity = AggregatorFactory.create_aggregator("identity", desk_config, desk_config.levels[0], rng)
        assert identity(volume) is volume
