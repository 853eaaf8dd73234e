"""Blobs con sidecar, checkpoints, pirámides en disco y máscaras PGM."""

import json
import os

import numpy as np
import pytest

from tensor_core import no_grad
from config.run_config import build_run_config
from episodes.optimizer import AdamW
from episodes.synthetic import SyntheticEpisodeGenerator
from models.correlation import FeaturePyramid, PyramidLayer
from models.hyperagg_model import HyperAggModel
from utils.checkpoint import load_checkpoint, read_manifest, save_checkpoint
from utils.errors import CheckpointError, DataError
from utils.feature_io import load_episode, load_feature_pyramid, save_episode, save_feature_pyramid
from utils.image_io import load_mask_pgm, save_mask_pgm
from utils.serialization import load_tensor, read_sidecar, save_tensor


class TestTensorBlobs:

    def test_sidecar_contents(self, tmp_path, rng):
        path = str(tmp_path / "x")
        save_tensor(path, rng.standard_normal((2, 3)), "pesos")
        meta = read_sidecar(path)
        assert meta == {"name": "pesos", "shape": [2, 3], "dtype": "float32-le", "bytes": 24}
        assert os.path.getsize(f"{path}.bin") == 24

    def test_load_is_float32_exact(self, tmp_path, rng):
        path = str(tmp_path / "x")
        data = rng.standard_normal((3, 4)).astype(np.float32)
        save_tensor(path, data)
        loaded, _ = load_tensor(path)
        assert loaded.dtype == np.float32
        assert np.array_equal(loaded, data)

    def test_truncated_blob(self, tmp_path, rng):
        path = str(tmp_path / "x")
        save_tensor(path, rng.standard_normal(8))
        with open(f"{path}.bin", 'r+b') as f:
            f.truncate(12)
        with pytest.raises(DataError):
            load_tensor(path)

    def test_missing_sidecar(self, tmp_path):
        with pytest.raises(DataError):
            load_tensor(str(tmp_path / "nada"))


class TestCheckpoint:

    def test_round_trip_gives_identical_forward(self, desk_config, tmp_path):
        model = HyperAggModel(desk_config, seed=1)
        optimizer = AdamW(model.named_parameters())
        directory = save_checkpoint(str(tmp_path / "ckpt"), model, desk_config, 7, optimizer)
        manifest = read_manifest(directory)
        assert manifest["step"] == 7
        assert manifest["config"]["preset"] == "desk"
        assert [p["name"] for p in manifest["parameters"]] == [n for n, _ in model.named_parameters()]

        restored = HyperAggModel(desk_config, seed=2)
        load_checkpoint(directory, restored, AdamW(restored.named_parameters()))
        episode = SyntheticEpisodeGenerator(desk_config).generate(3, shots=1)
        with no_grad():
            assert np.array_equal(model.forward_shot(episode).data, restored.forward_shot(episode).data)

    def test_mismatched_model(self, desk_config, tmp_path):
        model = HyperAggModel(desk_config)
        directory = save_checkpoint(str(tmp_path / "ckpt"), model, desk_config, 1)
        other_config = build_run_config("desk", {"aggregator": "conv4d"})
        with pytest.raises(CheckpointError):
            load_checkpoint(directory, HyperAggModel(other_config))

    def test_shape_mismatch_against_manifest(self, desk_config, tmp_path):
        model = HyperAggModel(desk_config)
        directory = save_checkpoint(str(tmp_path / "ckpt"), model, desk_config, 1)
        manifest = read_manifest(directory)
        manifest["parameters"][0]["shape"] = [1]
        with open(os.path.join(directory, "manifest.json"), 'w', encoding='utf-8') as f:
            json.dump(manifest, f)
        with pytest.raises(CheckpointError):
            load_checkpoint(directory)

    def test_unknown_version(self, desk_config, tmp_path):
        directory = save_checkpoint(str(tmp_path / "ckpt"), HyperAggModel(desk_config), desk_config, 1)
        path = os.path.join(directory, "manifest.json")
        with open(path, encoding='utf-8') as f:
            manifest = json.load(f)
        manifest["format_version"] = 99
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(manifest, f)
        with pytest.raises(CheckpointError):
            read_manifest(directory)

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(str(tmp_path / "nada"))


class TestFeatureIO:

    def test_pyramid_round_trip(self, tmp_path, rng):
        layers = [PyramidLayer(l, rng.standard_normal((4, 4, 3)).astype(np.float32),
                               rng.standard_normal((4, 4, 3)).astype(np.float32)) for l in (1, 2)]
        mask = (rng.uniform(size=(8, 8)) > 0.5).astype(np.uint8)
        pyramid = FeaturePyramid(layers, mask, {"p3": [1, 2]})
        loaded = load_feature_pyramid(save_feature_pyramid(str(tmp_path / "pyr"), pyramid))
        assert loaded.groups == {"p3": [1, 2]}
        np.testing.assert_array_equal(loaded.support_mask, mask)
        np.testing.assert_array_equal(loaded.layer(2).support_map, layers[1].support_map)

    def test_blob_disagreeing_with_manifest(self, tmp_path, rng):
        layers = [PyramidLayer(1, rng.standard_normal((4, 4, 3)), rng.standard_normal((4, 4, 3)))]
        directory = save_feature_pyramid(str(tmp_path / "pyr"),
                                         FeaturePyramid(layers, np.ones((8, 8), dtype=np.uint8), {"p": [1]}))
        save_tensor(os.path.join(directory, "query_l1"), rng.standard_normal((2, 4, 3)))
        with pytest.raises(DataError):
            load_feature_pyramid(directory)

    def test_episode_round_trip(self, desk_config, tmp_path):
        episode = SyntheticEpisodeGenerator(desk_config).generate(8, "test", 2, shots=2)
        loaded = load_episode(save_episode(str(tmp_path / "ep"), episode))
        assert (loaded.class_id, loaded.fold_id, loaded.seed, loaded.split) == (episode.class_id, 2, 8, "test")
        assert loaded.num_shots == 2
        np.testing.assert_array_equal(loaded.shots[1].mask, episode.shots[1].mask)
        np.testing.assert_allclose(loaded.query_features[3], episode.query_features[3], rtol=1e-6)
        loaded.validate()


class TestMaskPgm:

    def test_binary_p5_file(self, tmp_path):
        mask = np.array([[0, 1], [1, 0]], dtype=np.uint8)
        path = save_mask_pgm(str(tmp_path / "m.pgm"), mask)
        with open(path, 'rb') as f:
            assert f.read(2) == b"P5"
        np.testing.assert_array_equal(load_mask_pgm(path), mask)

    def test_rejects_non_2d(self, tmp_path):
        with pytest.raises(DataError):
            save_mask_pgm(str(tmp_path / "m.pgm"), np.zeros((2, 2, 2)))
