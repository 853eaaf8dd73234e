# Formato de directorio para pirámides de rasgos y episodios
# manifest.json + un blob por mapa; la carga valida manifiesto contra blobs

import json
import os
from typing import Any, Dict, List

import numpy as np

from episodes.episode import Episode, SupportShot
from models.correlation import FeaturePyramid, PyramidLayer
from utils.errors import DataError
from utils.serialization import load_tensor, save_tensor


def _load_checked(path: str, shape: List[int]) -> np.ndarray:
    array, meta = load_tensor(path)
    if list(array.shape) != list(shape):
        raise DataError(f"{path}: el manifiesto declara {shape} y el blob tiene {list(array.shape)}")
    return array


def _read_manifest(directory: str) -> Dict[str, Any]:
    path = os.path.join(directory, "manifest.json")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as error:
        raise DataError(f"Manifiesto ilegible {path}: {error}") from None


def save_feature_pyramid(directory: str, pyramid: FeaturePyramid) -> str:
    levels = []
    for entry in pyramid.layers:
        save_tensor(os.path.join(directory, f"query_l{entry.layer}"), entry.query_map, f"query_l{entry.layer}")
        save_tensor(os.path.join(directory, f"support_l{entry.layer}"), entry.support_map, f"support_l{entry.layer}")
        levels.append({"layer": entry.layer, "query_shape": list(entry.query_map.shape),
                       "support_shape": list(entry.support_map.shape)})
    save_tensor(os.path.join(directory, "support_mask"), pyramid.support_mask, "support_mask")
    manifest = {"kind": "feature_pyramid", "layers": levels, "groups": pyramid.groups,
                "mask_shape": list(pyramid.support_mask.shape)}
    with open(os.path.join(directory, "manifest.json"), 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return directory


def load_feature_pyramid(directory: str) -> FeaturePyramid:
    """
    Carga una pirámide validando formas bit a bit contra el manifiesto
    Raises:
        DataError si falta un blob o su forma no coincide
    """
    manifest = _read_manifest(directory)
    layers = [
        PyramidLayer(
            int(level["layer"]),
            _load_checked(os.path.join(directory, f"query_l{level['layer']}"), level["query_shape"]),
            _load_checked(os.path.join(directory, f"support_l{level['layer']}"), level["support_shape"]),
        )
        for level in manifest["layers"]
    ]
    mask = _load_checked(os.path.join(directory, "support_mask"), manifest["mask_shape"]).astype(np.uint8)
    groups = {name: [int(i) for i in members] for name, members in manifest["groups"].items()}
    pyramid = FeaturePyramid(layers, mask, groups)
    pyramid.validate()
    return pyramid


def save_episode(directory: str, episode: Episode) -> str:
    """Volcado de un episodio: rasgos de consulta, afinidad, soportes y máscaras"""
    os.makedirs(directory, exist_ok=True)
    entries: Dict[str, List[int]] = {}

    def put(name: str, array: np.ndarray):
        save_tensor(os.path.join(directory, name), array, name)
        entries[name] = list(np.shape(array))

    for layer, array in episode.query_features.items():
        put(f"query_l{layer}", array)
    for stage, array in enumerate(episode.affinity):
        put(f"affinity_s{stage}", array)
    for k, shot in enumerate(episode.shots):
        for layer, array in shot.features.items():
            put(f"shot{k}_l{layer}", array)
        put(f"shot{k}_mask", shot.mask)
    put("query_mask", episode.query_mask)
    if episode.query_keypoints is not None:
        put("query_keypoints", episode.query_keypoints)
        put("support_keypoints", episode.support_keypoints)
    manifest = {
        "kind": "episode", "class_id": episode.class_id, "fold_id": episode.fold_id, "seed": episode.seed,
        "split": episode.split, "layers": sorted(episode.query_features), "stages": len(episode.affinity),
        "shots": episode.num_shots, "entries": entries,
        "meta": episode.meta,
    }
    with open(os.path.join(directory, "manifest.json"), 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return directory


def load_episode(directory: str) -> Episode:
    manifest = _read_manifest(directory)
    entries = manifest["entries"]

    def get(name: str) -> np.ndarray:
        if name not in entries:
            raise DataError(f"El manifiesto de {directory} no declara {name}")
        return _load_checked(os.path.join(directory, name), entries[name])

    def keypoints(name: str):
        return get(name).astype(np.int64) if name in entries else None

    layers = manifest["layers"]
    shots = [
        SupportShot({layer: get(f"shot{k}_l{layer}") for layer in layers}, get(f"shot{k}_mask").astype(np.uint8))
        for k in range(manifest["shots"])
    ]
    return Episode(
        query_features={layer: get(f"query_l{layer}") for layer in layers},
        affinity=[get(f"affinity_s{s}") for s in range(manifest["stages"])],
        shots=shots,
        query_mask=get("query_mask").astype(np.uint8),
        class_id=manifest["class_id"], fold_id=manifest["fold_id"], seed=manifest["seed"],
        split=manifest["split"],
        query_keypoints=keypoints("query_keypoints"),
        support_keypoints=keypoints("support_keypoints"),
        meta=dict(manifest.get("meta", {})),
    )


def load_episodes(directory: str) -> List[Episode]:
    """
    Carga un volcado (manifest.json en `directory`) o todos los volcados
    de sus subcarpetas, en orden alfabético
    Raises:
        DataError si no hay ningún episodio o algún blob no coincide con su manifiesto
    """
    if os.path.exists(os.path.join(directory, "manifest.json")):
        return [load_episode(directory)]
    if not os.path.isdir(directory):
        raise DataError(f"No existe el directorio de episodios {directory}")
    dumps = sorted(name for name in os.listdir(directory)
                   if os.path.exists(os.path.join(directory, name, "manifest.json")))
    if not dumps:
        raise DataError(f"{directory} no contiene volcados de episodios")
    return [load_episode(os.path.join(directory, name)) for name in dumps]
