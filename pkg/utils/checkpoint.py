# Checkpoints en disco
# manifest.json (versión, configuración, paso, parámetros) + un blob por parámetro
# y, opcionalmente, el estado del optimizador en optimizer/

import json
import os
from typing import Any, Dict, Optional, Tuple

import numpy as np

from utils.errors import CheckpointError, DataError
from utils.logger import app_logger
from utils.serialization import load_tensor, save_tensor

FORMAT_VERSION = 1
MANIFEST = "manifest.json"


def _write_group(directory: str, state: Dict[str, np.ndarray]) -> list:
    entries = []
    for name in state:
        save_tensor(os.path.join(directory, name), state[name], name)
        entries.append({"name": name, "shape": list(np.shape(state[name]))})
    return entries


def save_checkpoint(directory: str, model, config, step: int, optimizer=None) -> str:
    """
    Guarda modelo, configuración y (opcional) optimizador
    Args:
        directory: Carpeta destino (se crea)
        model: BaseModel
        config: RunConfig usada
        step: Paso de entrenamiento
        optimizer: AdamW opcional
    Returns:
        Ruta de la carpeta
    """
    try:
        os.makedirs(directory, exist_ok=True)
        manifest: Dict[str, Any] = {
            "format_version": FORMAT_VERSION,
            "step": int(step),
            "config": config.to_dict(),
            "parameters": _write_group(os.path.join(directory, "params"), model.state_dict()),
            "optimizer": None,
        }
        if optimizer is not None:
            manifest["optimizer"] = _write_group(os.path.join(directory, "optimizer"), optimizer.state_dict())
        with open(os.path.join(directory, MANIFEST), 'w', encoding='utf-8') as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
        app_logger.log_checkpoint(directory, step, True)
        return directory
    except OSError as error:
        app_logger.log_checkpoint(directory, step, False)
        raise CheckpointError(f"No se pudo escribir el checkpoint {directory}: {error}") from None


def read_manifest(directory: str) -> Dict[str, Any]:
    path = os.path.join(directory, MANIFEST)
    if not os.path.exists(path):
        raise CheckpointError(f"No existe {path}")
    with open(path, 'r', encoding='utf-8') as f:
        manifest = json.load(f)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"Versión de checkpoint no soportada: {manifest.get('format_version')}")
    return manifest


def _read_group(directory: str, entries: list) -> Dict[str, np.ndarray]:
    state = {}
    for entry in entries:
        try:
            array, _ = load_tensor(os.path.join(directory, entry["name"]))
        except DataError as error:
            raise CheckpointError(str(error)) from None
        if list(array.shape) != list(entry["shape"]):
            raise CheckpointError(f"{entry['name']}: blob {list(array.shape)} vs manifiesto {entry['shape']}")
        state[entry["name"]] = array
    return state


def load_checkpoint(directory: str, model=None, optimizer=None) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """
    Lee un checkpoint y, si se pasan, carga modelo y optimizador
    Returns:
        (manifiesto, estado de parámetros)
    Raises:
        CheckpointError si los nombres o formas no coinciden con el modelo
    """
    manifest = read_manifest(directory)
    state = _read_group(os.path.join(directory, "params"), manifest["parameters"])
    if model is not None:
        model.load_state_dict(state)
    if optimizer is not None and manifest.get("optimizer"):
        optimizer.load_state_dict(_read_group(os.path.join(directory, "optimizer"), manifest["optimizer"]))
    app_logger.info(f"Checkpoint cargado: {directory} (paso {manifest['step']})")
    return manifest, state
