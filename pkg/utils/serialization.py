# Serialización de tensores
# Blob binario float32 little-endian row-major + sidecar JSON (nombre, forma, dtype)

import json
import os
from typing import Any, Dict, Tuple

import numpy as np

from utils.errors import DataError

BLOB_DTYPE = np.dtype("<f4")
DTYPE_NAME = "float32-le"


def save_tensor(path: str, array: np.ndarray, name: str = "") -> Dict[str, Any]:
    """
    Guarda un tensor como `path.bin` + `path.json`
    Args:
        path: Ruta base sin extensión
        array: Datos a guardar
        name: Nombre lógico del tensor
    Returns:
        Metadatos escritos en el sidecar
    """
    data = np.ascontiguousarray(np.asarray(array), dtype=BLOB_DTYPE)
    meta = {"name": name, "shape": list(data.shape), "dtype": DTYPE_NAME, "bytes": int(data.nbytes)}
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(f"{path}.json", 'w', encoding='utf-8') as f:
        json.dump(meta, f, indent=2, sort_keys=True)
    with open(f"{path}.bin", 'wb') as f:
        f.write(data.tobytes(order="C"))
    return meta


def read_sidecar(path: str) -> Dict[str, Any]:
    try:
        with open(f"{path}.json", 'r', encoding='utf-8') as f:
            meta = json.load(f)
    except (OSError, json.JSONDecodeError) as error:
        raise DataError(f"Sidecar ilegible {path}.json: {error}") from None
    if meta.get("dtype") != DTYPE_NAME or not isinstance(meta.get("shape"), list):
        raise DataError(f"Sidecar inválido {path}.json: {meta}")
    return meta


def load_tensor(path: str) -> Tuple[np.ndarray, Dict[str, Any]]:
    """
    Carga un tensor validando forma y tamaño contra el sidecar
    Returns:
        (array float32, metadatos)
    Raises:
        DataError si el blob no coincide exactamente con la forma declarada
    """
    meta = read_sidecar(path)
    shape = tuple(int(s) for s in meta["shape"])
    expected = int(np.prod(shape, dtype=np.int64)) * BLOB_DTYPE.itemsize
    try:
        with open(f"{path}.bin", 'rb') as f:
            raw = f.read()
    except OSError as error:
        raise DataError(f"Blob ilegible {path}.bin: {error}") from None
    if len(raw) != expected:
        raise DataError(
            f"El blob {path}.bin tiene {len(raw)} bytes; la forma {list(shape)} requiere {expected}"
        )
    array = np.frombuffer(raw, dtype=BLOB_DTYPE).reshape(shape).astype(np.float32)
    return array, meta
