# Máscaras como PGM binario (P5, maxval 255): primer plano 255, fondo 0

import os

import numpy as np
from PIL import Image

from utils.errors import DataError


def save_mask_pgm(path: str, mask: np.ndarray) -> str:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise DataError(f"La máscara debe ser 2D, forma {mask.shape}")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    Image.fromarray((mask > 0).astype(np.uint8) * 255).save(path, format="PPM")
    return path


def load_mask_pgm(path: str) -> np.ndarray:
    with Image.open(path) as image:
        if image.mode != "L":
            raise DataError(f"{path} no es una imagen en escala de grises")
        return (np.asarray(image) > 127).astype(np.uint8)
