# Fusión K-shot por votación con umbral

from typing import Sequence

import numpy as np

from utils.errors import ConfigError, ShapeError

NORMALIZATIONS = ("k", "max")


def kshot_fuse(masks: Sequence[np.ndarray], tau: float = 0.5, normalization: str = "k") -> np.ndarray:
    """
    Combina K máscaras binarias en una
    Args:
        masks: K predicciones binarias de igual forma
        tau: Umbral en (0, 1]
        normalization: 'k' divide los votos entre K; 'max' entre el máximo de votos de la imagen
    Returns:
        Máscara uint8; primer plano donde votos / normalizador >= tau
    """
    if len(masks) == 0:
        raise ShapeError("kshot_fuse: se necesita al menos una máscara")
    if not 0.0 < tau <= 1.0:
        raise ConfigError("tau", f"debe estar en (0, 1], recibido {tau}")
    if normalization not in NORMALIZATIONS:
        raise ConfigError("fusion_normalization", f"desconocida: {normalization}")
    shape = np.asarray(masks[0]).shape
    for index, mask in enumerate(masks):
        if np.asarray(mask).shape != shape:
            raise ShapeError(f"kshot_fuse: la máscara {index} tiene forma {np.asarray(mask).shape}, se esperaba {shape}")
    votes = np.sum([np.asarray(m, dtype=np.int64) for m in masks], axis=0)
    if normalization == "k":
        denominator = len(masks)
    else:
        denominator = int(votes.max())
        if denominator == 0:
            return np.zeros(shape, dtype=np.uint8)
    return (votes / denominator >= tau).astype(np.uint8)
