# Tipos de datos de un episodio few-shot

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from models.correlation import FeaturePyramid, PyramidLayer, check_binary_mask
from utils.errors import ShapeError


@dataclass
class SupportShot:
    """Un ejemplo de soporte: rasgos por capa y máscara a resolución de imagen"""

    features: Dict[int, np.ndarray]
    mask: np.ndarray


@dataclass
class Episode:
    """
    Episodio: K soportes, una consulta y su máscara verdadera.
    En modo flujo la consulta trae puntos clave y sus correspondencias
    en el soporte (coordenadas (y, x) en la rejilla de salida).
    """

    query_features: Dict[int, np.ndarray]
    affinity: List[np.ndarray]
    shots: List[SupportShot]
    query_mask: np.ndarray
    class_id: int
    fold_id: int
    seed: int
    split: str = "train"
    query_keypoints: Optional[np.ndarray] = None
    support_keypoints: Optional[np.ndarray] = None
    meta: Dict[str, object] = field(default_factory=dict)

    @property
    def num_shots(self) -> int:
        return len(self.shots)

    def pyramid(self, shot: int, groups: Dict[str, List[int]]) -> FeaturePyramid:
        """Pirámide consulta/soporte para el soporte `shot`"""
        support = self.shots[shot]
        layers = [
            PyramidLayer(layer, self.query_features[layer], support.features[layer])
            for layer in sorted(self.query_features)
        ]
        return FeaturePyramid(layers=layers, support_mask=support.mask, groups=groups)

    def validate(self):
        if not self.shots:
            raise ShapeError("El episodio no tiene soportes")
        reference = {k: v.shape for k, v in self.shots[0].features.items()}
        for index, shot in enumerate(self.shots):
            check_binary_mask(shot.mask)
            if {k: v.shape for k, v in shot.features.items()} != reference:
                raise ShapeError(f"El soporte {index} no comparte formas con el soporte 0")
            if shot.mask.shape != self.shots[0].mask.shape:
                raise ShapeError(f"La máscara del soporte {index} tiene forma {shot.mask.shape}")
        check_binary_mask(self.query_mask)

    def with_shots(self, count: int) -> "Episode":
        """Copia superficial con los primeros `count` soportes"""
        if count < 1 or count > len(self.shots):
            raise ShapeError(f"Se pidieron {count} soportes de {len(self.shots)}")
        return Episode(self.query_features, self.affinity, self.shots[:count], self.query_mask,
                       self.class_id, self.fold_id, self.seed, self.split,
                       self.query_keypoints, self.support_keypoints, dict(self.meta))
