# Correlación enmascarada multinivel
# Máscara de soporte, correlación coseno con ReLU e hipercorrelaciones por nivel

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from tensor_core import Tensor, ops
from utils.errors import DataError, ShapeError

NORM_FLOOR = 1e-8


@dataclass
class PyramidLayer:
    """Mapas de una capa del backbone"""

    layer: int
    query_map: np.ndarray
    support_map: np.ndarray


@dataclass
class FeaturePyramid:
    """
    Pirámide de características de un par consulta/soporte.
    groups asocia cada nivel (p5, p4, ...) a las capas que comparten tamaño.
    """

    layers: List[PyramidLayer]
    support_mask: np.ndarray
    groups: Dict[str, List[int]] = field(default_factory=dict)

    def layer(self, index: int) -> PyramidLayer:
        for entry in self.layers:
            if entry.layer == index:
                return entry
        raise ShapeError(f"La capa {index} no está en la pirámide")

    def validate(self):
        """
        Comprueba las invariantes de la pirámide
        Raises:
            DataError si la máscara no es binaria
            ShapeError si un grupo mezcla tamaños o falta una capa
        """
        check_binary_mask(self.support_mask)
        for entry in self.layers:
            if entry.query_map.ndim != 3 or entry.support_map.ndim != 3:
                raise ShapeError(f"Capa {entry.layer}: se esperaban mapas [h, w, c]")
            if entry.query_map.shape[-1] < 1 or entry.query_map.shape[-1] != entry.support_map.shape[-1]:
                raise ShapeError(
                    f"Capa {entry.layer}: canales incompatibles {entry.query_map.shape} y {entry.support_map.shape}"
                )
        for name, members in self.groups.items():
            if not members:
                raise ShapeError(f"El grupo {name} está vacío")
            entries = [self.layer(index) for index in members]
            query_sizes = {e.query_map.shape[:2] for e in entries}
            support_sizes = {e.support_map.shape[:2] for e in entries}
            if len(query_sizes) > 1 or len(support_sizes) > 1:
                raise ShapeError(
                    f"El grupo {name} mezcla tamaños espaciales: consulta {sorted(query_sizes)}, "
                    f"soporte {sorted(support_sizes)}"
                )


def check_binary_mask(mask: np.ndarray):
    values = np.unique(np.asarray(mask))
    if not np.all(np.isin(values, (0, 1))):
        raise DataError(f"La máscara debe ser binaria, valores encontrados: {values[:6].tolist()}")


def resize_mask_nearest(mask: np.ndarray, size: Sequence[int]) -> np.ndarray:
    """
    Redimensiona una máscara binaria por vecino más cercano
    Args:
        mask: Array [H, W]
        size: (h, w) destino
    Returns:
        Array [h, w]; la celda i toma la fila floor(i·H/h)
    """
    height, width = mask.shape
    rows = (np.arange(size[0]) * height) // size[0]
    cols = (np.arange(size[1]) * width) // size[1]
    return np.asarray(mask)[np.ix_(rows, cols)]


def mask_support(support_map: Union[Tensor, np.ndarray], mask: np.ndarray) -> Tensor:
    """
    Anula las características de soporte fuera de la máscara
    Args:
        support_map: Mapa [h, w, c]
        mask: Máscara binaria a resolución de imagen [H, W]
    Returns:
        Tensor [h, w, c] = F_s ⊙ ψ(m_s)
    """
    check_binary_mask(mask)
    support_map = ops.as_tensor(support_map)
    resized = resize_mask_nearest(mask, support_map.shape[:2]).astype(support_map.dtype)
    return ops.mul(support_map, Tensor(resized[..., None], dtype=support_map.dtype))


def _normalize_rows(x: Tensor) -> Tensor:
    squared = ops.sum_(ops.mul(x, x), axis=-1, keepdims=True)
    norm = ops.sqrt(ops.clamp_min(squared, NORM_FLOOR ** 2))
    return ops.div(x, norm)


def correlate(query_map: Union[Tensor, np.ndarray], support_map: Union[Tensor, np.ndarray]) -> Tensor:
    """
    Correlación coseno 4D con ReLU
    Args:
        query_map: Tensor [hq, wq, c]
        support_map: Tensor [hs, ws, c] ya enmascarado
    Returns:
        Tensor [hq, wq, hs, ws] con valores en [0, 1]; vectores nulos dan 0
    """
    query_map = ops.as_tensor(query_map)
    support_map = ops.as_tensor(support_map)
    if query_map.ndim != 3 or support_map.ndim != 3 or query_map.shape[-1] != support_map.shape[-1]:
        raise ShapeError(
            f"correlate: canales incompatibles consulta {query_map.shape} y soporte {support_map.shape}"
        )
    hq, wq, channels = query_map.shape
    hs, ws, _ = support_map.shape
    q = _normalize_rows(ops.reshape(query_map, (hq * wq, channels)))
    s = _normalize_rows(ops.reshape(support_map, (hs * ws, channels)))
    cosine = ops.matmul(q, ops.permute(s, (1, 0)))
    return ops.reshape(ops.relu(cosine), (hq, wq, hs, ws))


def build_hypercorrelation(pyramid: FeaturePyramid, level: str,
                           support_maps: Optional[Dict[int, Tensor]] = None,
                           query_maps: Optional[Dict[int, Tensor]] = None) -> Tensor:
    """
    Apila las correlaciones de las capas de un nivel
    Args:
        pyramid: Pirámide de características
        level: Nombre del nivel (clave de pyramid.groups)
        support_maps: Mapas de soporte ya enmascarados (opcional, por capa)
        query_maps: Mapas de consulta como tensores (opcional, para gradientes)
    Returns:
        Tensor [hq, wq, hs, ws, |L_p|] con capas en orden ascendente
    """
    members = sorted(pyramid.groups.get(level, []))
    if not members:
        raise ShapeError(f"El nivel {level} no tiene capas")
    entries = [pyramid.layer(index) for index in members]
    if len({e.query_map.shape[:2] for e in entries}) > 1 or len({e.support_map.shape[:2] for e in entries}) > 1:
        raise ShapeError(f"El nivel {level} mezcla tamaños espaciales entre sus capas {members}")

    correlations = []
    for entry in entries:
        if support_maps is not None and entry.layer in support_maps:
            masked = support_maps[entry.layer]
        else:
            masked = mask_support(entry.support_map, pyramid.support_mask)
        query = query_maps[entry.layer] if query_maps is not None and entry.layer in query_maps else entry.query_map
        correlations.append(correlate(query, masked))
    return ops.stack(correlations, axis=-1)


def build_all(pyramid: FeaturePyramid, levels: Sequence[str]) -> List[Tensor]:
    """Hipercorrelaciones de todos los niveles, en el orden dado (grueso a fino)"""
    pyramid.validate()
    return [build_hypercorrelation(pyramid, level) for level in levels]
