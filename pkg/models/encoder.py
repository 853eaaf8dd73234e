# Codificador piramidal
# VEM + agregador por nivel, de grueso a fino, con guía sobremuestreada

from typing import List, Sequence, Tuple

import numpy as np

from tensor_core import Tensor, ops
from config.run_config import LevelConfig, RunConfig
from models.aggregator_factory import AggregatorFactory
from models.base_model import BaseModel
from models.vem import PoolingEmbedding, VolumeEmbeddingModule, pool_window
from utils.errors import ShapeError


def upsample_guidance(coarse: Tensor, query_size: Tuple[int, int], support_size: Tuple[int, int]) -> Tensor:
    """
    Sobremuestreo bilineal de los ejes de consulta (align_corners=False)
    Args:
        coarse: A_{p+1} [hq, wq, hs, ws, D]
        query_size: Extensión de consulta del nivel siguiente
        support_size: Extensión de soporte del nivel siguiente
    Returns:
        Tensor [query_size, hs, ws, D]
    Raises:
        ShapeError si las extensiones de soporte no coinciden
    """
    if tuple(coarse.shape[2:4]) != tuple(support_size):
        raise ShapeError(
            f"upsample_guidance: soporte {coarse.shape[2:4]} no coincide con el nivel siguiente {tuple(support_size)}"
        )
    if tuple(coarse.shape[:2]) == tuple(query_size):
        return coarse
    return ops.interp2d(coarse, query_size, axes=(0, 1))


class PyramidLevel(BaseModel):
    """Embebido y agregación de un nivel"""

    def __init__(self, config: RunConfig, level: LevelConfig, rng: np.random.Generator):
        super().__init__()
        self.level = level
        window = pool_window(level.query_size, level.support_size, level.query_target, config.support_target)
        if config.use_vem:
            embedding = VolumeEmbeddingModule(level.num_layers, config.embed_dim, window, rng,
                                              blocks=config.vem_blocks, groups=config.gn_groups)
        else:
            embedding = PoolingEmbedding(level.num_layers, config.embed_dim, window, rng)
        self.embedding = self.add_child("embedding", embedding)
        self.aggregator = self.add_child(
            "aggregator", AggregatorFactory.create_aggregator(config.aggregator, config, level, rng)
        )

    def forward(self, correlation: Tensor, guidance: Tensor = None) -> Tensor:
        volume = self.embedding(correlation)
        if guidance is not None:
            volume = ops.add(volume, upsample_guidance(guidance, volume.shape[:2], volume.shape[2:4]))
        return self.aggregator(volume)


class PyramidEncoder(BaseModel):
    """
    A_p = Agg(VEM(C_p) + up(A_{p+1})), del nivel más grueso al más fino
    """

    def __init__(self, config: RunConfig, rng: np.random.Generator):
        super().__init__()
        self.levels: List[PyramidLevel] = [
            self.add_child(level.name, PyramidLevel(config, level, rng)) for level in config.levels
        ]

    def forward_levels(self, correlations: Sequence[Tensor]) -> List[Tensor]:
        """Salidas de todos los niveles, de grueso a fino"""
        if len(correlations) != len(self.levels):
            raise ShapeError(f"encode: {len(correlations)} hipercorrelaciones para {len(self.levels)} niveles")
        outputs: List[Tensor] = []
        guidance = None
        for module, correlation in zip(self.levels, correlations):
            guidance = module(correlation, guidance)
            outputs.append(guidance)
        return outputs

    def forward(self, correlations: Sequence[Tensor]) -> Tensor:
        return self.forward_levels(correlations)[-1]
