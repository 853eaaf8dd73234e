# Decodificador consciente de afinidad
# Promedio sobre el soporte, concatenación con rasgos de consulta proyectados,
# refinamiento con bloques swin 2D y cabeza de máscara o de flujo

from typing import List, Optional, Sequence, Union

import numpy as np

from tensor_core import Tensor, ops
from config.run_config import RunConfig
from models.base_model import BaseModel, uniform_init
from models.swin import SwinBlock
from utils.errors import ConfigError, ShapeError


def pool_support(volume: Tensor) -> Tensor:
    """
    Promedio sobre los dos ejes de soporte
    Args:
        volume: Tensor [hq, wq, hs, ws, D]
    Returns:
        Tensor [hq, wq, D]
    """
    if volume.ndim != 5:
        raise ShapeError(f"pool_support: se esperaba tensor 5D, forma {volume.shape}")
    return ops.mean(volume, axis=(2, 3))


def hard_mask(logits: Union[Tensor, np.ndarray]) -> np.ndarray:
    """Máscara binaria por argmax; los empates van al fondo (canal 0)"""
    data = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    return (data[..., 1] > data[..., 0]).astype(np.uint8)


class DecoderStage(BaseModel):
    """Una etapa: concat([Â, P(F_q)]) -> fusión lineal a D -> bloques swin 2D"""

    def __init__(self, config: RunConfig, stage: int, rng: np.random.Generator):
        super().__init__()
        dim = config.embed_dim
        self.use_affinity = config.use_affinity
        if self.use_affinity:
            in_channels = config.affinity_channels[stage]
            proj = config.affinity_proj[stage]
            self.proj_weight = self.add_parameter("proj_weight", uniform_init(rng, (in_channels, proj), in_channels))
            self.proj_bias = self.add_parameter("proj_bias", uniform_init(rng, (proj,), in_channels))
            merged = dim + proj
        else:
            merged = dim
        self.merge_weight = self.add_parameter("merge_weight", uniform_init(rng, (merged, dim), merged))
        self.merge_bias = self.add_parameter("merge_bias", uniform_init(rng, (dim,), merged))
        self.blocks: List[SwinBlock] = [
            self.add_child(f"block{i}", SwinBlock(dim, config.heads, config.decoder_window, rank=2,
                                                  shifted=i % 2 == 1, rng=rng, mlp_ratio=config.mlp_ratio))
            for i in range(config.decoder_blocks)
        ]

    def forward(self, pooled: Tensor, features: Optional[Union[Tensor, np.ndarray]] = None) -> Tensor:
        x = pooled
        if self.use_affinity:
            if features is None:
                raise ShapeError("decode_stage: faltan los rasgos de consulta de la etapa")
            features = ops.as_tensor(features, pooled)
            if tuple(features.shape[:2]) != tuple(pooled.shape[:2]):
                raise ShapeError(
                    f"decode_stage: extensión de rasgos {features.shape[:2]} distinta de la correlación {pooled.shape[:2]}"
                )
            projected = ops.linear(features, self.proj_weight, self.proj_bias)
            x = ops.concat([pooled, projected], axis=-1)
        x = ops.linear(x, self.merge_weight, self.merge_bias)
        for block in self.blocks:
            x = block(x)
        return x


class AffinityDecoder(BaseModel):
    """
    Decodificador completo. En modo máscara cada etapa después de la primera
    duplica la resolución; en modo flujo hay una sola etapa sin sobremuestreo.
    """

    def __init__(self, config: RunConfig, rng: np.random.Generator):
        super().__init__()
        self.task = config.task
        self.stages: List[DecoderStage] = [
            self.add_child(f"stage{s}", DecoderStage(config, s, rng)) for s in range(config.decoder_stages)
        ]
        dim = config.embed_dim
        self.head_weight = self.add_parameter("head_weight", uniform_init(rng, (dim, 2), dim))
        self.head_bias = self.add_parameter("head_bias", uniform_init(rng, (2,), dim))

    def forward(self, volume: Tensor, affinity: Sequence[Union[Tensor, np.ndarray, None]]) -> Tensor:
        """
        Args:
            volume: A de la pirámide más fina [hq, wq, hs, ws, D]
            affinity: Rasgos de consulta por etapa (pueden ser None sin afinidad)
        Returns:
            Tensor decodificado [H, W, D]
        """
        x = pool_support(volume)
        for s, stage in enumerate(self.stages):
            if s > 0:
                x = ops.interp2d(x, (2 * x.shape[0], 2 * x.shape[1]), axes=(0, 1))
            features = affinity[s] if affinity is not None and s < len(affinity) else None
            x = stage(x, features)
        return x

    def _head(self, decoded: Tensor) -> Tensor:
        return ops.linear(decoded, self.head_weight, self.head_bias)

    def predict_mask(self, decoded: Tensor) -> Tensor:
        """Logits [H, W, 2]; canal 1 = primer plano"""
        if self.task != "mask":
            raise ConfigError("task", "predict_mask requiere task=mask")
        return self._head(decoded)

    def predict_flow(self, decoded: Tensor) -> Tensor:
        """Desplazamiento denso [hq, wq, 2] en celdas de la rejilla (dy, dx)"""
        if self.task != "flow":
            raise ConfigError("task", "predict_flow requiere task=flow")
        return self._head(decoded)
