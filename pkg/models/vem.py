# Módulo de embebido de volumen (VEM)
# Max-pooling 4D seguido de bloques conv4d -> ReLU -> GroupNorm

from typing import List, Optional, Sequence, Tuple

import numpy as np

from tensor_core import Tensor, ops
from models.base_model import BaseModel, uniform_init
from utils.errors import ConfigError


class Conv4dKernel(BaseModel):
    """Núcleo de convolución 4D [k, k, k, k, in, out] con sesgo"""

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator,
                 kernel_size: int = 3, stride: Sequence[int] = (1, 1, 1, 1),
                 padding: Optional[Sequence[int]] = None):
        super().__init__()
        if kernel_size % 2 == 0:
            raise ConfigError("kernel_size", f"el núcleo 4D debe ser impar, recibido {kernel_size}")
        fan_in = in_channels * kernel_size ** 4
        shape = (kernel_size,) * 4 + (in_channels, out_channels)
        self.weight = self.add_parameter("weight", uniform_init(rng, shape, fan_in))
        self.bias = self.add_parameter("bias", uniform_init(rng, (out_channels,), fan_in))
        self.stride = tuple(stride)
        self.padding = tuple(padding) if padding is not None else (kernel_size // 2,) * 4

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv4d(x, self.weight, self.bias, self.stride, self.padding)


class ConvBlock4d(BaseModel):
    """conv4d(3⁴) -> ReLU -> GroupNorm"""

    def __init__(self, in_channels: int, out_channels: int, groups: int, rng: np.random.Generator,
                 normalize: bool = True):
        super().__init__()
        self.conv = self.add_child("conv", Conv4dKernel(in_channels, out_channels, rng))
        self.groups = groups
        self.normalize = normalize
        self.norm_weight = self.add_parameter("norm_weight", np.ones(out_channels))
        self.norm_bias = self.add_parameter("norm_bias", np.zeros(out_channels))

    def forward(self, x: Tensor) -> Tensor:
        x = ops.relu(self.conv(x))
        if self.normalize:
            x = ops.group_norm(x, self.groups, self.norm_weight, self.norm_bias)
        return x


def pool_window(query_size: int, support_size: int, query_target: int, support_target: int) -> Tuple[int, ...]:
    """
    Ventana del max-pooling que lleva la hipercorrelación al tamaño objetivo
    Raises:
        ConfigError si algún eje no es divisible
    """
    if query_size % query_target:
        raise ConfigError("query_target", f"{query_target} no divide la extensión de consulta {query_size}")
    if support_size % support_target:
        raise ConfigError("support_target", f"{support_target} no divide la extensión de soporte {support_size}")
    q = query_size // query_target
    s = support_size // support_target
    return (q, q, s, s)


def infer_vem_shape(query_target: int, support_target: int, embed_dim: int) -> Tuple[int, ...]:
    return (query_target, query_target, support_target, support_target, embed_dim)


class VolumeEmbeddingModule(BaseModel):
    """
    VEM de un nivel: reduce [hq, wq, hs, ws, |L_p|] a [ĥq, ŵq, ĥs, ŵs, D].
    El primer bloque eleva |L_p| canales a D.
    """

    def __init__(self, in_channels: int, embed_dim: int, window: Sequence[int], rng: np.random.Generator,
                 blocks: int = 2, groups: int = 4, normalize: bool = True):
        super().__init__()
        self.window = tuple(window)
        self.blocks: List[ConvBlock4d] = []
        channels = in_channels
        for index in range(blocks):
            block = ConvBlock4d(channels, embed_dim, groups, rng, normalize=normalize)
            self.blocks.append(self.add_child(f"block{index}", block))
            channels = embed_dim

    def forward(self, correlation: Tensor) -> Tensor:
        x = correlation
        if any(w > 1 for w in self.window):
            x = ops.maxpool4d(x, self.window)
        for block in self.blocks:
            x = block(x)
        return x


class PoolingEmbedding(BaseModel):
    """Alternativa sin VEM: max-pooling 4D y proyección lineal |L_p| -> D"""

    def __init__(self, in_channels: int, embed_dim: int, window: Sequence[int], rng: np.random.Generator):
        super().__init__()
        self.window = tuple(window)
        self.weight = self.add_parameter("weight", uniform_init(rng, (in_channels, embed_dim), in_channels))
        self.bias = self.add_parameter("bias", uniform_init(rng, (embed_dim,), in_channels))

    def forward(self, correlation: Tensor) -> Tensor:
        x = correlation
        if any(w > 1 for w in self.window):
            x = ops.maxpool4d(x, self.window)
        return ops.linear(x, self.weight, self.bias)
