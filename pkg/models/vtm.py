# Módulo transformer volumétrico (VTM)
# Pila de bloques swin 4D con ventanas alternas desplazadas y residuo externo

from typing import List, Sequence

import numpy as np

from tensor_core import Tensor, ops
from models.base_model import BaseModel
from models.swin import (
    SwinBlock, WindowLayout, cyclic_shift, merge_windows, partition_windows, reverse_shift,
)


def window4d_layout(window: int, extents: Sequence[int], shifted: bool = False) -> WindowLayout:
    """Disposición de ventanas sobre (ĥq, ŵq, ĥs, ŵs)"""
    layout = WindowLayout(window, tuple(extents), shifted)
    layout.validate()
    return layout


def partition4d(x: Tensor, layout: WindowLayout) -> Tensor:
    return partition_windows(x, layout)


def merge4d(windows: Tensor, layout: WindowLayout) -> Tensor:
    return merge_windows(windows, layout)


def cyclic_shift4d(x: Tensor, displacement: Sequence[int]) -> Tensor:
    return cyclic_shift(x, displacement)


def reverse_shift4d(x: Tensor, displacement: Sequence[int]) -> Tensor:
    return reverse_shift(x, displacement)


class VolumetricTransformer(BaseModel):
    """
    A = M + T(M).
    Cada bloque conserva su salto interno, de modo que la salida de la pila
    ya es M más la suma de los incrementos de los bloques. Sin residuo
    externo se devuelve solo T(M).
    """

    def __init__(self, dim: int, heads: int, window: int, depth: int, rng: np.random.Generator,
                 mlp_ratio: int = 4, residual: bool = True):
        super().__init__()
        self.residual = residual
        self.blocks: List[SwinBlock] = []
        for index in range(depth):
            block = SwinBlock(dim, heads, window, rank=4, shifted=index % 2 == 1, rng=rng, mlp_ratio=mlp_ratio)
            self.blocks.append(self.add_child(f"block{index}", block))

    def forward(self, volume: Tensor) -> Tensor:
        x = volume
        for block in self.blocks:
            x = block(x)
        if self.residual:
            return x
        return ops.sub(x, volume)
