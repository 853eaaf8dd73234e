# Bloques de atención por ventanas desplazadas de rango arbitrario
# Rango 4 para el VTM (consulta × soporte) y rango 2 para el decodificador

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from tensor_core import Tensor, ops
from models.base_model import BaseModel, uniform_init
from utils.errors import ShapeError


@dataclass(frozen=True)
class WindowLayout:
    """Particionado en ventanas de lado n sobre `extents` (ejes espaciales)"""

    window: int
    extents: Tuple[int, ...]
    shifted: bool = False

    @property
    def rank(self) -> int:
        return len(self.extents)

    @property
    def tokens_per_window(self) -> int:
        return self.window ** self.rank

    @property
    def num_windows(self) -> int:
        return int(np.prod([e // self.window for e in self.extents]))

    @property
    def displacement(self) -> Tuple[int, ...]:
        return tuple([self.window // 2 if self.shifted else 0] * self.rank)

    def validate(self):
        for axis, extent in enumerate(self.extents):
            if self.window <= 0 or extent % self.window:
                raise ShapeError(
                    f"La ventana {self.window} no divide la extensión {extent} del eje {axis} (extensiones {self.extents})"
                )


def partition_windows(x: Tensor, layout: WindowLayout) -> Tensor:
    """
    Reagrupa [e1..er, D] en ventanas
    Args:
        x: Tensor con r ejes espaciales y canales al final
        layout: Disposición de ventanas
    Returns:
        Tensor [num_windows, n^r, D]
    """
    layout.validate()
    if tuple(x.shape[:-1]) != layout.extents:
        raise ShapeError(f"partition: forma {x.shape} no coincide con extensiones {layout.extents}")
    n, rank, channels = layout.window, layout.rank, x.shape[-1]
    split = []
    for extent in layout.extents:
        split.extend([extent // n, n])
    x = ops.reshape(x, split + [channels])
    grid_axes = [2 * k for k in range(rank)]
    inner_axes = [2 * k + 1 for k in range(rank)]
    x = ops.permute(x, grid_axes + inner_axes + [2 * rank])
    return ops.reshape(x, (layout.num_windows, layout.tokens_per_window, channels))


def merge_windows(windows: Tensor, layout: WindowLayout) -> Tensor:
    """Inversa exacta de partition_windows"""
    n, rank, channels = layout.window, layout.rank, windows.shape[-1]
    grid = [extent // n for extent in layout.extents]
    x = ops.reshape(windows, grid + [n] * rank + [channels])
    axes = []
    for k in range(rank):
        axes.extend([k, rank + k])
    x = ops.permute(x, axes + [2 * rank])
    return ops.reshape(x, list(layout.extents) + [channels])


def cyclic_shift(x: Tensor, displacement: Sequence[int]) -> Tensor:
    """Desplazamiento circular de los ejes espaciales: x'[i] = x[i + d]"""
    if not any(displacement):
        return x
    return ops.roll(x, [-d for d in displacement], list(range(len(displacement))))


def reverse_shift(x: Tensor, displacement: Sequence[int]) -> Tensor:
    if not any(displacement):
        return x
    return ops.roll(x, list(displacement), list(range(len(displacement))))


def relative_position_index(window: int, rank: int) -> np.ndarray:
    """
    Índice de la tabla de sesgo relativo para cada par de tokens
    Returns:
        Array entero [n^r, n^r] con valores en [0, (2n-1)^r)
    """
    grids = np.meshgrid(*[np.arange(window)] * rank, indexing="ij")
    coords = np.stack([g.reshape(-1) for g in grids])
    relative = coords[:, :, None] - coords[:, None, :] + (window - 1)
    index = np.zeros(relative.shape[1:], dtype=np.int64)
    for axis in range(rank):
        index = index * (2 * window - 1) + relative[axis]
    return index


class WindowAttention(BaseModel):
    """Atención multi-cabeza dentro de cada ventana con sesgo de posición relativa"""

    def __init__(self, dim: int, heads: int, window: int, rank: int, rng: np.random.Generator):
        super().__init__()
        if dim % heads:
            raise ShapeError(f"dim={dim} no es divisible entre heads={heads}")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.scale = 1.0 / np.sqrt(self.head_dim)
        for name in ("query", "key", "value"):
            self.add_parameter(f"{name}_weight", uniform_init(rng, (dim, dim), dim))
            self.add_parameter(f"{name}_bias", uniform_init(rng, (dim,), dim))
        self.out_weight = self.add_parameter("out_weight", np.zeros((dim, dim)))
        self.out_bias = self.add_parameter("out_bias", np.zeros(dim))
        self.bias_table = self.add_parameter("bias_table", np.zeros(((2 * window - 1) ** rank, heads)))
        self.index = relative_position_index(window, rank)

    def _heads(self, x: Tensor) -> Tensor:
        windows, tokens, _ = x.shape
        return ops.permute(ops.reshape(x, (windows, tokens, self.heads, self.head_dim)), (0, 2, 1, 3))

    def _project(self, x: Tensor, name: str) -> Tensor:
        return ops.linear(x, self._parameters[f"{name}_weight"], self._parameters[f"{name}_bias"])

    def relative_bias(self) -> Tensor:
        tokens = self.index.shape[0]
        bias = ops.take(self.bias_table, self.index.reshape(-1), axis=0)
        return ops.permute(ops.reshape(bias, (tokens, tokens, self.heads)), (2, 0, 1))

    def attention_weights(self, windows: Tensor) -> Tensor:
        """Pesos de atención [num_windows, heads, T, T]; filas estocásticas"""
        if windows.ndim != 3 or windows.shape[-1] != self.dim:
            raise ShapeError(f"window_attention: tokens {windows.shape} no tienen dimensión {self.dim}")
        if windows.shape[1] != self.index.shape[0]:
            raise ShapeError(
                f"window_attention: {windows.shape[1]} tokens por ventana, se esperaban {self.index.shape[0]}"
            )
        q = self._heads(self._project(windows, "query"))
        k = self._heads(self._project(windows, "key"))
        logits = ops.mul(ops.matmul(q, ops.permute(k, (0, 1, 3, 2))), self.scale)
        logits = ops.add(logits, self.relative_bias())
        return ops.softmax(logits, axis=-1)

    def forward(self, windows: Tensor) -> Tensor:
        num_windows, tokens, _ = windows.shape
        attn = self.attention_weights(windows)
        v = self._heads(self._project(windows, "value"))
        out = ops.permute(ops.matmul(attn, v), (0, 2, 1, 3))
        out = ops.reshape(out, (num_windows, tokens, self.dim))
        return ops.linear(out, self.out_weight, self.out_bias)


class SwinBlock(BaseModel):
    """
    Bloque transformer de ventanas (rango r):
    x + Attn(LN(x)) seguido de x + MLP(LN(x)).
    Las proyecciones de salida arrancan en cero, así que el bloque
    es la identidad exacta al inicializar.
    """

    def __init__(self, dim: int, heads: int, window: int, rank: int, shifted: bool,
                 rng: np.random.Generator, mlp_ratio: int = 4):
        super().__init__()
        self.window = window
        self.rank = rank
        self.shifted = shifted
        self.norm1_weight = self.add_parameter("norm1_weight", np.ones(dim))
        self.norm1_bias = self.add_parameter("norm1_bias", np.zeros(dim))
        self.attention = self.add_child("attention", WindowAttention(dim, heads, window, rank, rng))
        self.norm2_weight = self.add_parameter("norm2_weight", np.ones(dim))
        self.norm2_bias = self.add_parameter("norm2_bias", np.zeros(dim))
        hidden = dim * mlp_ratio
        self.fc1_weight = self.add_parameter("fc1_weight", uniform_init(rng, (dim, hidden), dim))
        self.fc1_bias = self.add_parameter("fc1_bias", uniform_init(rng, (hidden,), dim))
        self.fc2_weight = self.add_parameter("fc2_weight", np.zeros((hidden, dim)))
        self.fc2_bias = self.add_parameter("fc2_bias", np.zeros(dim))

    def layout(self, extents: Sequence[int]) -> WindowLayout:
        return WindowLayout(self.window, tuple(extents), self.shifted)

    def forward(self, x: Tensor, layout: Optional[WindowLayout] = None) -> Tensor:
        layout = layout or self.layout(x.shape[:-1])
        h = ops.layer_norm(x, self.norm1_weight, self.norm1_bias)
        h = cyclic_shift(h, layout.displacement)
        h = merge_windows(self.attention(partition_windows(h, layout)), layout)
        h = reverse_shift(h, layout.displacement)
        x = ops.add(x, h)
        h = ops.layer_norm(x, self.norm2_weight, self.norm2_bias)
        h = ops.linear(ops.gelu(ops.linear(h, self.fc1_weight, self.fc1_bias)), self.fc2_weight, self.fc2_bias)
        return ops.add(x, h)
