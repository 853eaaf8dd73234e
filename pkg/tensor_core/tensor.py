# Tensor denso con diferenciación automática en modo reverso
# Define Tensor, el grafo de operaciones (OpGraph) y el paso hacia atrás

import threading
from contextlib import contextmanager
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import NumericError, ShapeError
from .memory import memory_tracker

_grad_state = threading.local()
_dtype_state = {"dtype": np.dtype(np.float32)}


def get_default_dtype() -> np.dtype:
    return _dtype_state["dtype"]


@contextmanager
def default_dtype(dtype):
    """
    Cambia el tipo por defecto de los tensores dentro del bloque.
    El modo float64 existe para las verificaciones de gradiente.
    """
    previous = _dtype_state["dtype"]
    _dtype_state["dtype"] = np.dtype(dtype)
    try:
        yield
    finally:
        _dtype_state["dtype"] = previous


def is_grad_enabled() -> bool:
    return getattr(_grad_state, "enabled", True)


@contextmanager
def no_grad():
    """Desactiva el registro del grafo en el hilo actual (inferencia)"""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


def check_finite(array: np.ndarray, op: str):
    if not np.all(np.isfinite(array)):
        raise NumericError(f"La operación '{op}' produjo valores no finitos (forma {array.shape})")


class Tensor:
    """
    Tensor denso row-major.
    Los tensores hoja con requires_grad acumulan dRaíz/dHoja en `grad`.
    """

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: Optional[str] = None):
        dtype = np.dtype(dtype) if dtype is not None else get_default_dtype()
        self.data = np.array(data, dtype=dtype)
        check_finite(self.data, "crear")
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if self.requires_grad else None
        self.name = name
        self.op = "hoja"
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[Callable] = None
        memory_tracker.track(self)

    @classmethod
    def from_op(cls, data: np.ndarray, parents: Sequence["Tensor"], backward: Callable, op: str) -> "Tensor":
        """
        Construye la salida de una operación y la registra en el grafo
        Args:
            data: Resultado numérico ya calculado
            parents: Tensores de entrada
            backward: Función g -> gradientes por cada entrada (None si no aplica)
            op: Nombre de la operación
        Returns:
            Tensor de salida
        """
        check_finite(data, op)
        out = cls.__new__(cls)
        out.data = data
        out.name = None
        out.op = op
        out.grad = None
        out.requires_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        memory_tracker.track(out)
        return out

    # Propiedades

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.data.dtype)

    def zero_grad(self):
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def backward(self):
        backward(self)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad}, op={self.op})"

    # Azúcar sintáctico sobre tensor_core.ops

    def __add__(self, other):
        return ops.add(self, other)

    def __radd__(self, other):
        return ops.add(other, self)

    def __sub__(self, other):
        return ops.sub(self, other)

    def __rsub__(self, other):
        return ops.sub(other, self)

    def __mul__(self, other):
        return ops.mul(self, other)

    def __rmul__(self, other):
        return ops.mul(other, self)

    def __truediv__(self, other):
        return ops.div(self, other)

    def __neg__(self):
        return ops.neg(self)

    def __pow__(self, exponent: float):
        return ops.pow_scalar(self, exponent)

    def __matmul__(self, other):
        return ops.matmul(self, other)

    def __getitem__(self, index):
        return ops.slice_(self, index)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def permute(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.permute(self, axes)

    def sum(self, axis=None, keepdims: bool = False):
        return ops.sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return ops.mean(self, axis, keepdims)

    def max(self, axis=None, keepdims: bool = False):
        return ops.max_(self, axis, keepdims)

    def relu(self):
        return ops.relu(self)

    def softmax(self, axis: int = -1):
        return ops.softmax(self, axis)


class OpGraph:
    """
    Registro topológico de las operaciones ejecutadas hasta una raíz.
    Cada nodo aparece exactamente una vez.
    """

    def __init__(self, root: Tensor):
        self.root = root
        self.nodes: List[Tensor] = self._topological_order(root)

    @staticmethod
    def _topological_order(root: Tensor) -> List[Tensor]:
        # DFS iterativo en post-orden; los grafos de VTM son profundos
        order: List[Tensor] = []
        visited = set()
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in reversed(node._parents):
                if id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def reverse(self) -> List[Tensor]:
        return list(reversed(self.nodes))

    def __len__(self):
        return len(self.nodes)


def backward(root: Tensor):
    """
    Propaga gradientes desde una raíz escalar hasta las hojas
    Args:
        root: Tensor escalar (un solo elemento)
    """
    if root.data.size != 1:
        raise ShapeError(f"backward requiere una raíz escalar; forma recibida {root.shape}")
    if not root.requires_grad:
        return

    graph = OpGraph(root)
    grads = {id(root): np.ones_like(root.data)}
    for node in graph.reverse():
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            if node.requires_grad:
                if node.grad is None:
                    node.grad = np.zeros_like(node.data)
                node.grad += g
            continue
        for parent, parent_grad in zip(node._parents, node._backward(g)):
            if parent_grad is None or not parent.requires_grad:
                continue
            check_finite(parent_grad, f"backward de {node.op}")
            key = id(parent)
            grads[key] = grads[key] + parent_grad if key in grads else parent_grad


from . import ops  # noqa: E402
