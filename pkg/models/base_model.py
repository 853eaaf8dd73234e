# Modelo base para todos los módulos con parámetros
# Registro ordenado de parámetros y submódulos, estado serializable
# y la inicialización uniforme común

from typing import Dict, Iterator, List, Tuple

import numpy as np

from tensor_core import Tensor, get_default_dtype
from utils.errors import CheckpointError


def uniform_init(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    """
    Inicialización uniforme(-1/sqrt(fan_in), 1/sqrt(fan_in))
    Args:
        rng: Generador de números aleatorios
        shape: Forma del parámetro
        fan_in: Número de entradas que alimentan cada salida
    Returns:
        Array con el dtype por defecto
    """
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape).astype(get_default_dtype())


class BaseModel:
    """
    Clase base para todos los módulos de la red.
    Mantiene parámetros y submódulos en orden de registro para que
    los nombres y el orden de serialización sean reproducibles.
    """

    def __init__(self):
        self._parameters: Dict[str, Tensor] = {}
        self._children: Dict[str, "BaseModel"] = {}

    def add_parameter(self, name: str, value: np.ndarray) -> Tensor:
        """
        Registra un parámetro entrenable
        Args:
            name: Nombre local del parámetro
            value: Valor inicial
        Returns:
            Tensor con requires_grad
        """
        tensor = Tensor(value, requires_grad=True, name=name)
        self._parameters[name] = tensor
        return tensor

    def add_child(self, name: str, module: "BaseModel") -> "BaseModel":
        self._children[name] = module
        return module

    def named_parameters(self, prefix: str = "") -> List[Tuple[str, Tensor]]:
        """
        Lista (nombre completo, tensor) de este módulo y sus hijos
        Returns:
            Lista en orden de registro
        """
        named = [(f"{prefix}{name}", tensor) for name, tensor in self._parameters.items()]
        for child_name, child in self._children.items():
            named.extend(child.named_parameters(f"{prefix}{child_name}."))
        return named

    def parameters(self) -> Iterator[Tensor]:
        for _, tensor in self.named_parameters():
            yield tensor

    def zero_grad(self):
        for tensor in self.parameters():
            tensor.zero_grad()

    def num_parameters(self) -> int:
        return int(sum(t.data.size for t in self.parameters()))

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Copia de todos los parámetros por nombre"""
        return {name: tensor.data.copy() for name, tensor in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        """
        Carga parámetros por nombre, exigiendo coincidencia exacta
        Args:
            state: Diccionario nombre -> array
        Raises:
            CheckpointError si faltan/sobran nombres o las formas difieren
        """
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise CheckpointError(
                f"Parámetros incompatibles. Faltan: {missing[:5]} Sobran: {unexpected[:5]}"
            )
        for name, tensor in own.items():
            value = np.asarray(state[name])
            if value.shape != tensor.shape:
                raise CheckpointError(
                    f"Forma incompatible para {name}: checkpoint {value.shape} vs configuración {tensor.shape}"
                )
            tensor.data[...] = value.astype(tensor.dtype)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)
