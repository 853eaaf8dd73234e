# Verificación de gradientes por diferencias finitas centrales
# Compara el gradiente analítico con (f(x+e) - f(x-e)) / 2e elemento a elemento

from typing import Callable, Dict, Sequence

import numpy as np

from .tensor import Tensor, default_dtype
from . import ops


def numeric_gradient(fn: Callable[[], Tensor], tensor: Tensor, eps: float) -> np.ndarray:
    """
    Gradiente numérico de una función escalar respecto a un tensor
    Args:
        fn: Función sin argumentos que devuelve un Tensor escalar
        tensor: Tensor cuyos datos se perturban in situ
        eps: Paso de la diferencia central
    Returns:
        Array con la misma forma que el tensor
    """
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        plus = fn().item()
        flat[i] = original - eps
        minus = fn().item()
        flat[i] = original
        grad_flat[i] = (plus - minus) / (2.0 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Error máximo normalizado por la mayor magnitud del gradiente"""
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), 1e-12)
    return float(np.max(np.abs(analytic - numeric))) / scale


def gradcheck(fn: Callable[..., Tensor], inputs: Sequence[Tensor], eps: float = 1e-4,
              seed: int = 0) -> Dict[int, float]:
    """
    Compara gradientes analíticos y numéricos de fn(*inputs)
    La salida se proyecta sobre pesos aleatorios fijos para cubrir todo el jacobiano.
    Args:
        fn: Función de Tensores a Tensor (cualquier forma)
        inputs: Tensores float64; se verifican los que tienen requires_grad
        eps: Paso de la diferencia central
        seed: Semilla de la proyección aleatoria
    Returns:
        Diccionario índice de entrada -> error relativo máximo
    """
    with default_dtype(np.float64):
        probe = fn(*inputs)
        weights = Tensor(np.random.default_rng(seed).standard_normal(probe.shape))

        def scalar():
            return ops.sum_(ops.mul(fn(*inputs), weights))

        for t in inputs:
            t.zero_grad()
        scalar().backward()
        errors = {}
        for i, t in enumerate(inputs):
            if not t.requires_grad:
                continue
            analytic = t.grad.copy()
            numeric = numeric_gradient(scalar, t, eps)
            errors[i] = relative_error(analytic, numeric)
        return errors
