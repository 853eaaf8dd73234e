# Optimizador AdamW (decaimiento de pesos desacoplado)

from typing import Dict, List, Sequence, Tuple

import numpy as np

from tensor_core import Tensor
from utils.errors import CheckpointError


class AdamW:
    """
    p <- p - lr·wd·p
    p <- p - lr · m̂ / (sqrt(v̂) + eps)
    Actualiza `data` en sitio para que los tensores del modelo conserven su identidad.
    """

    def __init__(self, named_parameters: Sequence[Tuple[str, Tensor]], lr: float = 5e-4,
                 betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8, weight_decay: float = 1e-2):
        self.parameters: List[Tuple[str, Tensor]] = list(named_parameters)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self.exp_avg: Dict[str, np.ndarray] = {n: np.zeros_like(p.data) for n, p in self.parameters}
        self.exp_avg_sq: Dict[str, np.ndarray] = {n: np.zeros_like(p.data) for n, p in self.parameters}

    def zero_grad(self):
        for _, tensor in self.parameters:
            tensor.zero_grad()

    def step(self):
        self.step_count += 1
        correction1 = 1.0 - self.beta1 ** self.step_count
        correction2 = 1.0 - self.beta2 ** self.step_count
        for name, tensor in self.parameters:
            grad = tensor.grad
            if grad is None:
                continue
            m = self.exp_avg[name]
            v = self.exp_avg_sq[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            if self.lr == 0.0:
                continue
            tensor.data *= 1.0 - self.lr * self.weight_decay
            update = (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            tensor.data -= (self.lr * update).astype(tensor.dtype)

    def state_dict(self) -> Dict[str, np.ndarray]:
        state = {"step": np.array([self.step_count], dtype=np.float32)}
        for name in self.exp_avg:
            state[f"exp_avg.{name}"] = self.exp_avg[name].copy()
            state[f"exp_avg_sq.{name}"] = self.exp_avg_sq[name].copy()
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        try:
            self.step_count = int(np.asarray(state["step"]).reshape(-1)[0])
            for name in self.exp_avg:
                self.exp_avg[name][...] = state[f"exp_avg.{name}"]
                self.exp_avg_sq[name][...] = state[f"exp_avg_sq.{name}"]
        except KeyError as error:
            raise CheckpointError(f"Estado del optimizador incompleto: falta {error}") from None
