# Núcleo de tensores
# Tensor denso row-major con diferenciación en modo reverso

from .tensor import Tensor, OpGraph, backward, no_grad, default_dtype, get_default_dtype, is_grad_enabled
from .memory import MemoryTracker, memory_tracker
from . import ops
from .ops import forward_op

__all__ = [
    'Tensor',
    'OpGraph',
    'backward',
    'no_grad',
    'default_dtype',
    'get_default_dtype',
    'is_grad_enabled',
    'MemoryTracker',
    'memory_tracker',
    'ops',
    'forward_op'
]
