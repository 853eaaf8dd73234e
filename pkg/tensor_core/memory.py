# Contabilidad de memoria de tensores
# Registra bytes vivos y el pico de bytes mientras el rastreador está activo

import threading
import weakref
from contextlib import contextmanager


class MemoryTracker:
    """
    Shim de asignación: cada Tensor creado mientras el rastreador está activo
    suma sus bytes; al ser recolectado, los resta.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.active = False
        self.live_bytes = 0
        self.peak_bytes = 0
        self.allocations = 0
        self.generation = 0

    def reset(self):
        """Reinicia los contadores (los tensores vivos dejan de contarse)"""
        with self._lock:
            self.live_bytes = 0
            self.peak_bytes = 0
            self.allocations = 0
            self.generation += 1

    def track(self, tensor):
        """
        Registra la memoria de un tensor recién creado
        Args:
            tensor: Tensor cuyo buffer de datos se contabiliza
        """
        if not self.active:
            return
        nbytes = int(tensor.data.nbytes)
        with self._lock:
            self.live_bytes += nbytes
            self.allocations += 1
            if self.live_bytes > self.peak_bytes:
                self.peak_bytes = self.live_bytes
        weakref.finalize(tensor, self._release, nbytes, self.generation)

    def _release(self, nbytes: int, generation: int):
        # Solo descuentan los tensores registrados desde el último reset
        with self._lock:
            if generation == self.generation:
                self.live_bytes = max(0, self.live_bytes - nbytes)

    @contextmanager
    def session(self):
        """
        Activa el rastreo dentro de un bloque `with`
        Returns:
            El propio rastreador, con peak_bytes del bloque
        """
        self.reset()
        self.active = True
        try:
            yield self
        finally:
            self.active = False


# Instancia global usada por Tensor
memory_tracker = MemoryTracker()
