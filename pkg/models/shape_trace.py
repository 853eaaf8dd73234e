# Traza simbólica de formas
# Recorre la red con aritmética de formas, sin reservar tensores

from dataclasses import dataclass
from typing import List, Tuple

from config.run_config import RunConfig, validate_run_config
from models.vem import infer_vem_shape, pool_window


@dataclass(frozen=True)
class ShapeEntry:
    name: str
    shape: Tuple[int, ...]

    def format(self) -> str:
        return f"{self.name}: {'x'.join(str(s) for s in self.shape)}"


def trace_shapes(config: RunConfig) -> List[ShapeEntry]:
    """
    Formas intermedias desde las hipercorrelaciones hasta la salida
    Args:
        config: Configuración de la ejecución
    Returns:
        Lista ordenada de ShapeEntry
    Raises:
        ConfigError con la primera restricción violada
    """
    validate_run_config(config)
    D, n = config.embed_dim, config.window_size
    trace: List[ShapeEntry] = []
    previous = None
    for level in config.levels:
        name = level.name
        trace.append(ShapeEntry(f"corr.{name}",
                                (level.query_size, level.query_size, level.support_size, level.support_size,
                                 level.num_layers)))
        window = pool_window(level.query_size, level.support_size, level.query_target, config.support_target)
        embedded = infer_vem_shape(level.query_target, config.support_target, D)
        if any(w > 1 for w in window):
            trace.append(ShapeEntry(f"pool.{name}", embedded[:4] + (level.num_layers,)))
        trace.append(ShapeEntry(f"vem.{name}", embedded))
        if previous is not None:
            trace.append(ShapeEntry(f"up.{name}", embedded))
        if config.aggregator == "vtm":
            windows = (level.query_target // n) ** 2 * (config.support_target // n) ** 2
            trace.append(ShapeEntry(f"vtm.{name}.windows", (windows, n ** 4, D)))
        trace.append(ShapeEntry(f"agg.{name}", embedded))
        previous = embedded

    size = config.finest.query_target
    trace.append(ShapeEntry("decoder.pool", (size, size, D)))
    for stage in range(config.decoder_stages):
        size = config.stage_resolution(stage)
        if stage > 0:
            trace.append(ShapeEntry(f"decoder.stage{stage}.up", (size, size, D)))
        if config.use_affinity:
            proj = config.affinity_proj[stage]
            trace.append(ShapeEntry(f"decoder.stage{stage}.affinity", (size, size, config.affinity_channels[stage])))
            trace.append(ShapeEntry(f"decoder.stage{stage}.concat", (size, size, D + proj)))
        trace.append(ShapeEntry(f"decoder.stage{stage}", (size, size, D)))
    trace.append(ShapeEntry("flow" if config.task == "flow" else "mask_logits", (size, size, 2)))
    return trace
