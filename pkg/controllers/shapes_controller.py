# Controlador del comando shapes: traza simbólica, sin reservar tensores

from config.run_config import RunConfig
from controllers.base_controller import BaseController
from models.shape_trace import trace_shapes


class ShapesController(BaseController):
    command = "shapes"

    def run(self, config: RunConfig) -> dict:
        entries = [entry.format() for entry in trace_shapes(config)]
        return {"entries": entries, "lines": entries}
