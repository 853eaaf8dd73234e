# Modelo completo: correlación -> codificador piramidal -> decodificador

from typing import List, Optional

import numpy as np

from tensor_core import Tensor, no_grad
from config.run_config import RunConfig
from models.base_model import BaseModel
from models.correlation import FeaturePyramid, build_all
from models.decoder import AffinityDecoder, hard_mask
from models.encoder import PyramidEncoder
from utils.logger import app_logger


class HyperAggModel(BaseModel):
    """
    Red de agregación de hipercorrelaciones.
    Los parámetros se inicializan desde `seed` (por defecto config.seed).
    """

    def __init__(self, config: RunConfig, seed: Optional[int] = None):
        super().__init__()
        self.config = config
        rng = np.random.default_rng(config.seed if seed is None else seed)
        self.level_names = [level.name for level in config.levels]
        self.groups = {level.name: list(level.layers) for level in config.levels}
        self.encoder = self.add_child("encoder", PyramidEncoder(config, rng))
        self.decoder = self.add_child("decoder", AffinityDecoder(config, rng))
        app_logger.debug(
            f"Modelo creado: agregador={config.aggregator} niveles={self.level_names} "
            f"parámetros={self.num_parameters()}"
        )

    def hypercorrelations(self, pyramid: FeaturePyramid) -> List[Tensor]:
        return build_all(pyramid, self.level_names)

    def forward(self, pyramid: FeaturePyramid, affinity=None) -> Tensor:
        """
        Args:
            pyramid: Pirámide de un par consulta/soporte
            affinity: Rasgos de consulta por etapa del decodificador
        Returns:
            Logits de máscara [H, W, 2] o flujo [h, w, 2] según config.task
        """
        volume = self.encoder(self.hypercorrelations(pyramid))
        decoded = self.decoder(volume, affinity if self.config.use_affinity else None)
        if self.config.task == "flow":
            return self.decoder.predict_flow(decoded)
        return self.decoder.predict_mask(decoded)

    def forward_shot(self, episode, shot: int = 0) -> Tensor:
        return self.forward(episode.pyramid(shot, self.groups), episode.affinity)

    def predict_shots(self, episode) -> List[np.ndarray]:
        """Máscaras duras por soporte, sin grafo"""
        with no_grad():
            return [hard_mask(self.forward_shot(episode, k)) for k in range(episode.num_shots)]

    def predict_flow(self, episode) -> np.ndarray:
        with no_grad():
            return self.forward_shot(episode, 0).data.copy()
