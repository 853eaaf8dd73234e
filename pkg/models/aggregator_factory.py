# Factory de agregadores de correlación
# vtm (transformer volumétrico), conv4d (línea base convolucional) e identity

from typing import Dict, Type

import numpy as np

from tensor_core import Tensor, ops
from config.run_config import AGGREGATORS, LevelConfig, RunConfig
from models.base_model import BaseModel
from models.vem import ConvBlock4d
from models.vtm import VolumetricTransformer
from utils.errors import ConfigError
from utils.logger import app_logger


class IdentityAggregator(BaseModel):
    """Sin agregación: A = M"""

    def __init__(self, config: RunConfig, level: LevelConfig, rng: np.random.Generator):
        super().__init__()

    def forward(self, volume: Tensor) -> Tensor:
        return volume


class Conv4dAggregator(BaseModel):
    """Línea base: M + pila de bloques conv4d(3⁴) -> ReLU -> GroupNorm"""

    def __init__(self, config: RunConfig, level: LevelConfig, rng: np.random.Generator):
        super().__init__()
        self.blocks = [
            self.add_child(f"block{i}", ConvBlock4d(config.embed_dim, config.embed_dim, config.gn_groups, rng))
            for i in range(level.depth)
        ]

    def forward(self, volume: Tensor) -> Tensor:
        x = volume
        for block in self.blocks:
            x = block(x)
        return ops.add(volume, x)


class VtmAggregator(VolumetricTransformer):
    def __init__(self, config: RunConfig, level: LevelConfig, rng: np.random.Generator):
        super().__init__(config.embed_dim, config.heads, config.window_size, level.depth, rng,
                         mlp_ratio=config.mlp_ratio, residual=config.vtm_residual)


class AggregatorFactory:
    """
    Factory para crear el agregador de cada nivel de la pirámide
    """

    # Registro de agregadores disponibles
    AGGREGATOR_CLASSES: Dict[str, Type[BaseModel]] = {
        'vtm': VtmAggregator,
        'conv4d': Conv4dAggregator,
        'identity': IdentityAggregator,
    }

    @classmethod
    def create_aggregator(cls, name: str, config: RunConfig, level: LevelConfig,
                          rng: np.random.Generator) -> BaseModel:
        """
        Crea el agregador de un nivel
        Args:
            name: vtm, conv4d o identity
            config: Configuración de la ejecución
            level: Nivel de la pirámide
            rng: Generador para inicializar parámetros
        Returns:
            Módulo agregador
        Raises:
            ConfigError si el nombre no está registrado
        """
        aggregator_class = cls.AGGREGATOR_CLASSES.get(name.lower())
        if aggregator_class is None:
            raise ConfigError("aggregator", f"agregador no soportado: {name} (opciones: {', '.join(AGGREGATORS)})")
        app_logger.debug(f"Agregador {name} creado para el nivel {level.name} (profundidad {level.depth})")
        return aggregator_class(config, level, rng)

    @classmethod
    def get_supported_aggregators(cls):
        return list(cls.AGGREGATOR_CLASSES.keys())
