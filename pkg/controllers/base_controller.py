# Controlador base para los comandos de la CLI
# Coordina modelos, episodios y vistas
# Convierte las excepciones del dominio en respuestas con código de error

from typing import List

from config.app_config import AppConfig
from config.run_config import RunConfig
from episodes.episode import Episode
from utils.errors import HyperAggError, NumericError, ShapeError
from utils.feature_io import load_episodes
from utils.logger import app_logger
from views.base_view import BaseView


class BaseController:
    """
    Clase base para todos los controladores de la aplicación.
    Subclases implementan run(config) y devuelven un diccionario de datos.
    """

    command = "base"

    def __init__(self):
        # Inicializa la vista base para formatear respuestas
        self.view = BaseView()
        self.app_config = AppConfig()

    def run(self, config: RunConfig) -> dict:
        raise NotImplementedError

    def execute(self, config: RunConfig) -> dict:
        """
        Ejecuta el comando capturando los errores del dominio
        Args:
            config: Configuración validada
        Returns:
            Respuesta formateada (success o error con error_code)
        """
        app_logger.log_command_start(self.command, {"preset": config.preset, "seed": config.seed,
                                                    "aggregator": config.aggregator})
        try:
            data = self.run(config)
            return self.success_response(data, f"Comando {self.command} completado")
        except NumericError as error:
            app_logger.log_exception(f"Error numérico en {self.command}", error)
            return self.view.format_error(str(error), error.error_code)
        except HyperAggError as error:
            app_logger.error(f"Error en {self.command}: {error}")
            message = str(error)
            return self.view.format_error(message, error.error_code)

    def success_response(self, data, message="Operación exitosa"):
        """
        Genera una respuesta exitosa
        Args:
            data: Datos a incluir en la respuesta
            message: Mensaje de éxito
        Returns:
            Respuesta exitosa formateada
        """
        return self.view.format_response(data, "success", message)

    def load_episode_dumps(self, config: RunConfig) -> List[Episode]:
        """
        Episodios volcados en config.episodes_dir, comprobados contra la configuración
        Raises:
            DataError si un blob no coincide con su manifiesto
            ShapeError si las formas del volcado no son las de la configuración
        """
        episodes = load_episodes(config.episodes_dir)
        expected = {}
        for level in config.levels:
            for layer in level.layers:
                expected[layer] = (level.query_size, level.support_size, level.channels)
        for episode in episodes:
            episode.validate()
            if sorted(episode.query_features) != sorted(expected):
                raise ShapeError(f"Episodio {episode.seed}: capas {sorted(episode.query_features)}, "
                                 f"la configuración usa {sorted(expected)}")
            for layer, (query_size, support_size, channels) in expected.items():
                query = episode.query_features[layer].shape
                support = episode.shots[0].features[layer].shape
                if query != (query_size, query_size, channels) or support != (support_size, support_size, channels):
                    raise ShapeError(
                        f"Episodio {episode.seed}, capa {layer}: volcado {query}/{support}, configuración "
                        f"{(query_size, query_size, channels)}/{(support_size, support_size, channels)}"
                    )
        app_logger.info(f"{len(episodes)} episodios cargados de {config.episodes_dir}")
        return episodes
