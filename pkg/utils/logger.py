# Sistema de logging de HyperAgg
# Archivos rotativos (general, errores, diario) y consola con colores en modo debug
# Incluye eventos de entrenamiento, evaluación, checkpoints y benchmark

import os
import logging
from datetime import datetime
from logging.handlers import RotatingFileHandler
from typing import Any, Dict, Optional

import colorlog

from config.app_config import AppConfig

FILE_FORMAT = '%(asctime)s | %(name)s | %(levelname)s | %(filename)s:%(lineno)d | %(message)s'
CONSOLE_FORMAT = '%(log_color)s%(asctime)s | %(levelname)s | %(message)s%(reset)s'
LOG_COLORS = {
    'DEBUG': 'cyan',
    'INFO': 'green',
    'WARNING': 'yellow',
    'ERROR': 'red',
    'CRITICAL': 'red,bg_white',
}
MB = 1024 * 1024


class Logger:
    """
    Logger de la aplicación.
    Los pasos de entrenamiento van a DEBUG para no inflar el log diario;
    validaciones, checkpoints y resultados van a INFO.
    """

    def __init__(self, name: str = "HyperAgg"):
        self.app_config = AppConfig()
        self.name = name
        self.logs_dir = self.app_config.get_logs_dir()
        self.logger = logging.getLogger(name)
        self.setup_logger()

    def _file_handler(self, suffix: str, level: int, max_mb: int, backups: int) -> RotatingFileHandler:
        path = os.path.join(self.logs_dir, f"{self.name.lower()}{suffix}.log")
        handler = RotatingFileHandler(path, maxBytes=max_mb * MB, backupCount=backups, encoding='utf-8')
        handler.setLevel(level)
        handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt='%Y-%m-%d %H:%M:%S'))
        return handler

    def setup_logger(self):
        """Crea los handlers una sola vez por nombre de logger"""
        self.logger.setLevel(logging.DEBUG)
        if self.logger.handlers:
            return
        os.makedirs(self.logs_dir, exist_ok=True)

        self.logger.addHandler(self._file_handler("", logging.DEBUG, 10, 5))
        self.logger.addHandler(self._file_handler("_errors", logging.ERROR, 5, 3))
        self.logger.addHandler(self._file_handler(f"_{datetime.now().strftime('%Y%m%d')}", logging.INFO, 50, 1))

        # Consola solo en modo debug
        if self.app_config.is_debug_mode():
            console = logging.StreamHandler()
            console.setLevel(logging.INFO)
            console.setFormatter(colorlog.ColoredFormatter(CONSOLE_FORMAT, datefmt='%H:%M:%S',
                                                           log_colors=LOG_COLORS))
            self.logger.addHandler(console)

    def debug(self, message: str, extra: Optional[dict] = None):
        self.logger.debug(message, extra=extra)

    def info(self, message: str, extra: Optional[dict] = None):
        self.logger.info(message, extra=extra)

    def warning(self, message: str, extra: Optional[dict] = None):
        self.logger.warning(message, extra=extra)

    def error(self, message: str, extra: Optional[dict] = None):
        self.logger.error(message, extra=extra)

    def log_exception(self, message: str, exception: Exception):
        """Error con traza completa"""
        self.logger.error(f"{message}: {exception}", exc_info=True)

    def _outcome(self, message: str, success: bool):
        (self.info if success else self.error)(message)

    def log_command_start(self, command: str, details: Optional[Dict[str, Any]] = None):
        message = f"Comando - {command} - INICIO"
        if details:
            message += f" - {details}"
        self.info(message)

    def log_training_step(self, step: int, loss: float, lr: float, elapsed_ms: Optional[float] = None):
        message = f"Entrenamiento - paso {step} - pérdida {loss:.6f} - lr {lr:g}"
        if elapsed_ms is not None:
            message += f" - {elapsed_ms:.1f}ms"
        self.debug(message)

    def log_validation(self, step: int, score: float, best: float):
        self.info(f"Validación - paso {step} - puntuación {score:.4f} - mejor {best:.4f}")

    def log_checkpoint(self, path: str, step: int, success: bool):
        status = "ÉXITO" if success else "ERROR"
        self._outcome(f"Checkpoint - paso {step} - {status} - {path}", success)

    def log_evaluation(self, fold: int, miou: float, fbiou: float, episodes: int):
        self.info(f"Evaluación - fold {fold} - mIoU {miou:.4f} - FB-IoU {fbiou:.4f} - {episodes} episodios")

    def log_benchmark(self, aggregator: str, median_ms: float, p95_ms: float, peak_bytes: int):
        self.info(
            f"Benchmark - {aggregator} - mediana {median_ms:.2f}ms - p95 {p95_ms:.2f}ms - pico {peak_bytes} bytes"
        )

    def log_report_generation(self, report_type: str, file_path: str, success: bool):
        status = "GENERADO" if success else "ERROR"
        self._outcome(f"Reporte - {report_type} - {status} - {file_path}", success)


# Instancia global del logger
app_logger = Logger()
