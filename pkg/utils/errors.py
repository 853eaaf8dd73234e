# Jerarquía de errores de HyperAgg
# Cada comando de la CLI traduce estas excepciones a un código de salida


class HyperAggError(Exception):
    """Error base de la aplicación"""

    error_code = "HYPERAGG_ERROR"


class ConfigError(HyperAggError, ValueError):
    """
    Configuración inválida.
    Se detecta al cargar la configuración, antes de reservar memoria.
    """

    error_code = "CONFIG_ERROR"

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ShapeError(HyperAggError, ValueError):
    """Formas incompatibles en una operación"""

    error_code = "SHAPE_ERROR"


class NumericError(HyperAggError, ArithmeticError):
    """Aparición de NaN/Inf en un paso hacia adelante o hacia atrás"""

    error_code = "NUMERIC_ERROR"

    def __init__(self, message: str, seed=None):
        self.seed = seed
        super().__init__(message)


class CheckpointError(HyperAggError):
    """Checkpoint corrupto o incompatible con la configuración"""

    error_code = "CHECKPOINT_ERROR"


class DataError(HyperAggError, ValueError):
    """Datos de entrada inválidos (máscaras no binarias, archivos corruptos)"""

    error_code = "DATA_ERROR"
