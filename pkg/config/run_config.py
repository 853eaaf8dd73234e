# Configuración de experimentos
# Presets desk/full, carga desde JSON con herencia de preset y validación con marshmallow
# Todas las restricciones de forma se comprueban aquí, antes de reservar memoria

import copy
import json
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from marshmallow import Schema, fields, validate, post_load, RAISE, ValidationError

from utils.errors import ConfigError

AGGREGATORS = ("vtm", "conv4d", "identity")
MODES = ("train", "eval", "bench", "shapes")
TASKS = ("mask", "flow")


@dataclass
class LevelConfig:
    """Un nivel de la pirámide (p), de grueso a fino"""

    name: str
    layers: List[int]
    channels: int
    query_size: int
    support_size: int
    query_target: int
    depth: int

    @property
    def num_layers(self) -> int:
        return len(self.layers)


@dataclass
class RunConfig:
    """Configuración completa de una ejecución"""

    preset: str
    mode: str
    task: str
    seed: int
    image_size: int
    levels: List[LevelConfig]
    support_target: int
    embed_dim: int
    heads: int
    window_size: int
    mlp_ratio: int
    vem_blocks: int
    gn_groups: int
    use_vem: bool
    vtm_residual: bool
    aggregator: str
    affinity_channels: List[int]
    affinity_proj: List[int]
    decoder_window: int
    decoder_blocks: int
    use_affinity: bool
    num_classes: int
    num_folds: int
    test_fold: int
    eval_folds: List[int]
    noise: float
    shots: int
    tau: float
    fusion_normalization: str
    train_episodes: int
    val_episodes: int
    eval_episodes: int
    steps: int
    lr: float
    weight_decay: float
    beta1: float
    beta2: float
    adam_eps: float
    batch_size: int
    eval_interval: int
    patience: int
    checkpoint_interval: int
    bench_aggregators: List[str]
    bench_repeats: int
    save_masks: int
    out: str
    checkpoint: Optional[str] = None
    episodes_dir: Optional[str] = None
    debug_oracle: bool = False

    @property
    def finest(self) -> LevelConfig:
        return self.levels[-1]

    @property
    def decoder_stages(self) -> int:
        """Etapas del decodificador: una por proyección en modo máscara, una en modo flujo"""
        return 1 if self.task == "flow" else len(self.affinity_channels)

    def stage_resolution(self, stage: int) -> int:
        return self.finest.query_target * (2 ** stage)

    @property
    def output_size(self) -> int:
        return self.stage_resolution(self.decoder_stages - 1)

    def to_dict(self) -> Dict[str, Any]:
        return RunConfigSchema().dump(self)


class LevelSchema(Schema):
    class Meta:
        unknown = RAISE

    name = fields.Str(required=True)
    layers = fields.List(fields.Int(validate=validate.Range(min=0)), required=True,
                         validate=validate.Length(min=1))
    channels = fields.Int(required=True, validate=validate.Range(min=1))
    query_size = fields.Int(required=True, validate=validate.Range(min=1))
    support_size = fields.Int(required=True, validate=validate.Range(min=1))
    query_target = fields.Int(required=True, validate=validate.Range(min=1))
    depth = fields.Int(required=True, validate=validate.Range(min=1))

    @post_load
    def make_level(self, data, **kwargs):
        return LevelConfig(**data)


class RunConfigSchema(Schema):
    """Esquema de RunConfig; claves desconocidas son error"""

    class Meta:
        unknown = RAISE

    preset = fields.Str(required=True, validate=validate.OneOf(["desk", "full"]))
    mode = fields.Str(required=True, validate=validate.OneOf(MODES))
    task = fields.Str(required=True, validate=validate.OneOf(TASKS))
    seed = fields.Int(required=True)
    image_size = fields.Int(required=True, validate=validate.Range(min=1))
    levels = fields.List(fields.Nested(LevelSchema), required=True, validate=validate.Length(min=1))
    support_target = fields.Int(required=True, validate=validate.Range(min=1))
    embed_dim = fields.Int(required=True, validate=validate.Range(min=1))
    heads = fields.Int(required=True, validate=validate.Range(min=1))
    window_size = fields.Int(required=True, validate=validate.Range(min=1))
    mlp_ratio = fields.Int(required=True, validate=validate.Range(min=1))
    vem_blocks = fields.Int(required=True, validate=validate.Range(min=1))
    gn_groups = fields.Int(required=True, validate=validate.Range(min=1))
    use_vem = fields.Bool(required=True)
    vtm_residual = fields.Bool(required=True)
    aggregator = fields.Str(required=True, validate=validate.OneOf(AGGREGATORS))
    affinity_channels = fields.List(fields.Int(validate=validate.Range(min=1)), required=True,
                                    validate=validate.Length(min=1))
    affinity_proj = fields.List(fields.Int(validate=validate.Range(min=1)), required=True,
                                validate=validate.Length(min=1))
    decoder_window = fields.Int(required=True, validate=validate.Range(min=1))
    decoder_blocks = fields.Int(required=True, validate=validate.Range(min=1))
    use_affinity = fields.Bool(required=True)
    num_classes = fields.Int(required=True, validate=validate.Range(min=1))
    num_folds = fields.Int(required=True, validate=validate.Range(min=1))
    test_fold = fields.Int(required=True, validate=validate.Range(min=0))
    eval_folds = fields.List(fields.Int(validate=validate.Range(min=0)), required=True)
    noise = fields.Float(required=True, validate=validate.Range(min=0.0))
    shots = fields.Int(required=True, validate=validate.Range(min=1))
    tau = fields.Float(required=True, validate=validate.Range(min=0.0, max=1.0, min_inclusive=False))
    fusion_normalization = fields.Str(required=True, validate=validate.OneOf(["k", "max"]))
    train_episodes = fields.Int(required=True, validate=validate.Range(min=1))
    val_episodes = fields.Int(required=True, validate=validate.Range(min=1))
    eval_episodes = fields.Int(required=True, validate=validate.Range(min=1))
    steps = fields.Int(required=True, validate=validate.Range(min=0))
    lr = fields.Float(required=True, validate=validate.Range(min=0.0))
    weight_decay = fields.Float(required=True, validate=validate.Range(min=0.0))
    beta1 = fields.Float(required=True, validate=validate.Range(min=0.0, max=1.0, max_inclusive=False))
    beta2 = fields.Float(required=True, validate=validate.Range(min=0.0, max=1.0, max_inclusive=False))
    adam_eps = fields.Float(required=True, validate=validate.Range(min=0.0, min_inclusive=False))
    batch_size = fields.Int(required=True, validate=validate.Range(min=1))
    eval_interval = fields.Int(required=True, validate=validate.Range(min=1))
    patience = fields.Int(required=True, validate=validate.Range(min=1))
    checkpoint_interval = fields.Int(required=True, validate=validate.Range(min=1))
    bench_aggregators = fields.List(fields.Str(validate=validate.OneOf(AGGREGATORS)), required=True,
                                    validate=validate.Length(min=1))
    bench_repeats = fields.Int(required=True, validate=validate.Range(min=1))
    save_masks = fields.Int(required=True, validate=validate.Range(min=0))
    out = fields.Str(required=True)
    checkpoint = fields.Str(allow_none=True, load_default=None)
    episodes_dir = fields.Str(allow_none=True, load_default=None)
    debug_oracle = fields.Bool(load_default=False)

    @post_load
    def make_config(self, data, **kwargs):
        return RunConfig(**data)


_COMMON = {
    "mode": "train",
    "task": "mask",
    "seed": 0,
    "mlp_ratio": 4,
    "vem_blocks": 2,
    "gn_groups": 4,
    "use_vem": True,
    "vtm_residual": True,
    "aggregator": "vtm",
    "decoder_window": 4,
    "decoder_blocks": 2,
    "use_affinity": True,
    "num_folds": 4,
    "test_fold": 0,
    "eval_folds": [0, 1, 2, 3],
    "shots": 1,
    "tau": 0.5,
    "fusion_normalization": "k",
    "lr": 5e-4,
    "weight_decay": 1e-2,
    "beta1": 0.9,
    "beta2": 0.999,
    "adam_eps": 1e-8,
    "bench_aggregators": ["vtm", "conv4d", "identity"],
    "save_masks": 4,
    "out": "runs",
}

PRESETS: Dict[str, Dict[str, Any]] = {
    "desk": dict(_COMMON, **{
        "preset": "desk",
        "image_size": 32,
        "levels": [
            {"name": "p5", "layers": [5], "channels": 32, "query_size": 4, "support_size": 4,
             "query_target": 2, "depth": 4},
            {"name": "p4", "layers": [3, 4], "channels": 16, "query_size": 8, "support_size": 8,
             "query_target": 4, "depth": 2},
            {"name": "p3", "layers": [1, 2], "channels": 8, "query_size": 16, "support_size": 16,
             "query_target": 8, "depth": 2},
        ],
        "support_target": 4,
        "embed_dim": 16,
        "heads": 2,
        "window_size": 2,
        "affinity_channels": [16, 8, 8],
        "affinity_proj": [8, 4, 4],
        "num_classes": 8,
        "noise": 0.3,
        "train_episodes": 8,
        "val_episodes": 8,
        "eval_episodes": 12,
        "steps": 2000,
        "batch_size": 1,
        "eval_interval": 100,
        "patience": 5,
        "checkpoint_interval": 200,
        "bench_repeats": 7,
    }),
    # Valores de escala completa (ResNet50: 3/6/4 capas por nivel)
    "full": dict(_COMMON, **{
        "preset": "full",
        "image_size": 128,
        "levels": [
            {"name": "p5", "layers": [11, 12, 13], "channels": 2048, "query_size": 8, "support_size": 8,
             "query_target": 8, "depth": 4},
            {"name": "p4", "layers": [5, 6, 7, 8, 9, 10], "channels": 1024, "query_size": 16,
             "support_size": 16, "query_target": 16, "depth": 2},
            {"name": "p3", "layers": [1, 2, 3, 4], "channels": 512, "query_size": 32, "support_size": 32,
             "query_target": 32, "depth": 2},
        ],
        "support_target": 8,
        "embed_dim": 128,
        "heads": 4,
        "window_size": 4,
        "affinity_channels": [1024, 512, 256],
        "affinity_proj": [64, 32, 16],
        "num_classes": 20,
        "noise": 0.3,
        "train_episodes": 64,
        "val_episodes": 16,
        "eval_episodes": 100,
        "steps": 20000,
        "batch_size": 16,
        "eval_interval": 500,
        "patience": 10,
        "checkpoint_interval": 1000,
        "bench_repeats": 3,
    }),
}


def validate_run_config(config: RunConfig) -> RunConfig:
    """
    Comprueba las invariantes entre módulos
    Args:
        config: Configuración ya deserializada
    Returns:
        La misma configuración si es válida
    Raises:
        ConfigError nombrando la primera restricción violada
    """
    n = config.window_size
    if config.embed_dim % config.heads != 0:
        raise ConfigError("heads", f"{config.heads} cabezas no dividen embed_dim={config.embed_dim}")
    if config.use_vem and config.embed_dim % config.gn_groups != 0:
        raise ConfigError("gn_groups", f"{config.gn_groups} grupos no dividen embed_dim={config.embed_dim}")
    if config.support_target % n != 0:
        raise ConfigError("window_size", f"window_size={n} no divide support_target={config.support_target}")

    seen_layers = set()
    for i, level in enumerate(config.levels):
        if level.layers != sorted(level.layers) or seen_layers.intersection(level.layers):
            raise ConfigError(f"levels[{i}].layers", "los índices de capa deben ser ascendentes y disjuntos")
        seen_layers.update(level.layers)
        if level.query_target % n != 0:
            raise ConfigError(
                "window_size",
                f"window_size={n} no divide la extensión {level.query_target} del nivel {level.name}"
            )
        if level.query_size % level.query_target != 0:
            raise ConfigError(f"levels[{i}].query_target",
                              f"{level.query_target} no divide query_size={level.query_size}")
        if level.support_size % config.support_target != 0:
            raise ConfigError(f"levels[{i}].support_size",
                              f"support_target={config.support_target} no divide {level.support_size}")
        if i > 0 and level.query_target != 2 * config.levels[i - 1].query_target:
            raise ConfigError(f"levels[{i}].query_target",
                              "la extensión de consulta debe duplicarse de un nivel al siguiente")

    if len(config.affinity_channels) != len(config.affinity_proj):
        raise ConfigError("affinity_proj", "debe tener la misma longitud que affinity_channels")
    for stage in range(config.decoder_stages):
        resolution = config.stage_resolution(stage)
        if resolution % config.decoder_window != 0:
            raise ConfigError("decoder_window",
                              f"decoder_window={config.decoder_window} no divide la etapa de {resolution}")
    if config.task == "mask" and config.output_size != config.image_size:
        raise ConfigError("image_size",
                          f"la salida del decodificador ({config.output_size}) difiere de image_size={config.image_size}")

    if config.num_classes % config.num_folds != 0:
        raise ConfigError("num_folds", f"{config.num_folds} folds no dividen {config.num_classes} clases")
    if config.num_folds < 2:
        raise ConfigError("num_folds", "se necesitan al menos 2 folds para separar entrenamiento y prueba")
    if config.test_fold >= config.num_folds:
        raise ConfigError("test_fold", f"{config.test_fold} fuera de rango para {config.num_folds} folds")
    if any(f >= config.num_folds for f in config.eval_folds):
        raise ConfigError("eval_folds", f"folds fuera de rango para {config.num_folds} folds")
    return config


def _deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = copy.deepcopy(value)
    return merged


def build_run_config(preset: str = "desk", overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Construye una configuración a partir de un preset y sobrescrituras
    Args:
        preset: 'desk' o 'full'
        overrides: Claves que reemplazan las del preset (None se ignora)
    Returns:
        RunConfig validada
    """
    if preset not in PRESETS:
        raise ConfigError("preset", f"preset desconocido: {preset}")
    data = _deep_merge(PRESETS[preset], overrides or {})
    data["preset"] = preset
    try:
        config = RunConfigSchema().load(data)
    except ValidationError as error:
        field_name = sorted(error.messages)[0]
        raise ConfigError(field_name, str(error.messages[field_name])) from None
    return validate_run_config(config)


def load_run_config(path: Optional[str] = None, cli_overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Carga un archivo JSON con herencia explícita de preset
    Args:
        path: Archivo JSON; la clave 'preset' elige la base (desk por defecto)
        cli_overrides: Valores de la línea de comandos, aplicados al final
    Returns:
        RunConfig validada
    """
    file_data: Dict[str, Any] = {}
    if path:
        if not os.path.exists(path):
            raise ConfigError("config", f"no existe el archivo {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                file_data = json.load(f)
        except json.JSONDecodeError as error:
            raise ConfigError("config", f"JSON inválido: {error}") from None
        if not isinstance(file_data, dict):
            raise ConfigError("config", "el archivo debe contener un objeto JSON")
    overrides = dict(cli_overrides or {})
    preset = overrides.pop("preset", None) or file_data.pop("preset", "desk")
    merged = _deep_merge(file_data, overrides)
    return build_run_config(preset, merged)
