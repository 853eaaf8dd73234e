# Archivo principal de la aplicación
# Punto de entrada de la línea de comandos: train, eval, bench y shapes
# Códigos de salida: 0 éxito, 1 error de configuración, 2 error numérico

import argparse
import os
import sys

# Agregar las rutas de los módulos al path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from config.app_config import AppConfig
from config.run_config import MODES, load_run_config
from controllers.bench_controller import BenchController
from controllers.eval_controller import EvalController
from controllers.shapes_controller import ShapesController
from controllers.train_controller import TrainController
from utils.errors import ConfigError
from utils.logger import app_logger
from views.base_view import BaseView

CONTROLLERS = {
    "train": TrainController,
    "eval": EvalController,
    "bench": BenchController,
    "shapes": ShapesController,
}

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperagg", description="Agregación de hipercorrelaciones few-shot")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in MODES:
        sub = subparsers.add_parser(command)
        sub.add_argument("--config", help="Archivo JSON con 'preset' y sobrescrituras")
        sub.add_argument("--preset", choices=["desk", "full"])
        sub.add_argument("--seed", type=int)
        sub.add_argument("--steps", type=int)
        sub.add_argument("--k", type=int, dest="shots")
        sub.add_argument("--tau", type=float)
        sub.add_argument("--aggregator")
        sub.add_argument("--checkpoint")
        sub.add_argument("--episodes", dest="episodes_dir", help="Directorio con episodios volcados")
        sub.add_argument("--out")
        sub.add_argument("--lr", type=float)
        sub.add_argument("--task", choices=["mask", "flow"])
        sub.add_argument("--debug-oracle", action="store_true", dest="debug_oracle", default=None)
        sub.add_argument("--json", action="store_true", help="Imprime la respuesta como JSON")
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict:
    """Flags de la CLI como sobrescrituras de la configuración (None se ignora)"""
    overrides = {
        "mode": args.command,
        "preset": args.preset,
        "seed": args.seed,
        "steps": args.steps,
        "shots": args.shots,
        "tau": args.tau,
        "aggregator": args.aggregator,
        "checkpoint": args.checkpoint,
        "episodes_dir": args.episodes_dir,
        "out": args.out,
        "lr": args.lr,
        "task": args.task,
        "debug_oracle": args.debug_oracle,
    }
    return {key: value for key, value in overrides.items() if value is not None}


def exit_code(response: dict) -> int:
    if response["status"] == "success":
        return EXIT_OK
    if response["data"].get("error_code") == "NUMERIC_ERROR":
        return EXIT_NUMERIC
    return EXIT_CONFIG


def main(argv=None) -> int:
    """
    Función principal de la aplicación
    Args:
        argv: Argumentos (por defecto sys.argv)
    Returns:
        Código de salida
    """
    args = build_parser().parse_args(argv)
    view = BaseView()
    try:
        config = load_run_config(args.config, overrides_from_args(args))
    except ConfigError as error:
        app_logger.error(f"Configuración inválida: {error}")
        response = view.format_error(str(error), error.error_code)
        print(view.render(response, args.json), file=sys.stderr)
        return EXIT_CONFIG

    app_config = AppConfig()
    app_logger.info(f"=== {app_config.get_app_name()} - {args.command} ({app_config.get_environment()}) ===")
    response = CONTROLLERS[args.command]().execute(config)
    output = view.render(response, args.json)
    print(output, file=sys.stdout if response["status"] == "success" else sys.stderr)
    return exit_code(response)


if __name__ == "__main__":
    sys.exit(main())
