# Controlador del comando train

import json
import os

from config.run_config import RunConfig
from controllers.base_controller import BaseController
from episodes.trainer import LOSS_LOG, Trainer
from models.hyperagg_model import HyperAggModel
from utils.checkpoint import load_checkpoint
from utils.errors import NumericError
from utils.logger import app_logger


class TrainController(BaseController):
    """Entrena el modelo sobre episodios sintéticos (o volcados con --episodes) y guarda checkpoints"""

    command = "train"

    def run(self, config: RunConfig) -> dict:
        train_episodes = self.load_episode_dumps(config) if config.episodes_dir else None
        model = HyperAggModel(config)
        trainer = Trainer(model, config, out_dir=config.out, train_episodes=train_episodes)
        if config.checkpoint:
            load_checkpoint(config.checkpoint, model, trainer.optimizer)
        try:
            result = trainer.train()
        except NumericError as error:
            self._dump_diagnostic(config, trainer, error)
            raise
        data = {
            "steps": result.steps_run,
            "initial_loss": result.losses[0] if result.losses else None,
            "final_loss": result.losses[-1] if result.losses else None,
            "best_score": result.best_score,
            "best_step": result.best_step,
            "stopped_early": result.stopped_early,
            "checkpoint": result.checkpoint,
            "loss_log": os.path.join(config.out, LOSS_LOG),
        }
        data["lines"] = [
            f"Pasos: {data['steps']}  pérdida inicial {data['initial_loss']}  final {data['final_loss']}",
            f"Checkpoint: {data['checkpoint']}",
        ]
        return data

    def _dump_diagnostic(self, config: RunConfig, trainer: Trainer, error: NumericError):
        """Escribe diagnostic.json con el paso y las semillas del lote que falló"""
        os.makedirs(config.out, exist_ok=True)
        path = os.path.join(config.out, "diagnostic.json")
        diagnostic = {
            "step": trainer.current_step,
            "seed": error.seed,
            "batch_seeds": trainer.recent_seeds,
            "recent_losses": trainer.history[-10:],
            "error": str(error),
            "config": config.to_dict(),
        }
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(diagnostic, f, indent=2, sort_keys=True)
        app_logger.error(f"Diagnóstico escrito en {path}")
