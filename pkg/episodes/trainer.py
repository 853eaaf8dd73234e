# Bucle de entrenamiento episódico
# AdamW sobre entropía cruzada por píxel (o error de punto final en modo flujo),
# validación periódica, early stopping, registro de pérdidas y checkpoints

import csv
import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from tensor_core import Tensor, ops
from config.run_config import RunConfig
from episodes.episode import Episode
from episodes.metrics import MetricAccumulator, miou, pck, transfer_keypoints
from episodes.optimizer import AdamW
from episodes.synthetic import SyntheticEpisodeGenerator
from utils.checkpoint import save_checkpoint
from utils.errors import NumericError
from utils.logger import app_logger

LOSS_LOG = "loss_log.csv"


def endpoint_error(flow: Tensor, query_keypoints: np.ndarray, support_keypoints: np.ndarray) -> Tensor:
    """
    Error de punto final medio, solo en los puntos anotados
    Args:
        flow: Tensor [h, w, 2] con desplazamientos (dy, dx)
        query_keypoints: [N, 2] enteros (y, x)
        support_keypoints: [N, 2] correspondencias en el soporte
    Returns:
        Tensor escalar
    """
    height, width, _ = flow.shape
    keypoints = np.asarray(query_keypoints, dtype=np.int64)
    index = keypoints[:, 0] * width + keypoints[:, 1]
    sampled = ops.take(ops.reshape(flow, (height * width, 2)), index, axis=0)
    target = (np.asarray(support_keypoints) - keypoints).astype(flow.dtype)
    diff = ops.sub(sampled, Tensor(target, dtype=flow.dtype))
    return ops.mean(ops.sqrt(ops.clamp_min(ops.sum_(ops.mul(diff, diff), axis=-1), 1e-12)))


def episode_loss(model, episode: Episode) -> Tensor:
    """Pérdida de un episodio con el primer soporte"""
    output = model.forward_shot(episode, 0)
    if model.config.task == "flow":
        return endpoint_error(output, episode.query_keypoints, episode.support_keypoints)
    return ops.cross_entropy(output, episode.query_mask)


def validation_score(model, episodes: List[Episode]) -> float:
    """mIoU 1-shot en modo máscara; PCK@0.1 en modo flujo"""
    accumulator = MetricAccumulator()
    if model.config.task == "flow":
        scores = []
        for episode in episodes:
            flow = model.predict_flow(episode)
            predicted = transfer_keypoints(flow, episode.query_keypoints)
            scores.append(pck(predicted, episode.support_keypoints, 0.1, flow.shape[0]))
        return float(np.mean(scores))
    for episode in episodes:
        accumulator.update(model.predict_shots(episode)[0], episode.query_mask, episode.class_id)
    return miou(accumulator)


@dataclass
class TrainingResult:
    losses: List[float] = field(default_factory=list)
    validations: Dict[int, float] = field(default_factory=dict)
    best_score: Optional[float] = None
    best_step: int = 0
    stopped_early: bool = False
    checkpoint: Optional[str] = None

    @property
    def steps_run(self) -> int:
        return len(self.losses)


class Trainer:
    """
    Entrenamiento secuencial sobre un conjunto fijo de episodios.
    Cada paso promedia el gradiente de `batch_size` episodios.
    """

    def __init__(self, model, config: RunConfig, out_dir: Optional[str] = None,
                 train_episodes: Optional[List[Episode]] = None,
                 val_episodes: Optional[List[Episode]] = None):
        self.model = model
        self.config = config
        self.out_dir = out_dir
        self.optimizer = AdamW(model.named_parameters(), lr=config.lr, betas=(config.beta1, config.beta2),
                               eps=config.adam_eps, weight_decay=config.weight_decay)
        generator = SyntheticEpisodeGenerator(config)
        if config.task == "flow":
            self.train_episodes = train_episodes or generator.flow_episodes("train", config.train_episodes)
            self.val_episodes = val_episodes or generator.flow_episodes("val", config.val_episodes)
        else:
            self.train_episodes = train_episodes or generator.episodes("train", config.train_episodes, shots=1)
            self.val_episodes = val_episodes or generator.episodes("val", config.val_episodes, shots=1)
        self.recent_seeds: List[int] = []
        self.current_step = 0
        self.history: List[float] = []

    def _batch(self, step: int) -> List[Episode]:
        size = self.config.batch_size
        count = len(self.train_episodes)
        return [self.train_episodes[((step - 1) * size + b) % count] for b in range(size)]

    def train_step(self, step: int) -> float:
        """
        Un paso de optimización
        Returns:
            Pérdida media del lote
        Raises:
            NumericError con la semilla del episodio que produjo valores no finitos
        """
        batch = self._batch(step)
        self.recent_seeds = [episode.seed for episode in batch]
        self.optimizer.zero_grad()
        total = 0.0
        for episode in batch:
            try:
                loss = episode_loss(self.model, episode)
                ops.mul(loss, 1.0 / len(batch)).backward()
            except NumericError as error:
                raise NumericError(
                    f"Pérdida no finita en el paso {step} (episodio con semilla {episode.seed}): {error}",
                    seed=episode.seed,
                ) from error
            total += loss.item()
        self.optimizer.step()
        return total / len(batch)

    def train(self, steps: Optional[int] = None) -> TrainingResult:
        """
        Ejecuta el bucle completo
        Args:
            steps: Número máximo de pasos (por defecto config.steps)
        Returns:
            TrainingResult con la curva de pérdidas y la mejor validación
        """
        steps = self.config.steps if steps is None else steps
        result = TrainingResult()
        self.history = result.losses
        best_state = None
        stale = 0
        log_file = None
        writer = None
        if self.out_dir:
            os.makedirs(self.out_dir, exist_ok=True)
            log_file = open(os.path.join(self.out_dir, LOSS_LOG), 'w', encoding='utf-8', newline='')
            writer = csv.writer(log_file)
            writer.writerow(["step", "loss"])
        try:
            for step in range(1, steps + 1):
                self.current_step = step
                started = time.perf_counter()
                loss = self.train_step(step)
                result.losses.append(loss)
                if writer is not None:
                    writer.writerow([step, repr(loss)])
                app_logger.log_training_step(step, loss, self.config.lr, (time.perf_counter() - started) * 1000)

                if step % self.config.eval_interval == 0:
                    score = validation_score(self.model, self.val_episodes)
                    result.validations[step] = score
                    if result.best_score is None or score > result.best_score:
                        result.best_score, result.best_step = score, step
                        best_state = self.model.state_dict()
                        stale = 0
                    else:
                        stale += 1
                    app_logger.log_validation(step, score, result.best_score)
                    if stale >= self.config.patience:
                        result.stopped_early = True
                        app_logger.info(f"Early stopping en el paso {step} (mejor paso {result.best_step})")
                        break

                if self.out_dir and step % self.config.checkpoint_interval == 0:
                    save_checkpoint(os.path.join(self.out_dir, f"step_{step:06d}"), self.model,
                                    self.config, step, self.optimizer)
        finally:
            if log_file is not None:
                log_file.close()

        if best_state is not None:
            self.model.load_state_dict(best_state)
        if self.out_dir:
            result.checkpoint = save_checkpoint(os.path.join(self.out_dir, "final"), self.model, self.config,
                                                result.steps_run, self.optimizer)
        return result
