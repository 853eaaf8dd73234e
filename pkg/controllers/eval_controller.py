# Controlador del comando eval
# Evaluación por fold con fusión K-shot; los episodios se reparten entre hilos
# y los acumuladores se fusionan en el orden de los episodios

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional

import numpy as np

from config.run_config import RunConfig
from controllers.base_controller import BaseController
from episodes.episode import Episode
from episodes.fusion import kshot_fuse
from episodes.metrics import PCK_ALPHAS, MetricAccumulator, fbiou, merge_all, miou, transfer_keypoints
from episodes.synthetic import SyntheticEpisodeGenerator
from models.hyperagg_model import HyperAggModel
from utils.checkpoint import load_checkpoint
from utils.errors import DataError
from utils.image_io import save_mask_pgm
from utils.logger import app_logger
from utils.report_generator import ReportGenerator
from utils.serialization import save_tensor


class EvalController(BaseController):
    """Calcula mIoU, FB-IoU e IoU por clase (o PCK en modo flujo)"""

    command = "eval"

    def build_model(self, config: RunConfig) -> HyperAggModel:
        model = HyperAggModel(config)
        if config.checkpoint:
            load_checkpoint(config.checkpoint, model)
        elif not config.debug_oracle:
            app_logger.warning("Evaluación sin checkpoint: se usan parámetros iniciales")
        return model

    def predict(self, model: HyperAggModel, config: RunConfig, episode: Episode) -> np.ndarray:
        """Máscara fusionada de los K soportes"""
        if config.debug_oracle:
            predictions = [episode.query_mask.copy() for _ in range(episode.num_shots)]
        else:
            predictions = model.predict_shots(episode)
        return kshot_fuse(predictions, config.tau, config.fusion_normalization)

    def _evaluate_chunk(self, model, config: RunConfig, episodes: List[Episode]) -> MetricAccumulator:
        accumulator = MetricAccumulator()
        for episode in episodes:
            if config.task == "flow":
                if config.debug_oracle:
                    predicted = episode.support_keypoints
                else:
                    predicted = transfer_keypoints(model.predict_flow(episode), episode.query_keypoints)
                accumulator.update_keypoints(predicted, episode.support_keypoints, config.finest.query_target)
            else:
                accumulator.update(self.predict(model, config, episode), episode.query_mask, episode.class_id)
        return accumulator

    def evaluate_episodes(self, model, config: RunConfig, episodes: List[Episode]) -> MetricAccumulator:
        """
        Evalúa una lista de episodios, repartida en EVAL_WORKERS hilos
        Returns:
            Acumulador fusionado en orden
        """
        workers = max(1, min(self.app_config.get_eval_workers(), len(episodes)))
        if workers == 1:
            return self._evaluate_chunk(model, config, episodes)
        chunks = [list(chunk) for chunk in np.array_split(np.arange(len(episodes)), workers)]
        with ThreadPoolExecutor(max_workers=workers) as executor:
            parts = list(executor.map(
                lambda idx: self._evaluate_chunk(model, config, [episodes[i] for i in idx]), chunks
            ))
        return merge_all(parts)

    def _save_masks(self, model, config: RunConfig, fold: int, episodes: List[Episode]):
        for index, episode in enumerate(episodes[:config.save_masks]):
            path = os.path.join(config.out, "masks", f"fold{fold}_ep{index:03d}.pgm")
            save_mask_pgm(path, self.predict(model, config, episode))

    def _save_flows(self, model, config: RunConfig, episodes: List[Episode]):
        """Campos de flujo [h, w, 2] como blob + sidecar"""
        for index, episode in enumerate(episodes[:config.save_masks]):
            name = f"fold{episode.fold_id}_ep{index:03d}"
            save_tensor(os.path.join(config.out, "flows", name), model.predict_flow(episode), name)

    def fold_episodes(self, config: RunConfig, dumped: Optional[List[Episode]]) -> Dict[int, List[Episode]]:
        """Episodios de prueba por fold: volcados (agrupados por fold_id) o sintéticos"""
        if dumped is not None:
            grouped: Dict[int, List[Episode]] = {}
            for episode in dumped:
                grouped.setdefault(episode.fold_id, []).append(episode.with_shots(config.shots))
            return dict(sorted(grouped.items()))
        generator = SyntheticEpisodeGenerator(config)
        return {fold: generator.episodes("test", config.eval_episodes, fold=fold, shots=config.shots)
                for fold in config.eval_folds}

    def run(self, config: RunConfig) -> dict:
        dumped = self.load_episode_dumps(config) if config.episodes_dir else None
        model = self.build_model(config)
        results: Dict = {"aggregator": config.aggregator, "shots": config.shots, "tau": config.tau,
                         "seed": config.seed, "task": config.task, "folds": {}}

        if config.task == "flow":
            if dumped is None:
                episodes = SyntheticEpisodeGenerator(config).flow_episodes("test", config.eval_episodes)
            else:
                episodes = dumped
                if any(episode.query_keypoints is None for episode in episodes):
                    raise DataError(f"{config.episodes_dir}: los volcados no traen puntos clave para el modo flujo")
            accumulator = self.evaluate_episodes(model, config, episodes)
            results["pck"] = {str(alpha): accumulator.pck(alpha) for alpha in PCK_ALPHAS}
            self._save_flows(model, config, episodes)
            lines = [f"PCK@{alpha}: {value:.4f}" for alpha, value in results["pck"].items()]
        else:
            for fold, episodes in self.fold_episodes(config, dumped).items():
                accumulator = self.evaluate_episodes(model, config, episodes)
                fold_miou, fold_fbiou = miou(accumulator), fbiou(accumulator)
                results["folds"][str(fold)] = {
                    "miou": fold_miou,
                    "fbiou": fold_fbiou,
                    "class_iou": {str(c): v for c, v in accumulator.class_iou().items()},
                }
                app_logger.log_evaluation(fold, fold_miou, fold_fbiou, len(episodes))
                self._save_masks(model, config, fold, episodes)
            folds = results["folds"].values()
            results["mean_miou"] = float(np.mean([f["miou"] for f in folds]))
            results["mean_fbiou"] = float(np.mean([f["fbiou"] for f in folds]))
            lines = [f"fold {f}: mIoU {v['miou']:.4f}  FB-IoU {v['fbiou']:.4f}" for f, v in results["folds"].items()]
            lines.append(f"media: mIoU {results['mean_miou']:.4f}  FB-IoU {results['mean_fbiou']:.4f}")

        report = ReportGenerator(config.out).create_metric_report(results)
        return {"results": results, "report": report, "lines": lines}
