# Métricas de evaluación
# mIoU por clase, FB-IoU y PCK sobre conteos acumulados

from collections import defaultdict
from typing import Dict, Iterable, Sequence

import numpy as np

from utils.errors import DataError, ShapeError

PCK_ALPHAS = (0.05, 0.1, 0.15)


class MetricAccumulator:
    """
    Conteos de intersección/unión por clase, de primer plano y de fondo,
    y aciertos de puntos clave por α. La fusión es asociativa y conmutativa.
    """

    def __init__(self):
        self.class_intersection: Dict[int, int] = defaultdict(int)
        self.class_union: Dict[int, int] = defaultdict(int)
        self.fg_intersection = 0
        self.fg_union = 0
        self.bg_intersection = 0
        self.bg_union = 0
        self.keypoints_correct: Dict[float, int] = defaultdict(int)
        self.keypoints_total: Dict[float, int] = defaultdict(int)
        self.episodes = 0

    def update(self, prediction: np.ndarray, target: np.ndarray, class_id: int):
        """Suma una predicción binaria contra su máscara verdadera"""
        prediction = np.asarray(prediction).astype(bool)
        target = np.asarray(target).astype(bool)
        if prediction.shape != target.shape:
            raise ShapeError(f"Predicción {prediction.shape} y verdad {target.shape} incompatibles")
        fg_inter = int(np.count_nonzero(prediction & target))
        fg_union = int(np.count_nonzero(prediction | target))
        self.class_intersection[class_id] += fg_inter
        self.class_union[class_id] += fg_union
        self.fg_intersection += fg_inter
        self.fg_union += fg_union
        self.bg_intersection += int(np.count_nonzero(~prediction & ~target))
        self.bg_union += int(np.count_nonzero(~prediction | ~target))
        self.episodes += 1

    def update_keypoints(self, predicted: np.ndarray, target: np.ndarray, normalizer: float,
                         alphas: Sequence[float] = PCK_ALPHAS):
        errors = keypoint_errors(predicted, target)
        for alpha in alphas:
            self.keypoints_correct[alpha] += int(np.count_nonzero(errors <= alpha * normalizer))
            self.keypoints_total[alpha] += int(errors.size)
        self.episodes += 1

    def merge(self, other: "MetricAccumulator") -> "MetricAccumulator":
        """Nuevo acumulador con la suma de ambos"""
        merged = MetricAccumulator()
        for source in (self, other):
            for class_id, value in source.class_intersection.items():
                merged.class_intersection[class_id] += value
            for class_id, value in source.class_union.items():
                merged.class_union[class_id] += value
            for alpha, value in source.keypoints_correct.items():
                merged.keypoints_correct[alpha] += value
            for alpha, value in source.keypoints_total.items():
                merged.keypoints_total[alpha] += value
            merged.fg_intersection += source.fg_intersection
            merged.fg_union += source.fg_union
            merged.bg_intersection += source.bg_intersection
            merged.bg_union += source.bg_union
            merged.episodes += source.episodes
        return merged

    def class_iou(self) -> Dict[int, float]:
        """IoU por clase, solo clases con unión no nula, ordenadas por id"""
        return {
            class_id: self.class_intersection[class_id] / self.class_union[class_id]
            for class_id in sorted(self.class_union)
            if self.class_union[class_id] > 0
        }

    def pck(self, alpha: float) -> float:
        total = self.keypoints_total.get(alpha, 0)
        if total == 0:
            raise DataError(f"No hay puntos clave acumulados para alpha={alpha}")
        return self.keypoints_correct[alpha] / total


def merge_all(accumulators: Iterable[MetricAccumulator]) -> MetricAccumulator:
    merged = MetricAccumulator()
    for accumulator in accumulators:
        merged = merged.merge(accumulator)
    return merged


def miou(accumulator: MetricAccumulator) -> float:
    """Media de IoU sobre las clases evaluadas"""
    ious = accumulator.class_iou()
    if not ious:
        raise DataError("miou: no hay clases con unión no nula")
    return float(np.mean(list(ious.values())))


def fbiou(accumulator: MetricAccumulator) -> float:
    """Media de IoU de primer plano y de fondo, sin distinguir clases"""
    if accumulator.fg_union + accumulator.bg_union == 0:
        raise DataError("fbiou: acumulador vacío")
    fg = accumulator.fg_intersection / accumulator.fg_union if accumulator.fg_union else 1.0
    bg = accumulator.bg_intersection / accumulator.bg_union if accumulator.bg_union else 1.0
    return 0.5 * (fg + bg)


def keypoint_errors(predicted: np.ndarray, target: np.ndarray) -> np.ndarray:
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape or predicted.ndim != 2:
        raise ShapeError(f"Puntos clave incompatibles {predicted.shape} y {target.shape}")
    return np.linalg.norm(predicted - target, axis=1)


def pck(predicted: np.ndarray, target: np.ndarray, alpha: float, normalizer: float) -> float:
    """
    Porcentaje de puntos clave correctos
    Args:
        predicted: [N, 2]
        target: [N, 2]
        alpha: Umbral relativo (> 0)
        normalizer: Lado máximo de la imagen o caja
    Returns:
        Fracción con error <= alpha·normalizer
    """
    if alpha <= 0:
        raise DataError(f"alpha debe ser positivo, recibido {alpha}")
    errors = keypoint_errors(predicted, target)
    if errors.size == 0:
        raise DataError("pck: no hay puntos clave")
    return float(np.count_nonzero(errors <= alpha * normalizer) / errors.size)


def transfer_keypoints(flow: np.ndarray, keypoints: np.ndarray) -> np.ndarray:
    """Traslada puntos (y, x) de la consulta sumando el flujo en su celda"""
    keypoints = np.asarray(keypoints, dtype=np.int64)
    return keypoints + flow[keypoints[:, 0], keypoints[:, 1]]
