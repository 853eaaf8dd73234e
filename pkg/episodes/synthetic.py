# Generador sintético de episodios
# Cada clase tiene una firma de rasgos fija por capa; las regiones de máscara
# de soporte y consulta llevan la firma y el resto es ruido, de modo que la
# máscara correcta se puede recuperar solo con las correlaciones

from typing import Dict, List, Optional

import numpy as np

from config.run_config import RunConfig
from episodes.episode import Episode, SupportShot
from models.correlation import resize_mask_nearest

# Semilla fija de las firmas de clase: el "dataset" no cambia con --seed
SIGNATURE_SEED = 7919
FLOW_CHANNELS = 16
FLOW_KEYPOINTS = 8
SPLIT_CODES = {"train": 0, "val": 1, "test": 2, "flow": 3}


def fold_classes(config: RunConfig, fold: int) -> List[int]:
    """Clases de prueba del fold: bloque contiguo de num_classes / num_folds"""
    per_fold = config.num_classes // config.num_folds
    return list(range(fold * per_fold, (fold + 1) * per_fold))


def train_classes(config: RunConfig, fold: int) -> List[int]:
    held_out = set(fold_classes(config, fold))
    return [c for c in range(config.num_classes) if c not in held_out]


def episode_seed(config: RunConfig, split: str, fold: int, index: int) -> int:
    """Semilla del episodio derivada de (seed, split, fold, índice)"""
    sequence = np.random.SeedSequence([config.seed, SPLIT_CODES[split], fold, index])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def _unit(rng: np.random.Generator, size: int) -> np.ndarray:
    vector = rng.standard_normal(size)
    return vector / np.linalg.norm(vector)


def class_signature(class_id: int, layer: int, channels: int) -> np.ndarray:
    rng = np.random.default_rng([SIGNATURE_SEED, class_id, layer])
    return _unit(rng, channels)


def random_object_mask(rng: np.random.Generator, size: int) -> np.ndarray:
    """Elipse aleatoria (binaria) en una imagen size×size"""
    cy, cx = rng.uniform(0.3, 0.7, size=2) * size
    ry, rx = rng.uniform(0.18, 0.35, size=2) * size
    yy, xx = np.mgrid[0:size, 0:size] + 0.5
    return ((((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2) <= 1.0).astype(np.uint8)


class SyntheticEpisodeGenerator:
    """
    Generador determinista de episodios por semilla.
    Los splits train/val usan las clases de entrenamiento del fold;
    test usa las clases reservadas del fold.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.layer_shapes: Dict[int, tuple] = {}
        for level in config.levels:
            for layer in level.layers:
                self.layer_shapes[layer] = (level.query_size, level.support_size, level.channels)

    # Rasgos

    def _features(self, rng: np.random.Generator, size: int, channels: int,
                  regions: List[tuple]) -> np.ndarray:
        """Ruido más la firma de cada región (máscara, vector)"""
        noise = self.config.noise / np.sqrt(channels)
        features = noise * rng.standard_normal((size, size, channels))
        for mask, vector in regions:
            cells = resize_mask_nearest(mask, (size, size)).astype(bool)
            features[cells] += vector
        return features

    def _pyramid_features(self, rng: np.random.Generator, regions: List[tuple], side: str) -> Dict[int, np.ndarray]:
        features = {}
        for layer in sorted(self.layer_shapes):
            query_size, support_size, channels = self.layer_shapes[layer]
            size = query_size if side == "query" else support_size
            layer_regions = [(mask, class_signature(class_id, layer, channels)) for mask, class_id in regions]
            features[layer] = self._features(rng, size, channels, layer_regions)
        return features

    def _affinity(self, rng: np.random.Generator, regions: List[np.ndarray]) -> List[np.ndarray]:
        """Rasgos de apariencia de la consulta por etapa del decodificador"""
        config = self.config
        stages = []
        for stage in range(config.decoder_stages):
            size = config.stage_resolution(stage)
            channels = config.affinity_channels[stage]
            vectors = [_unit(rng, channels) for _ in range(len(regions) + 1)]
            background = np.ones((config.image_size, config.image_size), dtype=np.uint8)
            for mask in regions:
                background &= 1 - mask
            layer_regions = [(background, vectors[0])] + list(zip(regions, vectors[1:]))
            stages.append(self._features(rng, size, channels, layer_regions))
        return stages

    # Episodios de segmentación

    def generate(self, seed: int, split: str = "train", fold: Optional[int] = None,
                 shots: Optional[int] = None) -> Episode:
        """
        Genera el episodio de una semilla
        Args:
            seed: Semilla del episodio
            split: train, val o test
            fold: Fold (por defecto config.test_fold)
            shots: Número de soportes (por defecto config.shots)
        Returns:
            Episode determinista para (seed, split, fold, shots)
        """
        config = self.config
        fold = config.test_fold if fold is None else fold
        shots = config.shots if shots is None else shots
        rng = np.random.default_rng(seed)
        pool = fold_classes(config, fold) if split == "test" else train_classes(config, fold)
        class_id = int(pool[rng.integers(len(pool))])
        distractors = [c for c in range(config.num_classes) if c != class_id]
        distractor_id = int(distractors[rng.integers(len(distractors))])

        size = config.image_size
        query_mask = random_object_mask(rng, size)
        distractor_mask = random_object_mask(rng, size) & (1 - query_mask)
        query_features = self._pyramid_features(
            rng, [(query_mask, class_id), (distractor_mask, distractor_id)], "query"
        )
        affinity = self._affinity(rng, [query_mask, distractor_mask])

        support = []
        for _ in range(shots):
            mask = random_object_mask(rng, size)
            support.append(SupportShot(self._pyramid_features(rng, [(mask, class_id)], "support"), mask))
        return Episode(query_features, affinity, support, query_mask, class_id, fold, seed, split)

    def episodes(self, split: str, count: int, fold: Optional[int] = None,
                 shots: Optional[int] = None) -> List[Episode]:
        fold = self.config.test_fold if fold is None else fold
        return [self.generate(episode_seed(self.config, split, fold, i), split, fold, shots) for i in range(count)]

    # Pares de correspondencia

    def generate_flow(self, seed: int) -> Episode:
        """
        Par sintético de correspondencia: el soporte es la consulta trasladada
        por un desplazamiento entero conocido (en celdas de la rejilla fina).
        """
        config = self.config
        rng = np.random.default_rng(seed)
        target = config.finest.query_target
        base = max(level.query_size for level in config.levels)
        factor = base // target
        field = rng.standard_normal((base, base, FLOW_CHANNELS))
        limit = max(1, target // 4)
        displacement = rng.integers(-limit, limit + 1, size=2)
        shifted = np.roll(field, tuple(int(d) * factor for d in displacement), axis=(0, 1))

        def project(source: np.ndarray, size: int, channels: int, key: int) -> np.ndarray:
            block = base // size
            pooled = source.reshape(size, block, size, block, FLOW_CHANNELS).mean(axis=(1, 3))
            weight = np.random.default_rng([SIGNATURE_SEED, 1000 + key]).standard_normal((FLOW_CHANNELS, channels))
            noise = config.noise / np.sqrt(channels) * rng.standard_normal((size, size, channels))
            return pooled @ weight / np.sqrt(FLOW_CHANNELS) + noise

        query_features, support_features = {}, {}
        for layer in sorted(self.layer_shapes):
            query_size, support_size, channels = self.layer_shapes[layer]
            query_features[layer] = project(field, query_size, channels, layer)
            support_features[layer] = project(shifted, support_size, channels, layer)
        affinity = [project(field, target, config.affinity_channels[0], 500)]

        low = np.maximum(0, -displacement)
        high = np.minimum(target, target - displacement)
        keypoints = np.stack([rng.integers(low[a], high[a], size=FLOW_KEYPOINTS) for a in range(2)], axis=1)
        full = np.ones((config.image_size, config.image_size), dtype=np.uint8)
        return Episode(query_features, affinity, [SupportShot(support_features, full)], full.copy(),
                       class_id=0, fold_id=0, seed=seed, split="flow",
                       query_keypoints=keypoints, support_keypoints=keypoints + displacement,
                       meta={"displacement": displacement.tolist()})

    def flow_episodes(self, split: str, count: int) -> List[Episode]:
        code_fold = SPLIT_CODES[split]
        return [self.generate_flow(episode_seed(self.config, "flow", code_fold, i)) for i in range(count)]


def generate_synthetic_episode(seed: int, config: RunConfig, split: str = "train",
                               fold: Optional[int] = None) -> Episode:
    """Episodio determinista para una semilla (segmentación o correspondencia según config.task)"""
    generator = SyntheticEpisodeGenerator(config)
    if config.task == "flow":
        return generator.generate_flow(seed)
    return generator.generate(seed, split, fold)
