"""Fixtures comunes: logs en carpeta temporal, modo float64 y configuraciones pequeñas."""

import os
import sys
import tempfile

# Antes de importar el logger: los handlers se crean al importar utils.logger
os.environ.setdefault("LOGS_DIR", tempfile.mkdtemp(prefix="hyperagg-logs-"))
os.environ.setdefault("APP_DEBUG", "false")
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from config.run_config import build_run_config
from tensor_core import default_dtype


@pytest.fixture
def float64():
    with default_dtype(np.float64):
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def desk_config(tmp_path):
    return build_run_config("desk", {"out": str(tmp_path / "run")})


@pytest.fixture
def small_config(tmp_path):
    """Desk con episodios y pasos reducidos para pruebas rápidas"""
    return build_run_config("desk", {
        "out": str(tmp_path / "run"),
        "train_episodes": 2,
        "val_episodes": 2,
        "eval_episodes": 2,
        "eval_folds": [0],
        "steps": 3,
        "eval_interval": 2,
        "checkpoint_interval": 2,
        "bench_repeats": 2,
        "save_masks": 1,
    })
