# Controlador del comando bench
# Tiempo por pasada hacia adelante y pico de bytes de tensores por agregador

import dataclasses
import time

import numpy as np
import psutil

from tensor_core import memory_tracker, no_grad
from config.run_config import RunConfig
from controllers.base_controller import BaseController
from episodes.synthetic import SyntheticEpisodeGenerator
from models.hyperagg_model import HyperAggModel
from utils.logger import app_logger
from utils.report_generator import BENCH_DISCLAIMER, ReportGenerator


class BenchController(BaseController):
    """Mide mediana y p95 del tiempo de inferencia para cada agregador"""

    command = "bench"

    def measure(self, config: RunConfig, aggregator: str) -> dict:
        cfg = dataclasses.replace(config, aggregator=aggregator)
        model = HyperAggModel(cfg)
        generator = SyntheticEpisodeGenerator(cfg)
        episode = generator.generate_flow(cfg.seed) if cfg.task == "flow" else generator.generate(cfg.seed, shots=1)
        process = psutil.Process()

        with no_grad():
            model.forward_shot(episode)
            with memory_tracker.session() as tracker:
                model.forward_shot(episode)
                peak_bytes = tracker.peak_bytes
            timings = []
            for _ in range(cfg.bench_repeats):
                started = time.perf_counter()
                model.forward_shot(episode)
                timings.append((time.perf_counter() - started) * 1000.0)

        row = {
            "aggregator": aggregator,
            "median_ms": float(np.median(timings)),
            "p95_ms": float(np.percentile(timings, 95)),
            "peak_bytes": int(peak_bytes),
            "rss_bytes": int(process.memory_info().rss),
            "repeats": cfg.bench_repeats,
        }
        app_logger.log_benchmark(aggregator, row["median_ms"], row["p95_ms"], row["peak_bytes"])
        return row

    def run(self, config: RunConfig) -> dict:
        rows = [self.measure(config, aggregator) for aggregator in config.bench_aggregators]
        context = {"preset": config.preset, "task": config.task, "seed": config.seed,
                   "repeats": config.bench_repeats, "cpu_count": psutil.cpu_count(logical=True)}
        report = ReportGenerator(config.out).create_benchmark_report(rows, context)
        lines = [BENCH_DISCLAIMER] + [
            f"{r['aggregator']}: mediana {r['median_ms']:.2f} ms  p95 {r['p95_ms']:.2f} ms  pico {r['peak_bytes']} B"
            for r in rows
        ]
        return {"rows": rows, "report": report, "lines": lines}
