# Generador de reportes en formato Markdown
# Reportes de métricas, benchmark y traza de formas para cada comando

import json
import os
from typing import Any, Dict, List

from config.app_config import AppConfig
from utils.logger import app_logger

BENCH_DISCLAIMER = "Medición local del artefacto: no comparable con el hardware de referencia."


class ReportGenerator:
    """
    Generador de reportes en formato Markdown.
    Los reportes de evaluación no llevan marcas de tiempo para que
    una ejecución con semilla fija produzca exactamente los mismos bytes.
    """

    def __init__(self, reports_dir: str = None):
        self.app_config = AppConfig()
        self.reports_dir = reports_dir or self.app_config.get_reports_dir()
        self.ensure_reports_directory()

    def ensure_reports_directory(self):
        """Asegura que la carpeta de reportes exista"""
        if not os.path.exists(self.reports_dir):
            os.makedirs(self.reports_dir)

    def _write(self, filename: str, content: str, report_type: str) -> str:
        filepath = os.path.join(self.reports_dir, filename)
        try:
            with open(filepath, 'w', encoding='utf-8') as f:
                f.write(content)
            app_logger.log_report_generation(report_type, filepath, True)
        except OSError:
            app_logger.log_report_generation(report_type, filepath, False)
            raise
        return filepath

    def create_metric_report(self, results: Dict[str, Any], filename: str = "eval_report.md") -> str:
        """
        Crea el reporte de evaluación
        Args:
            results: Diccionario con 'folds' (fold -> miou, fbiou, class_iou), 'mean_miou',
                     'mean_fbiou', 'shots', 'tau', 'aggregator' y opcionalmente 'pck'
            filename: Nombre del archivo
        Returns:
            Path del archivo de reporte creado
        """
        folds = results.get("folds", {})
        fold_ids = sorted(folds, key=int)
        header = " | ".join([f"fold{f}" for f in fold_ids] + ["mIoU", "FB-IoU"])
        values = " | ".join([f"{folds[f]['miou'] * 100:.1f}" for f in fold_ids]
                            + [f"{results.get('mean_miou', 0.0) * 100:.1f}",
                               f"{results.get('mean_fbiou', 0.0) * 100:.1f}"])
        class_rows = []
        for f in fold_ids:
            for class_id, iou in sorted(folds[f]["class_iou"].items(), key=lambda item: int(item[0])):
                class_rows.append(f"| {f} | {class_id} | {iou * 100:.1f} |")
        pck_rows = [f"| {alpha} | {value * 100:.1f} |" for alpha, value in sorted(results.get("pck", {}).items())]

        content = f"""# Reporte de Evaluación

**Tipo de Reporte:** Evaluación few-shot
**Agregador:** {results.get('aggregator', 'N/A')}
**Soportes (K):** {results.get('shots', 'N/A')}
**Umbral τ:** {results.get('tau', 'N/A')}
**Semilla:** {results.get('seed', 'N/A')}

## Resultados por Fold

| {header} |
|{'---|' * (len(fold_ids) + 2)}
| {values} |

## IoU por Clase

| fold | clase | IoU |
|---|---|---|
{chr(10).join(class_rows) if class_rows else '| - | - | - |'}
"""
        if pck_rows:
            content += f"""
## PCK

| α | PCK |
|---|---|
{chr(10).join(pck_rows)}
"""
        content += f"""
## Datos

```json
{json.dumps(results, indent=2, ensure_ascii=False, sort_keys=True)}
```

---
*Reporte generado automáticamente por {self.app_config.get_app_name()}*
"""
        return self._write(filename, content, "evaluación")

    def create_benchmark_report(self, rows: List[Dict[str, Any]], context: Dict[str, Any],
                                filename: str = "bench_report.md") -> str:
        """
        Crea el reporte de tiempo y memoria por agregador
        Args:
            rows: Una fila por agregador (median_ms, p95_ms, peak_bytes, rss_bytes)
            context: Preset, repeticiones y entorno
        Returns:
            Path del archivo de reporte creado
        """
        table = "\n".join(
            f"| {r['aggregator']} | {r['median_ms']:.2f} | {r['p95_ms']:.2f} | {r['peak_bytes']} | {r['rss_bytes']} |"
            for r in rows
        )
        content = f"""# Reporte de Benchmark

**Fecha y Hora:** {self.app_config.get_current_datetime().strftime('%Y-%m-%d %H:%M:%S')}
**Tipo de Reporte:** Tiempo y memoria por pasada hacia adelante
**Aviso:** {BENCH_DISCLAIMER}

## Mediciones

| agregador | mediana (ms) | p95 (ms) | pico tensores (bytes) | RSS proceso (bytes) |
|---|---|---|---|---|
{table}

## Contexto

```json
{json.dumps(context, indent=2, ensure_ascii=False, sort_keys=True)}
```

---
*Reporte generado automáticamente por {self.app_config.get_app_name()}*
"""
        return self._write(filename, content, "benchmark")

