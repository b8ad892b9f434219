"""
💾 AgentsBench - Directorio de Ejecución

Estructura de un run:

    runs/<nombre>/
    ├── manifest.json      # config, semilla, modelo, hashes de plantillas y guion
    ├── cases/<id>.json    # transcripción o predicción baseline + pena de referencia
    ├── metrics.jsonl      # un MetricResult por caso
    ├── summary.json       # RunSummary
    ├── quality.json       # (opcional) kappa + tasas de calidad
    ├── scores.json        # (opcional) salida de `score`
    ├── memory.jsonl       # (opcional) precedentes si memory_enabled
    └── run.log.jsonl      # log estructurado

JSON siempre en UTF-8 con ensure_ascii=False e indent=2.
"""

import json
import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Set, Union

from src.bench_engine import STATUS_COMPLETED, PrecedentMemory
from src.evaluation import MetricResult, RunSummary
from src.exceptions import RunArtifactError
from src.validators import safe_path, validate_directory

logger = logging.getLogger(__name__)

# claves del manifest que deben coincidir para reanudar un run
RESUME_KEYS = (
    "method", "model", "seed", "template_hashes", "script_hash", "agent_pool_hash", "engine", "dataset", "prompts",
)


def _dump(data: Any) -> str:
    return json.dumps(data, ensure_ascii=False, indent=2)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


class RunDirectory:
    """
    📁 Artefactos de una ejecución del benchmark

    Cada worker escribe su propio cases/<id>.json; manifest, métricas y
    resumen los escribe solo el coordinador.
    """

    MANIFEST = "manifest.json"
    CASES_DIR = "cases"
    METRICS = "metrics.jsonl"
    SUMMARY = "summary.json"
    QUALITY = "quality.json"
    SCORES = "scores.json"
    MEMORY = "memory.jsonl"

    def __init__(self, path: Union[str, Path], create: bool = False):
        self.path = Path(path)
        if create:
            validate_directory(self.path, create_if_missing=True)
            (self.path / self.CASES_DIR).mkdir(exist_ok=True)
        elif not self.path.is_dir():
            raise RunArtifactError(f"❌ Directorio de ejecución no encontrado: {self.path}")

    @property
    def cases_dir(self) -> Path:
        return self.path / self.CASES_DIR

    # ------------------------------------------------------------------ manifest

    def build_manifest(
        self,
        run_config_dict: Dict[str, Any],
        template_hashes: Dict[str, str],
        script_hash: Optional[str] = None,
        pool_hash: Optional[str] = None,
    ) -> Dict[str, Any]:
        engine = run_config_dict.get("engine", {})
        return {
            "method": run_config_dict.get("method"),
            "model": engine.get("model"),
            "seed": engine.get("seed"),
            "template_hashes": template_hashes,
            "script_hash": script_hash,
            "agent_pool_hash": pool_hash,
            "engine": engine,
            "dataset": run_config_dict.get("dataset", {}),
            "prompts": run_config_dict.get("prompts", {}),
            "config": run_config_dict,
            "created_at": datetime.now().isoformat(timespec="seconds"),
        }

    def write_manifest(self, manifest: Dict[str, Any]) -> None:
        """
        Escribir el manifest; si ya existe, comprobar que el run es reanudable

        Raises:
            RunArtifactError: El directorio pertenece a un run con otra config
        """
        path = self.path / self.MANIFEST
        if path.exists():
            previous = self.read_manifest()
            diffs = [k for k in RESUME_KEYS if previous.get(k) != manifest.get(k)]
            if diffs:
                raise RunArtifactError(
                    f"❌ {self.path} contiene un run con otra configuración ({', '.join(diffs)})\n"
                    f"   Usa otro --output-dir para una ejecución nueva"
                )
            logger.info(f"🔁 Reanudando run existente en {self.path}")
            return
        _atomic_write(path, _dump(manifest))

    def read_manifest(self) -> Dict[str, Any]:
        return self._read_json(self.MANIFEST)

    # ------------------------------------------------------------------ casos

    def case_path(self, case_id: str) -> Path:
        return safe_path(self.cases_dir, f"{case_id}.json")

    def save_case(self, record: Dict[str, Any]) -> Path:
        """Guardar el registro de un caso (debe llevar 'case_id')"""
        path = self.case_path(record["case_id"])
        _atomic_write(path, _dump(record))
        return path

    def load_case(self, case_id: str) -> Dict[str, Any]:
        path = self.case_path(case_id)
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        except FileNotFoundError as e:
            raise RunArtifactError(f"❌ Caso {case_id} no encontrado en {self.cases_dir}") from e
        except json.JSONDecodeError as e:
            raise RunArtifactError(f"❌ Archivo de caso corrupto: {path.name}") from e

    def iter_case_records(self) -> Iterator[Dict[str, Any]]:
        """Registros de caso en orden de nombre de archivo"""
        if not self.cases_dir.is_dir():
            raise RunArtifactError(f"❌ Falta el directorio {self.cases_dir}")
        for path in sorted(self.cases_dir.glob("*.json")):
            try:
                with open(path, "r", encoding="utf-8") as f:
                    yield json.load(f)
            except json.JSONDecodeError as e:
                raise RunArtifactError(f"❌ Archivo de caso corrupto: {path.name}") from e

    def completed_case_ids(self) -> Set[str]:
        """Ids ya terminados (los fallidos se reintentan al reanudar)"""
        if not self.cases_dir.is_dir():
            return set()
        return {
            record["case_id"]
            for record in self.iter_case_records()
            if record.get("status") == STATUS_COMPLETED
        }

    # ------------------------------------------------------------------ métricas

    def write_metrics(self, results: Sequence[MetricResult], filename: Optional[str] = None) -> Path:
        path = self.path / (filename or self.METRICS)
        lines = [json.dumps(r.to_dict(), ensure_ascii=False) for r in results]
        _atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))
        return path

    def read_metrics(self) -> List[MetricResult]:
        path = self.path / self.METRICS
        if not path.exists():
            raise RunArtifactError(f"❌ Falta {self.METRICS} en {self.path}")
        results = []
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    results.append(MetricResult.from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError, ValueError) as e:
                    raise RunArtifactError(f"❌ {self.METRICS} línea {line_no} corrupta: {e}") from e
        return results

    def write_summary(self, summary: RunSummary) -> None:
        _atomic_write(self.path / self.SUMMARY, _dump(summary.to_dict()))

    def read_summary(self) -> RunSummary:
        data = self._read_json(self.SUMMARY)
        try:
            return RunSummary.from_dict(data)
        except TypeError as e:
            raise RunArtifactError(f"❌ {self.SUMMARY} incompleto en {self.path}: {e}") from e

    def write_quality(self, report: Dict[str, Any]) -> None:
        _atomic_write(self.path / self.QUALITY, _dump(report))

    def read_quality(self) -> Optional[Dict[str, Any]]:
        if not (self.path / self.QUALITY).exists():
            return None
        return self._read_json(self.QUALITY)

    def write_scores(self, scores: Dict[str, Any]) -> Path:
        path = self.path / self.SCORES
        _atomic_write(path, _dump(scores))
        return path

    # ------------------------------------------------------------------ memoria

    def load_memory(self) -> PrecedentMemory:
        path = self.path / self.MEMORY
        if not path.exists():
            return PrecedentMemory()
        with open(path, "r", encoding="utf-8") as f:
            records = [json.loads(line) for line in f if line.strip()]
        return PrecedentMemory.from_records(records)

    def save_memory(self, memory: PrecedentMemory) -> None:
        lines = [json.dumps(r, ensure_ascii=False) for r in memory.to_records()]
        _atomic_write(self.path / self.MEMORY, "\n".join(lines) + ("\n" if lines else ""))

    # ------------------------------------------------------------------ util

    def _read_json(self, name: str) -> Dict[str, Any]:
        path = self.path / name
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        except FileNotFoundError as e:
            raise RunArtifactError(f"❌ Falta {name} en {self.path}") from e
        except json.JSONDecodeError as e:
            raise RunArtifactError(f"❌ {name} corrupto en {self.path}: {e}") from e
