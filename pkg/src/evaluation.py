"""
📏 AgentsBench - Evaluación

- nLog-distance entre pena predicha y de referencia, y su complemento
  (performance = 1 - distancia)
- Agregación de resultados por ejecución (RunSummary)
- Acuerdo entre evaluadores humanos (Cohen's kappa por pares) y tasas de
  calidad por voto mayoritario (legalidad, lógica, moralidad)
"""

import itertools
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.exceptions import AnnotationError, MetricError

logger = logging.getLogger(__name__)

CRITERIA = ("legality", "logicality", "morality")
ANNOTATION_COLUMNS = ("case_id", "rater_id") + CRITERIA


# ============================================================================
# MÉTRICA
# ============================================================================

@dataclass(frozen=True)
class MetricResult:
    """Distancia y performance de un caso"""

    case_id: str
    predicted_months: Optional[int]
    gold_months: int
    distance: float
    performance: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricResult":
        predicted = data.get("predicted_months")
        return cls(
            case_id=str(data["case_id"]),
            predicted_months=None if predicted is None else int(predicted),
            gold_months=int(data["gold_months"]),
            distance=float(data["distance"]),
            performance=float(data["performance"]),
        )


def nlog_distance(
    predicted: int, gold: int, max_diff: int, log_base: Optional[float] = None
) -> float:
    """
    Distancia logarítmica normalizada

        log(min(|pred - gold|, max_diff) + 1) / log(max_diff + 1)

    Es un cociente de logaritmos de la misma base, así que el valor no
    depende de ``log_base`` (None = logaritmo natural).

    Raises:
        MetricError: max_diff < 1 o penas negativas

    Example:
        >>> round(nlog_distance(54, 58, 300), 5)
        0.282
    """
    if max_diff < 1:
        raise MetricError(f"❌ max_diff debe ser ≥ 1: {max_diff}")
    if predicted < 0 or gold < 0:
        raise MetricError(f"❌ Penas negativas: predicted={predicted}, gold={gold}")

    diff = min(abs(predicted - gold), max_diff)
    if log_base is None:
        value = math.log(diff + 1) / math.log(max_diff + 1)
    else:
        value = math.log(diff + 1, log_base) / math.log(max_diff + 1, log_base)
    return min(1.0, max(0.0, value))


def performance_score(predicted: Optional[int], gold: int, max_diff: int) -> float:
    """1 - nlog_distance; 0 cuando no hay predicción"""
    if max_diff < 1:
        raise MetricError(f"❌ max_diff debe ser ≥ 1: {max_diff}")
    if predicted is None:
        return 0.0
    return 1.0 - nlog_distance(predicted, gold, max_diff)


def score_case(case_id: str, predicted: Optional[int], gold: int, max_diff: int) -> MetricResult:
    performance = performance_score(predicted, gold, max_diff)
    distance = 1.0 if predicted is None else nlog_distance(predicted, gold, max_diff)
    return MetricResult(
        case_id=case_id,
        predicted_months=predicted,
        gold_months=gold,
        distance=distance,
        performance=performance,
    )


def aggregate_performance(results: Sequence[MetricResult]) -> float:
    """
    Media de performance × 100

    Suma exacta (math.fsum): el resultado no depende del orden de los casos.

    Raises:
        MetricError: Lista vacía
    """
    if not results:
        raise MetricError("❌ No hay resultados que agregar")
    return math.fsum(r.performance for r in results) / len(results) * 100.0


# ============================================================================
# RESUMEN DE EJECUCIÓN
# ============================================================================

@dataclass(frozen=True)
class RunSummary:
    """Una fila de la tabla comparativa (modelo × método)"""

    method: str
    model: str
    mean_performance_pct: float
    case_count: int
    unparsed_count: int
    failed_count: int = 0
    legality_pct: Optional[float] = None
    logicality_pct: Optional[float] = None
    morality_pct: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunSummary":
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in data.items() if k in known})


def summarize_run(
    results: Sequence[MetricResult],
    method: str,
    model: str,
    quality: Optional[Dict[str, float]] = None,
    failed_count: int = 0,
) -> RunSummary:
    """Construir el RunSummary de una ejecución a partir de sus métricas"""
    quality = quality or {}
    return RunSummary(
        method=method,
        model=model,
        mean_performance_pct=aggregate_performance(results),
        case_count=len(results),
        unparsed_count=sum(1 for r in results if r.predicted_months is None),
        failed_count=failed_count,
        legality_pct=quality.get("legality"),
        logicality_pct=quality.get("logicality"),
        morality_pct=quality.get("morality"),
    )


# ============================================================================
# ACUERDO ENTRE EVALUADORES
# ============================================================================

@dataclass(frozen=True)
class QualityAnnotation:
    """Valoración binaria de un evaluador sobre un caso"""

    case_id: str
    rater_id: str
    legality: bool
    logicality: bool
    morality: bool


def cohens_kappa(ratings_a: Sequence[bool], ratings_b: Sequence[bool]) -> float:
    """
    Cohen's kappa para dos evaluadores con etiquetas binarias

    κ = (p_o - p_e) / (1 - p_e). Si p_e = 1 (ambos constantes e iguales),
    κ = 1 cuando p_o = 1 y 0 en otro caso.

    Raises:
        MetricError: Longitudes distintas o listas vacías
    """
    if len(ratings_a) != len(ratings_b):
        raise MetricError(f"❌ Longitudes distintas: {len(ratings_a)} vs {len(ratings_b)}")
    if len(ratings_a) == 0:
        raise MetricError("❌ Listas de valoraciones vacías")

    a = np.asarray(ratings_a, dtype=bool)
    b = np.asarray(ratings_b, dtype=bool)
    n = a.size

    both_true = int(np.sum(a & b))
    both_false = int(np.sum(~a & ~b))
    a_true = int(np.sum(a))
    b_true = int(np.sum(b))

    p_o = (both_true + both_false) / n
    p_e = (a_true * b_true + (n - a_true) * (n - b_true)) / (n * n)

    if math.isclose(p_e, 1.0, rel_tol=0.0, abs_tol=1e-12):
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def _to_bool(value: Any, column: str) -> bool:
    if isinstance(value, str):
        value = value.strip().lower()
        if value in ("1", "true"):
            return True
        if value in ("0", "false"):
            return False
    elif value in (0, 1):
        return bool(value)
    raise AnnotationError(f"❌ Valor no binario en '{column}': {value!r}")


def load_annotations(path: Union[str, Path]) -> List[QualityAnnotation]:
    """
    Leer anotaciones CSV: case_id, rater_id, legality, logicality, morality (0/1)

    Raises:
        AnnotationError: Columnas faltantes, valores no binarios o
            (caso, evaluador) duplicado
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"❌ Archivo de anotaciones no encontrado: {path}")

    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in ANNOTATION_COLUMNS if c not in df.columns]
    if missing:
        raise AnnotationError(f"❌ Columnas faltantes en {path.name}: {missing}")

    if df.duplicated(subset=["case_id", "rater_id"]).any():
        raise AnnotationError(f"❌ Anotaciones duplicadas (case_id, rater_id) en {path.name}")

    annotations = [
        QualityAnnotation(
            case_id=row["case_id"].strip(),
            rater_id=row["rater_id"].strip(),
            **{c: _to_bool(row[c], c) for c in CRITERIA},
        )
        for _, row in df.iterrows()
    ]
    logger.info(f"📋 {len(annotations)} anotaciones cargadas desde {path.name}")
    return annotations


def _annotation_matrix(annotations: Iterable[QualityAnnotation], criterion: str) -> pd.DataFrame:
    if criterion not in CRITERIA:
        raise AnnotationError(f"❌ Criterio desconocido: {criterion}")

    df = pd.DataFrame(
        [{"case_id": a.case_id, "rater_id": a.rater_id, "value": bool(getattr(a, criterion))} for a in annotations]
    )
    if df.empty:
        raise AnnotationError("❌ No hay anotaciones")
    if df.duplicated(subset=["case_id", "rater_id"]).any():
        raise AnnotationError("❌ Más de una anotación por (caso, evaluador)")

    matrix = df.pivot(index="case_id", columns="rater_id", values="value").sort_index().sort_index(axis=1)
    if matrix.isna().any().any():
        incomplete = matrix.index[matrix.isna().any(axis=1)].tolist()
        raise AnnotationError(f"❌ Matriz de anotaciones incompleta (casos: {incomplete[:5]})")
    return matrix.astype(bool)


def pairwise_mean_kappa(annotations: Sequence[QualityAnnotation], criterion: str) -> float:
    """
    Media de Cohen's kappa sobre todos los pares de evaluadores

    Raises:
        AnnotationError: Matriz incompleta o menos de 2 evaluadores
    """
    matrix = _annotation_matrix(annotations, criterion)
    raters = list(matrix.columns)
    if len(raters) < 2:
        raise AnnotationError("❌ Se necesitan al menos 2 evaluadores")

    kappas = [
        cohens_kappa(matrix[a].tolist(), matrix[b].tolist())
        for a, b in itertools.combinations(raters, 2)
    ]
    return math.fsum(kappas) / len(kappas)


def quality_rates(annotations: Sequence[QualityAnnotation]) -> Dict[str, float]:
    """
    Porcentaje de casos valorados True por mayoría estricta, por criterio

    Raises:
        AnnotationError: Matriz incompleta
    """
    rates: Dict[str, float] = {}
    for criterion in CRITERIA:
        matrix = _annotation_matrix(annotations, criterion)
        votes = matrix.sum(axis=1)
        majority = votes * 2 > matrix.shape[1]
        rates[criterion] = math.fsum(majority.astype(float)) / len(majority) * 100.0
    return rates


def quality_report(annotations: Sequence[QualityAnnotation]) -> Dict[str, Any]:
    """κ por pares y tasas de calidad (contenido de quality.json)"""
    raters = sorted({a.rater_id for a in annotations})
    cases = sorted({a.case_id for a in annotations})
    return {
        "raters": raters,
        "case_count": len(cases),
        "kappa": {c: pairwise_mean_kappa(annotations, c) for c in CRITERIA},
        "rates": quality_rates(annotations),
    }
