"""
📊 AgentsBench - Reportes Comparativos

Tabla modelo × método con Performance (%) y, cuando hay anotaciones
humanas, Legality / Logicality / Morality (%).

Formatos:
- table-text: tabla alineada para consola
- delimited: CSV (legible con cualquier lector CSV estándar)
"""

import logging
from typing import Dict, Final, List, Sequence

import pandas as pd

from src.config import METHODS
from src.evaluation import RunSummary
from src.exceptions import MetricError

logger = logging.getLogger(__name__)

REPORT_FORMATS: Final[tuple] = ("table-text", "delimited")

_QUALITY_COLUMNS: Final[Dict[str, str]] = {
    "legality_pct": "Legality (%)",
    "logicality_pct": "Logicality (%)",
    "morality_pct": "Morality (%)",
}


def _method_rank(method: str) -> int:
    return METHODS.index(method) if method in METHODS else len(METHODS)


def summaries_to_frame(summaries: Sequence[RunSummary]) -> pd.DataFrame:
    """
    DataFrame ordenado (modelo, método) con las columnas del reporte

    Las columnas de calidad sin ningún valor se omiten.
    """
    ordered = sorted(summaries, key=lambda s: (s.model, _method_rank(s.method), s.method))

    rows: List[Dict[str, object]] = []
    for summary in ordered:
        row: Dict[str, object] = {
            "Model": summary.model,
            "Method": summary.method,
            "Performance (%)": summary.mean_performance_pct,
        }
        for field_name, column in _QUALITY_COLUMNS.items():
            row[column] = getattr(summary, field_name)
        row["Cases"] = summary.case_count
        row["Unparsed"] = summary.unparsed_count
        row["Failed"] = summary.failed_count
        rows.append(row)

    df = pd.DataFrame(rows)
    empty_quality = [c for c in _QUALITY_COLUMNS.values() if df[c].isna().all()]
    return df.drop(columns=empty_quality)


def render_report(summaries: Sequence[RunSummary], format: str = "table-text") -> str:
    """
    Renderizar la tabla comparativa

    Args:
        summaries: Un RunSummary por ejecución
        format: 'table-text' o 'delimited'

    Returns:
        Texto del reporte (cabecera + una fila por modelo × método)

    Raises:
        MetricError: Lista vacía o formato desconocido
    """
    if not summaries:
        raise MetricError("❌ No hay ejecuciones que reportar")
    if format not in REPORT_FORMATS:
        raise MetricError(f"❌ Formato desconocido: {format} (válidos: {', '.join(REPORT_FORMATS)})")

    df = summaries_to_frame(summaries)

    if format == "delimited":
        return df.to_csv(index=False, float_format="%.4f", lineterminator="\n")

    return df.to_string(index=False, float_format=lambda v: f"{v:.2f}", na_rep="-") + "\n"
