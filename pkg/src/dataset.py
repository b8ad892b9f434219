"""
📂 AgentsBench - Carga y Validación de Casos

Lee casos penales desde archivos JSONL (un registro por línea con los
campos id, fact, charge, article y la pena de referencia), normaliza la
pena a meses y trunca los hechos por la derecha.

También convierte registros estilo LawBench (tareas 3-5: hechos con
el delito y el artículo añadidos al final, respuesta = pena) al esquema
propio del benchmark.
"""

import json
import logging
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple, Union

from src.config import DatasetConfig
from src.exceptions import DatasetRecordError, GoldTermError
from src.term_parser import extract_prison_term_months
from src.validators import validate_jsonl_path

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("id", "fact", "charge", "article")
GOLD_FIELDS = ("gold_term_months", "gold", "answer")


# ============================================================================
# TIPOS
# ============================================================================

@dataclass(frozen=True)
class Case:
    """Un caso penal: hechos X, delito c, artículo l y pena de referencia"""

    id: str
    fact: str
    charge: str
    article: str
    gold_term_months: int

    def to_record(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class DatasetReport:
    """Resultado de validate_dataset: casos válidos + errores por línea"""

    valid_count: int = 0
    errors: List[DatasetRecordError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


# ============================================================================
# NORMALIZACIÓN
# ============================================================================

def normalize_gold_term(raw: Union[int, str]) -> int:
    """
    Convertir la pena de referencia a meses

    Args:
        raw: Entero (meses) o texto con una expresión de pena

    Returns:
        Meses (≥ 0)

    Raises:
        GoldTermError: Si no hay ninguna pena interpretable

    Example:
        >>> normalize_gold_term(58)
        58
        >>> normalize_gold_term("1年2个月")
        14
    """
    if isinstance(raw, bool):
        raise GoldTermError(f"❌ Pena de referencia inválida: {raw!r}")

    if isinstance(raw, float):
        if not raw.is_integer():
            raise GoldTermError(f"❌ Pena de referencia no entera: {raw}")
        raw = int(raw)

    if isinstance(raw, int):
        if raw < 0:
            raise GoldTermError(f"❌ Pena de referencia negativa: {raw}")
        return raw

    if isinstance(raw, str):
        text = raw.strip()
        if text.isdigit() and len(text) <= 6:
            return int(text)
        months = extract_prison_term_months(text)
        if months is None:
            raise GoldTermError(f"❌ No se encontró término de prisión en: {raw!r}")
        return months

    raise GoldTermError(f"❌ Tipo de pena no soportado: {type(raw).__name__}")


def truncate_fact(fact: str, max_chars: int) -> str:
    """
    Truncado por la derecha: conserva los primeros max_chars caracteres

    Example:
        >>> truncate_fact("abcdefg", 5)
        'abcde'
    """
    if len(fact) <= max_chars:
        return fact
    return fact[:max_chars]


# ============================================================================
# CARGA
# ============================================================================

def _record_to_case(record: Any, config: DatasetConfig, line_no: int) -> Case:
    if not isinstance(record, dict):
        raise DatasetRecordError("el registro debe ser un objeto JSON", line_no)

    for name in REQUIRED_FIELDS:
        value = record.get(name)
        if value is None or (isinstance(value, str) and not value.strip()):
            raise DatasetRecordError(f"campo '{name}' faltante o vacío", line_no)

    gold_key = next((key for key in GOLD_FIELDS if key in record), None)
    if gold_key is None:
        raise DatasetRecordError(
            f"pena de referencia faltante (campos aceptados: {', '.join(GOLD_FIELDS)})", line_no
        )

    try:
        gold = normalize_gold_term(record[gold_key])
    except GoldTermError as e:
        raise DatasetRecordError(str(e), line_no) from e

    if gold > config.max_term_months:
        raise DatasetRecordError(
            f"pena {gold} meses supera el máximo configurado ({config.max_term_months})", line_no
        )

    fact = truncate_fact(str(record["fact"]), config.max_fact_chars)
    if not fact.strip():
        raise DatasetRecordError("hechos vacíos tras el truncado", line_no)

    return Case(
        id=str(record["id"]),
        fact=fact,
        charge=str(record["charge"]).strip(),
        article=str(record["article"]).strip(),
        gold_term_months=gold,
    )


def _iter_records(
    path: Path, config: DatasetConfig
) -> Iterator[Tuple[int, Union[Case, DatasetRecordError]]]:
    seen_ids = set()
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                yield line_no, DatasetRecordError(f"JSON mal formado ({e.msg})", line_no)
                continue

            try:
                case = _record_to_case(record, config, line_no)
            except DatasetRecordError as e:
                yield line_no, e
                continue

            if case.id in seen_ids:
                yield line_no, DatasetRecordError(f"id duplicado '{case.id}'", line_no)
                continue
            seen_ids.add(case.id)
            yield line_no, case


def load_cases(path: Union[str, Path], config: Optional[DatasetConfig] = None) -> List[Case]:
    """
    Cargar casos desde un archivo JSONL, en orden de archivo

    Args:
        path: Archivo JSONL (UTF-8)
        config: DatasetConfig (truncado, política de errores)

    Returns:
        Lista de Case

    Raises:
        FileNotFoundError: Si el archivo no existe
        DataValidationError: Si la extensión no es .jsonl/.json
        DatasetRecordError: Registro inválido con reject_missing_fields=True
    """
    config = config or DatasetConfig()
    path = validate_jsonl_path(path)

    cases: List[Case] = []
    skipped = 0
    for _, item in _iter_records(path, config):
        if isinstance(item, DatasetRecordError):
            if config.reject_missing_fields:
                raise item
            skipped += 1
            logger.warning(f"⚠️ Registro omitido: {item}")
            continue
        cases.append(item)

    logger.info(f"📂 {len(cases)} casos cargados desde {path.name}")
    if skipped:
        logger.warning(f"⚠️ {skipped} registros omitidos")
    return cases


def validate_dataset(path: Union[str, Path], config: Optional[DatasetConfig] = None) -> DatasetReport:
    """Diagnóstico línea a línea (no aborta en el primer error)"""
    config = config or DatasetConfig()
    report = DatasetReport()
    for _, item in _iter_records(validate_jsonl_path(path), config):
        if isinstance(item, DatasetRecordError):
            report.errors.append(item)
        else:
            report.valid_count += 1
    return report


def dump_cases(cases: Iterable[Case], path: Union[str, Path]) -> int:
    """Escribir casos en el esquema JSONL del benchmark"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for case in cases:
            f.write(json.dumps(case.to_record(), ensure_ascii=False) + "\n")
            count += 1
    return count


# ============================================================================
# IMPORTACIÓN LAWBENCH
# ============================================================================

_CHARGE_MARKER = re.compile(r"(?:罪名|Crime|Charges?)\s*[:：]\s*(?P<value>[^\n]+)", re.IGNORECASE)
_ARTICLE_MARKER = re.compile(
    r"(?:相关法条|法律条文|法条|Legal\s+Articles?|Articles?)\s*[:：]\s*(?P<value>.+)",
    re.IGNORECASE | re.DOTALL,
)


def _split_lawbench_question(question: str) -> Tuple[Optional[str], Optional[str]]:
    charge_match = _CHARGE_MARKER.search(question)
    charge = charge_match.group("value").strip().rstrip("。.") if charge_match else None

    article = None
    search_from = charge_match.end() if charge_match else 0
    article_match = _ARTICLE_MARKER.search(question, search_from)
    if article_match:
        article = article_match.group("value").strip()
    return charge, article


def import_lawbench_records(
    src: Union[str, Path], dst: Union[str, Path], id_prefix: str = "lawbench"
) -> int:
    """
    Convertir registros LawBench al esquema del benchmark

    El texto de ``question`` se conserva completo como hechos (termina con
    el delito y el artículo); delito y artículo se copian además a sus
    propios campos. ``answer`` se normaliza a meses.

    Args:
        src: JSONL (o JSON con lista) de LawBench
        dst: JSONL de salida
        id_prefix: Prefijo para ids cuando el registro no trae uno

    Returns:
        Número de casos escritos

    Raises:
        DatasetRecordError: Registro sin delito/artículo reconocible o sin pena
    """
    src = validate_jsonl_path(src)
    text = src.read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        records = list(enumerate(json.loads(stripped), start=1))
    else:
        records = []
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                records.append((line_no, json.loads(line)))
            except json.JSONDecodeError as e:
                raise DatasetRecordError(f"JSON mal formado ({e.msg})", line_no) from e

    cases: List[Case] = []
    for index, (line_no, record) in enumerate(records):
        question = str(record.get("question") or record.get("fact") or "").strip()
        if not question:
            raise DatasetRecordError("registro sin 'question'", line_no)

        charge = record.get("charge")
        article = record.get("article")
        if not charge or not article:
            parsed_charge, parsed_article = _split_lawbench_question(question)
            charge = charge or parsed_charge
            article = article or parsed_article
        if not charge or not article:
            raise DatasetRecordError("no se encontró delito o artículo en 'question'", line_no)

        try:
            gold = normalize_gold_term(record.get("answer", record.get("gold_term_months")))
        except GoldTermError as e:
            raise DatasetRecordError(str(e), line_no) from e

        case_id = str(record.get("id") or f"{id_prefix}-{index:04d}")
        cases.append(Case(id=case_id, fact=question, charge=str(charge), article=str(article), gold_term_months=gold))

    count = dump_cases(cases, dst)
    logger.info(f"✅ {count} registros LawBench importados → {dst}")
    return count
