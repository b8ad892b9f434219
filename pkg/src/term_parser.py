"""
🔍 AgentsBench - Parser de Penas y Salidas de Agentes

Extrae penas de prisión en meses desde texto libre (numerales chinos o
arábigos, unidades 年/个月/月 y sus equivalentes en inglés) y lee las
salidas estructuradas de los agentes:

- Opinión de condena: marcador de pena + marcador de razonamiento
- Veredicto de consenso: marcador de conclusión Yes/No + resumen

Los marcadores se aceptan en chino e inglés. Las constantes de contrato
(TERM_CONTRACT, REASON_CONTRACT, CONSENSUS_CONTRACT) son las mismas que
insertan las plantillas de prompts.

Todas las funciones son puras.
"""

import logging
import re
import unicodedata
from dataclasses import dataclass
from typing import Final, List, Optional

from src.exceptions import ConsensusParseError, OpinionParseError, TermParseError

logger = logging.getLogger(__name__)


# ============================================================================
# CONTRATOS DE FORMATO (compartidos con src.prompts)
# ============================================================================

TERM_CONTRACT: Final[str] = "刑期：X个月"
REASON_CONTRACT: Final[str] = "理由："
CONSENSUS_CONTRACT: Final[str] = "Conclusion: Yes/No"

OPINION_CONTRACT: Final[str] = (
    f"{TERM_CONTRACT}\n{REASON_CONTRACT}……\n"
    "(English output is also accepted: \"Sentence Term: X months\" / \"Reason: ...\")"
)


# ============================================================================
# TIPOS
# ============================================================================

@dataclass(frozen=True)
class ParsedOpinion:
    """Pena (meses) + razonamiento extraídos de una opinión"""

    term_months: int
    rationale: str


@dataclass(frozen=True)
class ConsensusParse:
    """Veredicto binario del juez presidente + resumen de desacuerdos"""

    consensus: bool
    summary: str
    fallback: bool = False  # True = veredicto no interpretable, se asumió "No"


# ============================================================================
# NUMERALES CHINOS
# ============================================================================

_CN_DIGITS: Final[dict] = {
    "零": 0, "〇": 0,
    "一": 1, "二": 2, "两": 2, "三": 3, "四": 4,
    "五": 5, "六": 6, "七": 7, "八": 8, "九": 9,
}
_CN_UNITS: Final[dict] = {"十": 10, "百": 100, "千": 1000}

_CN_CHARS = "".join(_CN_DIGITS) + "".join(_CN_UNITS)

# cifras máximas de un número de pena
_MAX_DIGITS: Final[int] = 6


def _digits_to_int(digits: str) -> int:
    if len(digits) > _MAX_DIGITS:
        raise TermParseError(f"❌ Número demasiado largo ({len(digits)} cifras)")
    return int(digits)


def chinese_numeral_to_int(text: str) -> int:
    """
    Convertir un numeral chino (0-9999) a entero

    Sin caracteres de unidad se leen los dígitos en secuencia
    ("二〇一二" → 2012). Con unidades se usa la lectura multiplicativa
    estándar; un 十 sin dígito previo vale 10.

    Args:
        text: Numeral sobre 零〇一二两三四五六七八九十百千

    Returns:
        Valor entero no negativo

    Raises:
        TermParseError: Caracteres fuera del alfabeto o forma inválida

    Example:
        >>> chinese_numeral_to_int("五十四")
        54
        >>> chinese_numeral_to_int("三百零六")
        306
    """
    text = (text or "").strip()
    if not text:
        raise TermParseError("❌ Numeral vacío")

    invalid = [ch for ch in text if ch not in _CN_DIGITS and ch not in _CN_UNITS]
    if invalid:
        raise TermParseError(f"❌ Caracteres no numéricos en '{text}': {''.join(invalid)}")

    if not any(ch in _CN_UNITS for ch in text):
        return _digits_to_int("".join(str(_CN_DIGITS[ch]) for ch in text))

    total = 0
    pending: Optional[int] = None
    last_unit = 10_000

    for ch in text:
        if ch in _CN_DIGITS:
            digit = _CN_DIGITS[ch]
            if digit == 0:
                pending = None
                continue
            if pending is not None:
                raise TermParseError(f"❌ Dígitos consecutivos sin unidad en '{text}'")
            pending = digit
        else:
            unit = _CN_UNITS[ch]
            if unit >= last_unit:
                raise TermParseError(f"❌ Unidades fuera de orden en '{text}'")
            total += (pending if pending is not None else 1) * unit
            pending = None
            last_unit = unit

    return total + (pending or 0)


def _to_int(token: str) -> int:
    token = token.strip()
    if token.isdigit():
        return _digits_to_int(token)
    return chinese_numeral_to_int(token)


# ============================================================================
# EXTRACCIÓN DE PENAS
# ============================================================================

_NUM = rf"(?:(?<![\d.])\d+|[{_CN_CHARS}]+)"
_DAY_AHEAD = rf"(?!\s*(?:\d+|[{_CN_CHARS}]+)\s*[日号])"
_MONTH_UNIT = rf"(?:个月|月{_DAY_AHEAD})"

_TERM_PATTERN = re.compile(
    "|".join([
        # 3年6个月 / 三年零六个月 / 一年又两个月
        rf"(?P<ym_y>{_NUM})\s*年\s*(?:零|又)?\s*(?P<ym_m>{_NUM})\s*{_MONTH_UNIT}",
        # 三年半
        rf"(?P<half_y>{_NUM})\s*年半",
        # 半年
        r"(?P<half>半年)",
        # 五年
        rf"(?P<y>{_NUM})\s*年",
        # 54个月
        rf"(?P<m>{_NUM})\s*{_MONTH_UNIT}",
        # 3 years and 6 months / 4-year
        r"(?<![\d.])(?P<en_y>\d+)\s*-?\s*years?(?![a-z])"
        r"(?:\s*,?\s*(?:and\s+)?(?P<en_ym>\d+)\s*-?\s*months?(?![a-z]))?",
        # 54 months / 54-month
        r"(?<![\d.])(?P<en_m>\d+)\s*-?\s*months?(?![a-z])",
    ]),
    re.IGNORECASE,
)

# años por encima de este valor son fechas de calendario, no penas
_MAX_YEAR_VALUE: Final[int] = 100


def _normalize_text(text: str) -> str:
    # dígitos de ancho completo → ASCII
    return unicodedata.normalize("NFKC", text)


def _years(token: str) -> Optional[int]:
    value = _to_int(token)
    return value if value < _MAX_YEAR_VALUE else None


def _match_to_months(match: "re.Match[str]") -> Optional[int]:
    groups = match.groupdict()
    try:
        if groups["ym_y"] is not None:
            years = _years(groups["ym_y"])
            return None if years is None else years * 12 + _to_int(groups["ym_m"])
        if groups["half_y"] is not None:
            years = _years(groups["half_y"])
            return None if years is None else years * 12 + 6
        if groups["half"] is not None:
            return 6
        if groups["y"] is not None:
            years = _years(groups["y"])
            return None if years is None else years * 12
        if groups["m"] is not None:
            return _to_int(groups["m"])
        if groups["en_y"] is not None:
            years = _years(groups["en_y"])
            if years is None:
                return None
            extra = _to_int(groups["en_ym"]) if groups["en_ym"] is not None else 0
            return years * 12 + extra
        if groups["en_m"] is not None:
            return _to_int(groups["en_m"])
    except TermParseError:
        return None
    return None


def find_term_expressions(text: str) -> List[int]:
    """
    Todas las expresiones de pena del texto, en orden de aparición (meses)

    Las expresiones que resultan ser fechas o numerales inválidos se omiten.
    """
    if not text:
        return []
    values: List[int] = []
    for match in _TERM_PATTERN.finditer(_normalize_text(text)):
        months = _match_to_months(match)
        if months is not None:
            values.append(months)
    return values


def extract_prison_term_months(text: str) -> Optional[int]:
    """
    Extraer la ÚLTIMA pena de prisión del texto, convertida a meses

    Args:
        text: Salida arbitraria del modelo

    Returns:
        Meses (≥ 0) o None si no hay ninguna expresión de pena

    Example:
        >>> extract_prison_term_months("判处有期徒刑三年六个月")
        42
        >>> extract_prison_term_months("本案不涉及刑期") is None
        True
    """
    values = find_term_expressions(text)
    return values[-1] if values else None


# ============================================================================
# OPINIONES DE CONDENA
# ============================================================================

_TERM_MARKER = re.compile(
    r"\**[ \t]*(?:Sentence[ \t]*Term|Sentencing[ \t]*Term|刑期)[ \t]*\**[ \t]*[:：][ \t]*\**",
    re.IGNORECASE,
)
_REASON_MARKER = re.compile(
    r"\**[ \t]*(?:Reasons?|Reasoning|理由)[ \t]*\**[ \t]*[:：][ \t]*\**",
    re.IGNORECASE,
)
_BARE_NUMBER = re.compile(rf"^\s*(\d+|[{_CN_CHARS}]+)")


def _term_at_marker(text: str, marker_end: int) -> Optional[int]:
    line = text[marker_end:].split("\n", 1)[0]
    reason = _REASON_MARKER.search(line)
    if reason:
        line = line[:reason.start()]

    months = extract_prison_term_months(line)
    if months is not None:
        return months

    bare = _BARE_NUMBER.match(_normalize_text(line))
    if bare:
        try:
            return _to_int(bare.group(1))
        except TermParseError:
            return None
    return None


def parse_opinion(text: str) -> ParsedOpinion:
    """
    Leer pena + razonamiento de la salida de un agente

    Orden de lectura de la pena:
        1. Lo escrito tras el último marcador de pena (刑期： / Sentence Term:)
        2. Si no hay marcador legible, la última expresión de pena del texto

    Raises:
        OpinionParseError: Si ningún camino recupera una pena

    Example:
        >>> parse_opinion("刑期：48个月\\n理由：初犯")
        ParsedOpinion(term_months=48, rationale='初犯')
    """
    if not text or not text.strip():
        raise OpinionParseError("❌ Opinión vacía")

    term_markers = list(_TERM_MARKER.finditer(text))
    term_months: Optional[int] = None
    anchor = 0

    if term_markers:
        last = term_markers[-1]
        anchor = last.end()
        term_months = _term_at_marker(text, last.end())

    if term_months is None:
        term_months = extract_prison_term_months(text)

    if term_months is None:
        raise OpinionParseError("❌ No se encontró pena en la opinión")

    reason_markers = list(_REASON_MARKER.finditer(text))
    rationale = ""
    if reason_markers:
        after_anchor = [m for m in reason_markers if m.start() >= anchor]
        chosen = after_anchor[0] if after_anchor else reason_markers[-1]
        rationale = text[chosen.end():].strip()
    if not rationale:
        rationale = text.strip()

    return ParsedOpinion(term_months=term_months, rationale=rationale)


# ============================================================================
# VEREDICTOS DE CONSENSO
# ============================================================================

_CONCLUSION_MARKER = re.compile(
    r"\**[ \t]*(?:Conclusion|结论)[ \t]*\**[ \t]*[:：][ \t]*\**[ \t]*"
    r"(?P<verdict>yes(?![a-z])|no(?![a-z])|是|否)[ \t]*\**",
    re.IGNORECASE,
)
_AFFIRMATIVE: Final[frozenset] = frozenset({"yes", "是"})


def parse_consensus(text: str) -> ConsensusParse:
    """
    Leer el veredicto de consenso del juez presidente

    Args:
        text: Salida bajo el contrato "Conclusion: Yes/No" + resumen

    Returns:
        ConsensusParse con el resto del texto como resumen

    Raises:
        ConsensusParseError: Marcador ausente, ambiguo (Yes y No), o
            veredicto negativo sin resumen de desacuerdos
    """
    if not text or not text.strip():
        raise ConsensusParseError("❌ Veredicto vacío")

    matches = list(_CONCLUSION_MARKER.finditer(text))
    if not matches:
        raise ConsensusParseError("❌ No se encontró el marcador de conclusión")

    verdicts = set()
    for match in matches:
        if text[match.end():].lstrip().startswith("/"):
            raise ConsensusParseError("❌ Veredicto ambiguo (plantilla Yes/No repetida)")
        verdicts.add(match.group("verdict").lower() in _AFFIRMATIVE)

    if len(verdicts) > 1:
        raise ConsensusParseError("❌ Veredicto ambiguo: Yes y No a la vez")

    consensus = verdicts.pop()
    summary = _CONCLUSION_MARKER.sub("", text).strip()

    if not consensus and not summary:
        raise ConsensusParseError("❌ Veredicto negativo sin puntos de desacuerdo")

    return ConsensusParse(consensus=consensus, summary=summary)
