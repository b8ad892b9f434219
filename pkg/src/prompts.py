"""
💬 AgentsBench - Construcción de Prompts

Todas las secuencias de mensajes que el motor envía al backend:

- Prompts de sistema por rol (juez presidente, juez, juez lego)
- Prompts baseline (standard, cot, ls)
- Etapas de deliberación: opinión independiente, intervención en ronda,
  evaluación de consenso, actualización, síntesis final y resumen
- Recordatorios de formato para los reintentos de parsing

Las plantillas son archivos Jinja2 (templates/default/*.j2). Un directorio
propio puede sobrescribir cualquiera de ellas; las que falten se toman de
las plantillas por defecto. Cada plantilla debe declarar EXACTAMENTE los
placeholders documentados para su etapa (ver STAGE_PLACEHOLDERS).

Los datos del caso llegan a las plantillas solo como fact/charge/article:
la pena de referencia no es alcanzable desde ningún placeholder.
"""

from __future__ import annotations

import hashlib
import logging
from functools import lru_cache
from pathlib import Path
from typing import TYPE_CHECKING, Dict, Final, FrozenSet, List, Optional, Sequence, Tuple

from jinja2 import ChoiceLoader, Environment, FileSystemLoader, StrictUndefined, TemplateNotFound, meta
from jinja2.exceptions import TemplateError, UndefinedError

from src.config import PATHS
from src.exceptions import PromptTemplateError, UnknownMethodError, UnknownRoleError
from src.llm_backend import ChatMessage
from src.term_parser import CONSENSUS_CONTRACT, OPINION_CONTRACT, TERM_CONTRACT

if TYPE_CHECKING:
    from src.bench_engine import (
        AgentProfile,
        DeliberationRound,
        FinalJudgment,
        OpinionSet,
        SentencingOpinion,
        Transcript,
    )
    from src.dataset import Case

logger = logging.getLogger(__name__)

BASELINE_METHODS: Final[Tuple[str, ...]] = ("standard", "cot", "ls")
DEFAULT_TRANSCRIPT_BUDGET: Final[int] = 12000

PRESIDING_STATEMENT_CONTRACT: Final[str] = (
    "先逐一总结各位成员的观点（I'll summarize each perspective），再列出需要重点讨论的问题。"
)
MEMBER_STATEMENT_CONTRACT: Final[str] = (
    "回应此前各位成员的发言，并明确说明你目前支持的刑期（X个月）。"
)
SUMMARY_CONTRACT: Final[str] = "合议庭评议总结（Summary of Collegial Panel Discussion）"

_CASE = frozenset({"fact", "charge", "article"})
_PROFILE = frozenset({"agent_id", "persona", "focus"})

STAGE_PLACEHOLDERS: Final[Dict[str, FrozenSet[str]]] = {
    "system_presiding": _PROFILE | {"consensus_contract"},
    "system_judge": _PROFILE,
    "system_lay_judge": _PROFILE,
    "baseline_standard": _CASE | {"term_contract"},
    "baseline_cot": _CASE | {"term_contract"},
    "baseline_ls": _CASE | {"term_contract"},
    "independent": _CASE | {"precedents", "opinion_contract"},
    "statement_presiding": _CASE | {"round_index", "opinions", "discussion", "statement_contract"},
    "statement_member": _CASE | {"round_index", "opinions", "discussion", "current_round", "statement_contract"},
    "consensus": frozenset({"round_index", "opinions", "statements", "consensus_contract"}),
    "update": _CASE | {"round_index", "own_term", "own_rationale", "statements", "opinion_contract"},
    "synthesis": _CASE | {"opinions", "discussion", "opinion_contract"},
    "summary": _CASE | {"opinions", "discussion", "final_term", "final_justification", "summary_contract"},
    "reminder_opinion": frozenset({"opinion_contract"}),
    "reminder_consensus": frozenset({"consensus_contract"}),
}

# contrato de formato que debe aparecer en el texto de cada etapa
STAGE_CONTRACTS: Final[Dict[str, str]] = {
    "system_presiding": CONSENSUS_CONTRACT,
    "baseline_standard": TERM_CONTRACT,
    "baseline_cot": TERM_CONTRACT,
    "baseline_ls": TERM_CONTRACT,
    "independent": TERM_CONTRACT,
    "statement_presiding": PRESIDING_STATEMENT_CONTRACT,
    "statement_member": MEMBER_STATEMENT_CONTRACT,
    "consensus": CONSENSUS_CONTRACT,
    "update": TERM_CONTRACT,
    "synthesis": TERM_CONTRACT,
    "summary": SUMMARY_CONTRACT,
    "reminder_opinion": TERM_CONTRACT,
    "reminder_consensus": CONSENSUS_CONTRACT,
}

ROLE_TEMPLATES: Final[Dict[str, str]] = {
    "presiding_judge": "system_presiding",
    "judge": "system_judge",
    "lay_judge": "system_lay_judge",
}


# ============================================================================
# CONJUNTO DE PLANTILLAS
# ============================================================================

class PromptTemplateSet:
    """
    📋 Plantillas Jinja2 por etapa, validadas al construirse

    Args:
        template_dir: Directorio con plantillas propias (None = solo defaults)

    Raises:
        PromptTemplateError: Plantilla ausente o placeholders distintos a
            los documentados
    """

    def __init__(self, template_dir: Optional[Path] = None):
        loaders = []
        if template_dir is not None:
            template_dir = Path(template_dir)
            if not template_dir.is_dir():
                raise PromptTemplateError(f"❌ Directorio de plantillas no encontrado: {template_dir}")
            loaders.append(FileSystemLoader(str(template_dir), encoding="utf-8"))
        loaders.append(FileSystemLoader(str(PATHS.DEFAULT_TEMPLATES), encoding="utf-8"))

        self.template_dir = template_dir
        self.env = Environment(
            loader=ChoiceLoader(loaders),
            undefined=StrictUndefined,
            autoescape=False,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=False,
        )
        self._sources: Dict[str, str] = {}
        self.validate()

    def _source(self, stage: str) -> str:
        if stage not in self._sources:
            try:
                source, _, _ = self.env.loader.get_source(self.env, f"{stage}.j2")
            except TemplateNotFound as e:
                raise PromptTemplateError(f"❌ Plantilla no encontrada: {stage}.j2") from e
            self._sources[stage] = source
        return self._sources[stage]

    def validate(self) -> None:
        """Comprobar que cada etapa declara exactamente sus placeholders"""
        for stage, expected in STAGE_PLACEHOLDERS.items():
            try:
                ast = self.env.parse(self._source(stage))
            except TemplateError as e:
                raise PromptTemplateError(f"❌ Sintaxis inválida en {stage}.j2: {e}") from e
            found = meta.find_undeclared_variables(ast)
            if found != expected:
                missing = sorted(expected - found)
                extra = sorted(found - expected)
                raise PromptTemplateError(
                    f"❌ Placeholders incorrectos en {stage}.j2\n"
                    f"   Faltan: {missing or '-'} | No documentados: {extra or '-'}"
                )

    def render(self, stage: str, **slots: object) -> str:
        """
        Renderizar una etapa con todos sus slots

        Raises:
            PromptTemplateError: Slots distintos a los documentados o texto vacío
        """
        expected = STAGE_PLACEHOLDERS.get(stage)
        if expected is None:
            raise PromptTemplateError(f"❌ Etapa desconocida: {stage}")
        if set(slots) != expected:
            raise PromptTemplateError(
                f"❌ Slots incorrectos para {stage}: {sorted(set(slots) ^ expected)}"
            )
        try:
            text = self.env.get_template(f"{stage}.j2").render(**slots).strip()
        except UndefinedError as e:
            raise PromptTemplateError(f"❌ Slot sin valor en {stage}.j2: {e}") from e
        if not text:
            raise PromptTemplateError(f"❌ La plantilla {stage}.j2 produjo texto vacío")
        return text

    def template_hashes(self) -> Dict[str, str]:
        """SHA-256 del código fuente de cada plantilla (para manifest.json)"""
        return {
            f"{stage}.j2": hashlib.sha256(self._source(stage).encode("utf-8")).hexdigest()
            for stage in sorted(STAGE_PLACEHOLDERS)
        }


@lru_cache(maxsize=None)
def default_templates() -> PromptTemplateSet:
    return PromptTemplateSet()


def _templates(templates: Optional[PromptTemplateSet]) -> PromptTemplateSet:
    return templates if templates is not None else default_templates()


# ============================================================================
# RENDERIZADO DE FRAGMENTOS
# ============================================================================

def _case_slots(case: "Case") -> Dict[str, str]:
    # gold_term_months nunca pasa a las plantillas
    return {"fact": case.fact, "charge": case.charge, "article": case.article}


def _role_value(profile: "AgentProfile") -> str:
    return getattr(profile.role, "value", profile.role)


def render_opinions(opinions: Sequence["SentencingOpinion"]) -> str:
    """Lista de opiniones vigentes: pena + razonamiento por agente"""
    lines = []
    for opinion in opinions:
        lines.append(f"- {opinion.agent_id}：刑期 {opinion.term_months} 个月")
        lines.append(f"  理由要点：{opinion.rationale.strip()}")
    return "\n".join(lines)


def render_statements(statements: Sequence[Tuple[str, str]]) -> str:
    return "\n\n".join(f"【{agent_id}】\n{text.strip()}" for agent_id, text in statements)


def render_round(round_: "DeliberationRound") -> str:
    parts = [f"### 第{round_.index}轮评议", render_statements(round_.statements)]
    if round_.verdict is not None:
        verdict = "是" if round_.verdict.consensus else "否"
        parts.append(f"审判长结论：{verdict}\n{round_.verdict.summary.strip()}")
    if round_.updated_opinions is not None:
        parts.append("本轮后的更新意见：\n" + render_opinions(round_.updated_opinions.opinions))
    return "\n\n".join(part for part in parts if part)


def render_discussion(rounds: Sequence["DeliberationRound"], budget: int = DEFAULT_TRANSCRIPT_BUDGET) -> str:
    """
    Historial de rondas dentro del presupuesto de caracteres

    Se descartan primero las rondas más antiguas; si la más reciente
    sola supera el presupuesto, se conserva su final.
    """
    if not rounds:
        return "（尚无评议记录）"

    blocks = [render_round(round_) for round_ in rounds]
    dropped = 0
    while len(blocks) > 1 and len("\n\n".join(blocks)) > budget:
        blocks.pop(0)
        dropped += 1

    text = "\n\n".join(blocks)
    if len(text) > budget:
        text = text[-budget:]
    if dropped:
        logger.debug(f"✂️ {dropped} rondas antiguas omitidas del historial")
        text = f"（前{dropped}轮评议记录已省略）\n\n{text}"
    return text


def render_precedents(precedents: Sequence[object]) -> str:
    if not precedents:
        return ""
    return "\n".join(
        f"- {entry.summary}：刑期 {entry.term_months} 个月" for entry in precedents
    )


def _pair(system: ChatMessage, user_text: str) -> List[ChatMessage]:
    return [system, ChatMessage(role="user", content=user_text)]


# ============================================================================
# CONSTRUCTORES POR ETAPA
# ============================================================================

def build_role_system_prompt(
    profile: "AgentProfile", templates: Optional[PromptTemplateSet] = None
) -> ChatMessage:
    """
    Prompt de sistema según el rol del agente

    Raises:
        UnknownRoleError: Rol fuera de presiding_judge/judge/lay_judge
    """
    role = _role_value(profile)
    stage = ROLE_TEMPLATES.get(role)
    if stage is None:
        raise UnknownRoleError(f"❌ Rol desconocido: {role}")

    slots: Dict[str, object] = {
        "agent_id": profile.id,
        "persona": profile.persona or "",
        "focus": profile.focus or "",
    }
    if stage == "system_presiding":
        slots["consensus_contract"] = CONSENSUS_CONTRACT

    return ChatMessage(role="system", content=_templates(templates).render(stage, **slots))


def build_baseline_prompt(
    case: "Case", method: str, templates: Optional[PromptTemplateSet] = None
) -> List[ChatMessage]:
    """
    Prompt zero-shot de los baselines standard / cot / ls

    Raises:
        UnknownMethodError: Método no reconocido
    """
    if method not in BASELINE_METHODS:
        raise UnknownMethodError(
            f"❌ Método baseline desconocido: {method} (válidos: {', '.join(BASELINE_METHODS)})"
        )
    text = _templates(templates).render(
        f"baseline_{method}", term_contract=TERM_CONTRACT, **_case_slots(case)
    )
    return [ChatMessage(role="user", content=text)]


def build_independent_sentencing_prompt(
    case: "Case",
    profile: "AgentProfile",
    precedents: Sequence[object] = (),
    templates: Optional[PromptTemplateSet] = None,
) -> List[ChatMessage]:
    """Opinión inicial sin conocer a los demás agentes"""
    templates = _templates(templates)
    text = templates.render(
        "independent",
        precedents=render_precedents(precedents),
        opinion_contract=OPINION_CONTRACT,
        **_case_slots(case),
    )
    return _pair(build_role_system_prompt(profile, templates), text)


def build_statement_prompt(
    case: "Case",
    profile: "AgentProfile",
    transcript: "Transcript",
    round_index: int,
    current_statements: Sequence[Tuple[str, str]] = (),
    templates: Optional[PromptTemplateSet] = None,
    budget: int = DEFAULT_TRANSCRIPT_BUDGET,
) -> List[ChatMessage]:
    """
    Intervención de un agente en la ronda ``round_index``

    El juez presidente abre la ronda resumiendo posiciones y planteando
    preguntas; los demás responden a lo dicho hasta el momento.
    """
    if round_index < 1:
        raise PromptTemplateError(f"❌ round_index debe ser ≥ 1: {round_index}")

    templates = _templates(templates)
    prior_rounds = [r for r in transcript.rounds if r.index < round_index]
    slots: Dict[str, object] = {
        "round_index": round_index,
        "opinions": render_opinions(transcript.current_opinions().opinions),
        "discussion": render_discussion(prior_rounds, budget),
        **_case_slots(case),
    }

    if _role_value(profile) == "presiding_judge":
        text = templates.render(
            "statement_presiding", statement_contract=PRESIDING_STATEMENT_CONTRACT, **slots
        )
    else:
        text = templates.render(
            "statement_member",
            current_round=render_statements(current_statements),
            statement_contract=MEMBER_STATEMENT_CONTRACT,
            **slots,
        )
    return _pair(build_role_system_prompt(profile, templates), text)


def build_consensus_prompt(
    opinions: "OpinionSet",
    round: "DeliberationRound",
    presiding: "AgentProfile",
    templates: Optional[PromptTemplateSet] = None,
) -> List[ChatMessage]:
    """Evaluación de consenso del juez presidente sobre la ronda"""
    templates = _templates(templates)
    text = templates.render(
        "consensus",
        round_index=round.index,
        opinions=render_opinions(opinions.opinions),
        statements=render_statements(round.statements),
        consensus_contract=CONSENSUS_CONTRACT,
    )
    return _pair(build_role_system_prompt(presiding, templates), text)


def build_update_prompt(
    case: "Case",
    profile: "AgentProfile",
    own_opinion: "SentencingOpinion",
    round: "DeliberationRound",
    templates: Optional[PromptTemplateSet] = None,
) -> List[ChatMessage]:
    """Reconsiderar la propia opinión tras la discusión de la ronda"""
    templates = _templates(templates)
    statements = render_statements(round.statements)
    if round.verdict is not None and round.verdict.summary.strip():
        statements += f"\n\n【审判长归纳的分歧】\n{round.verdict.summary.strip()}"

    text = templates.render(
        "update",
        round_index=round.index,
        own_term=own_opinion.term_months,
        own_rationale=own_opinion.rationale,
        statements=statements,
        opinion_contract=OPINION_CONTRACT,
        **_case_slots(case),
    )
    return _pair(build_role_system_prompt(profile, templates), text)


def build_synthesis_prompt(
    final_opinions: "OpinionSet",
    transcript: "Transcript",
    case: "Case",
    presiding: "AgentProfile",
    templates: Optional[PromptTemplateSet] = None,
    budget: int = DEFAULT_TRANSCRIPT_BUDGET,
) -> List[ChatMessage]:
    """Síntesis final del juez presidente sobre S(T) y todo el historial"""
    templates = _templates(templates)
    text = templates.render(
        "synthesis",
        opinions=render_opinions(final_opinions.opinions),
        discussion=render_discussion(transcript.rounds, budget),
        opinion_contract=OPINION_CONTRACT,
        **_case_slots(case),
    )
    return _pair(build_role_system_prompt(presiding, templates), text)


def build_summary_prompt(
    final_opinions: "OpinionSet",
    transcript: "Transcript",
    judgment: "FinalJudgment",
    case: "Case",
    presiding: "AgentProfile",
    templates: Optional[PromptTemplateSet] = None,
    budget: int = DEFAULT_TRANSCRIPT_BUDGET,
) -> List[ChatMessage]:
    """Resumen de cierre de la deliberación del tribunal"""
    templates = _templates(templates)
    text = templates.render(
        "summary",
        opinions=render_opinions(final_opinions.opinions),
        discussion=render_discussion(transcript.rounds, budget),
        final_term=judgment.term_months,
        final_justification=judgment.justification,
        summary_contract=SUMMARY_CONTRACT,
        **_case_slots(case),
    )
    return _pair(build_role_system_prompt(presiding, templates), text)


def build_reminder(kind: str, templates: Optional[PromptTemplateSet] = None) -> ChatMessage:
    """Recordatorio de formato tras una salida no interpretable ('opinion' o 'consensus')"""
    templates = _templates(templates)
    if kind == "opinion":
        text = templates.render("reminder_opinion", opinion_contract=OPINION_CONTRACT)
    elif kind == "consensus":
        text = templates.render("reminder_consensus", consensus_contract=CONSENSUS_CONTRACT)
    else:
        raise PromptTemplateError(f"❌ Tipo de recordatorio desconocido: {kind}")
    return ChatMessage(role="user", content=text)
