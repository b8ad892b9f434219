"""
⚖️ AgentsBench - Motor del Tribunal Colegiado

Pipeline por caso:
1. Selección del tribunal (juez presidente + miembros muestreados con semilla)
2. Opiniones independientes (una llamada por agente, presidente primero)
3. Rondas de deliberación: intervenciones → evaluación de consenso del
   presidente → actualización de opiniones (solo si no hay consenso)
4. Síntesis final (ratificación, llamada de síntesis o mediana de respaldo)
   + resumen de cierre del presidente

Dentro de un caso todas las llamadas son estrictamente secuenciales.
Varios casos pueden ejecutarse en paralelo compartiendo el backend; el
único estado compartido es PrecedentMemory (append-only, con lock).

También ejecuta los baselines de un solo prompt (standard, cot, ls).
"""

import hashlib
import json
import logging
import random
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

from src.config import EngineConfig
from src.dataset import Case
from src.exceptions import (
    BackendAuthError,
    BackendError,
    BenchSelectionError,
    CaseFailedError,
    ConsensusParseError,
    DataValidationError,
    OpinionParseError,
    UnknownRoleError,
)
from src.llm_backend import ChatMessage, CompletionBackend, CompletionRequest
from src.prompts import (
    DEFAULT_TRANSCRIPT_BUDGET,
    PromptTemplateSet,
    build_baseline_prompt,
    build_consensus_prompt,
    build_independent_sentencing_prompt,
    build_reminder,
    build_statement_prompt,
    build_summary_prompt,
    build_synthesis_prompt,
    build_update_prompt,
    default_templates,
)
from src.term_parser import ConsensusParse, ParsedOpinion, extract_prison_term_months, parse_consensus, parse_opinion

logger = logging.getLogger(__name__)

T = TypeVar("T")

STATUS_COMPLETED = "completed"
STATUS_FAILED = "failed"
STATUS_IN_PROGRESS = "in_progress"


# ============================================================================
# TIPOS DEL DOMINIO
# ============================================================================

class AgentRole(str, Enum):
    PRESIDING_JUDGE = "presiding_judge"
    JUDGE = "judge"
    LAY_JUDGE = "lay_judge"


@dataclass(frozen=True)
class AgentProfile:
    """Rol, persona y foco de un agente del pool"""

    id: str
    role: AgentRole
    persona: str = ""
    focus: str = ""

    def to_dict(self) -> Dict[str, str]:
        return {"id": self.id, "role": self.role.value, "persona": self.persona, "focus": self.focus}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AgentProfile":
        try:
            role = AgentRole(data["role"])
        except ValueError as e:
            raise UnknownRoleError(f"❌ Rol desconocido: {data.get('role')}") from e
        return cls(
            id=str(data["id"]),
            role=role,
            persona=str(data.get("persona") or ""),
            focus=str(data.get("focus") or ""),
        )


@dataclass(frozen=True)
class Bench:
    """Tribunal seleccionado: presidente + miembros en orden del pool"""

    presiding: AgentProfile
    members: Tuple[AgentProfile, ...] = ()

    @property
    def agents(self) -> Tuple[AgentProfile, ...]:
        return (self.presiding,) + tuple(self.members)

    @property
    def size(self) -> int:
        return 1 + len(self.members)

    def to_dict(self) -> Dict[str, Any]:
        return {"presiding": self.presiding.to_dict(), "members": [m.to_dict() for m in self.members]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Bench":
        return cls(
            presiding=AgentProfile.from_dict(data["presiding"]),
            members=tuple(AgentProfile.from_dict(m) for m in data.get("members", [])),
        )


@dataclass(frozen=True)
class SentencingOpinion:
    """Pena propuesta por un agente en la ronda ``round`` (0 = inicial)"""

    agent_id: str
    term_months: int
    rationale: str
    round: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "agent_id": self.agent_id,
            "term_months": self.term_months,
            "rationale": self.rationale,
            "round": self.round,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SentencingOpinion":
        return cls(
            agent_id=data["agent_id"],
            term_months=int(data["term_months"]),
            rationale=data.get("rationale", ""),
            round=int(data.get("round", 0)),
        )


@dataclass
class OpinionSet:
    """Opiniones vigentes de los agentes que no se abstuvieron"""

    round: int
    opinions: List[SentencingOpinion] = field(default_factory=list)

    def terms(self) -> List[int]:
        return [opinion.term_months for opinion in self.opinions]

    def by_agent(self) -> Dict[str, SentencingOpinion]:
        return {opinion.agent_id: opinion for opinion in self.opinions}

    def to_dict(self) -> Dict[str, Any]:
        return {"round": self.round, "opinions": [o.to_dict() for o in self.opinions]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "OpinionSet":
        return cls(round=int(data["round"]), opinions=[SentencingOpinion.from_dict(o) for o in data["opinions"]])


@dataclass
class DeliberationRound:
    """Intervenciones D(t), veredicto C(t) y opiniones actualizadas"""

    index: int
    statements: List[Tuple[str, str]] = field(default_factory=list)
    verdict: Optional[ConsensusParse] = None
    updated_opinions: Optional[OpinionSet] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "statements": [{"agent_id": agent_id, "text": text} for agent_id, text in self.statements],
            "verdict": None if self.verdict is None else {
                "consensus": self.verdict.consensus,
                "summary": self.verdict.summary,
                "fallback": self.verdict.fallback,
            },
            "updated_opinions": None if self.updated_opinions is None else self.updated_opinions.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DeliberationRound":
        verdict = data.get("verdict")
        updated = data.get("updated_opinions")
        return cls(
            index=int(data["index"]),
            statements=[(s["agent_id"], s["text"]) for s in data.get("statements", [])],
            verdict=None if verdict is None else ConsensusParse(
                consensus=bool(verdict["consensus"]),
                summary=verdict.get("summary", ""),
                fallback=bool(verdict.get("fallback", False)),
            ),
            updated_opinions=None if updated is None else OpinionSet.from_dict(updated),
        )


@dataclass(frozen=True)
class FinalJudgment:
    """Pena final S_final con su justificación"""

    term_months: int
    justification: str
    consensus_reached: bool
    rounds_used: int
    fallback: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "term_months": self.term_months,
            "justification": self.justification,
            "consensus_reached": self.consensus_reached,
            "rounds_used": self.rounds_used,
            "fallback": self.fallback,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FinalJudgment":
        return cls(
            term_months=int(data["term_months"]),
            justification=data.get("justification", ""),
            consensus_reached=bool(data["consensus_reached"]),
            rounds_used=int(data["rounds_used"]),
            fallback=bool(data.get("fallback", False)),
        )


@dataclass
class Transcript:
    """
    📜 Historial completo de un caso

    Se rellena en el propio motor a medida que avanza la deliberación,
    de modo que ante un fallo queda la transcripción parcial.
    """

    case_id: str
    bench: Bench
    initial: Optional[OpinionSet] = None
    rounds: List[DeliberationRound] = field(default_factory=list)
    final: Optional[FinalJudgment] = None
    closing_summary: Optional[str] = None
    status: str = STATUS_IN_PROGRESS
    error: Optional[str] = None
    flags: List[str] = field(default_factory=list)
    call_count: int = 0
    retry_calls: int = 0

    def current_opinions(self) -> OpinionSet:
        """Última OpinionSet vigente: actualizaciones de la última ronda o S(0)"""
        for round_ in reversed(self.rounds):
            if round_.updated_opinions is not None:
                return round_.updated_opinions
        if self.initial is None:
            return OpinionSet(round=0)
        return self.initial

    def to_dict(self) -> Dict[str, Any]:
        return {
            "case_id": self.case_id,
            "status": self.status,
            "error": self.error,
            "bench": self.bench.to_dict(),
            "initial": None if self.initial is None else self.initial.to_dict(),
            "rounds": [r.to_dict() for r in self.rounds],
            "final": None if self.final is None else self.final.to_dict(),
            "closing_summary": self.closing_summary,
            "flags": list(self.flags),
            "call_count": self.call_count,
            "retry_calls": self.retry_calls,
        }

    def to_json(self) -> str:
        # sin timestamps: mismas entradas → mismos bytes
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Transcript":
        return cls(
            case_id=data["case_id"],
            bench=Bench.from_dict(data["bench"]),
            initial=None if data.get("initial") is None else OpinionSet.from_dict(data["initial"]),
            rounds=[DeliberationRound.from_dict(r) for r in data.get("rounds", [])],
            final=None if data.get("final") is None else FinalJudgment.from_dict(data["final"]),
            closing_summary=data.get("closing_summary"),
            status=data.get("status", STATUS_COMPLETED),
            error=data.get("error"),
            flags=list(data.get("flags", [])),
            call_count=int(data.get("call_count", 0)),
            retry_calls=int(data.get("retry_calls", 0)),
        )


@dataclass(frozen=True)
class PrecedentEntry:
    case_id: str
    summary: str
    term_months: int

    def to_dict(self) -> Dict[str, Any]:
        return {"case_id": self.case_id, "summary": self.summary, "term_months": self.term_months}


class PrecedentMemory:
    """
    🧠 Precedentes por delito (append-only)

    Las escrituras se serializan con un lock; las lecturas devuelven copias.
    """

    SUMMARY_CHARS = 120

    def __init__(self):
        self._entries: Dict[str, List[PrecedentEntry]] = {}
        self._lock = threading.RLock()

    def __len__(self) -> int:
        with self._lock:
            return sum(len(entries) for entries in self._entries.values())

    def append(self, charge: str, entry: PrecedentEntry) -> None:
        with self._lock:
            self._entries.setdefault(charge, []).append(entry)

    def entries(self, charge: str) -> List[PrecedentEntry]:
        with self._lock:
            return list(self._entries.get(charge, []))

    def to_records(self) -> List[Dict[str, Any]]:
        with self._lock:
            return [
                {"charge": charge, **entry.to_dict()}
                for charge, entries in self._entries.items()
                for entry in entries
            ]

    @classmethod
    def from_records(cls, records: Sequence[Dict[str, Any]]) -> "PrecedentMemory":
        memory = cls()
        for record in records:
            memory.append(
                record["charge"],
                PrecedentEntry(
                    case_id=str(record["case_id"]),
                    summary=record.get("summary", ""),
                    term_months=int(record["term_months"]),
                ),
            )
        return memory


@dataclass(frozen=True)
class BaselinePrediction:
    """Salida de un baseline de un solo prompt"""

    case_id: str
    method: str
    raw_output: str
    predicted_months: Optional[int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "case_id": self.case_id,
            "method": self.method,
            "raw_output": self.raw_output,
            "predicted_months": self.predicted_months,
        }


# ============================================================================
# POOL Y SELECCIÓN DEL TRIBUNAL
# ============================================================================

def load_agent_pool(path: Union[str, Path]) -> List[AgentProfile]:
    """
    Cargar el pool de agentes (JSONL: id, role, persona, focus)

    Raises:
        DataValidationError: Línea mal formada o id duplicado
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"❌ Pool de agentes no encontrado: {path}")

    pool: List[AgentProfile] = []
    seen = set()
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                profile = AgentProfile.from_dict(json.loads(line))
            except (json.JSONDecodeError, KeyError, UnknownRoleError) as e:
                raise DataValidationError(f"❌ Pool {path.name}, línea {line_no}: {e}") from e
            if profile.id in seen:
                raise DataValidationError(f"❌ Pool {path.name}, línea {line_no}: id duplicado '{profile.id}'")
            seen.add(profile.id)
            pool.append(profile)

    logger.info(f"👥 Pool de {len(pool)} agentes cargado desde {path.name}")
    return pool


def agent_pool_hash(pool: Sequence[AgentProfile]) -> str:
    """SHA-256 del pool en forma canónica (para el manifest)"""
    canonical = json.dumps([p.to_dict() for p in pool], ensure_ascii=False, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def derive_case_seed(seed: int, case_id: str) -> int:
    """Semilla por caso: SHA-256 de (seed, case_id), reproducible"""
    digest = hashlib.sha256(f"{seed}:{case_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def select_bench(pool: Sequence[AgentProfile], config: EngineConfig, seed: int) -> Bench:
    """
    Seleccionar el tribunal de un caso

    El presidente es ``config.presiding_id`` o el primer presidente del pool.
    Los bench_size - 1 miembros se muestrean sin reemplazo con un
    random.Random(seed) propio, opcionalmente por rol según
    ``config.composition``. Los miembros conservan el orden del pool.

    Raises:
        BenchSelectionError: Sin presidente o pool insuficiente
    """
    presidings = [p for p in pool if p.role == AgentRole.PRESIDING_JUDGE]
    if not presidings:
        raise BenchSelectionError("❌ El pool no contiene ningún juez presidente")

    if config.presiding_id is not None:
        matches = [p for p in presidings if p.id == config.presiding_id]
        if not matches:
            raise BenchSelectionError(f"❌ Presidente '{config.presiding_id}' no está en el pool")
        presiding = matches[0]
    else:
        presiding = presidings[0]

    others = [p for p in pool if p.role != AgentRole.PRESIDING_JUDGE]
    needed = config.bench_size - 1
    if needed > len(others):
        raise BenchSelectionError(
            f"❌ bench_size {config.bench_size} requiere {needed} miembros; el pool tiene {len(others)}"
        )

    rng = random.Random(seed)
    if config.composition:
        chosen: List[AgentProfile] = []
        for role_name in sorted(config.composition):
            count = config.composition[role_name]
            candidates = [p for p in others if p.role.value == role_name]
            if count > len(candidates):
                raise BenchSelectionError(
                    f"❌ Se requieren {count} '{role_name}' pero el pool tiene {len(candidates)}"
                )
            chosen.extend(rng.sample(candidates, count))
    else:
        chosen = rng.sample(others, needed)

    order = {profile.id: index for index, profile in enumerate(pool)}
    members = tuple(sorted(chosen, key=lambda p: order[p.id]))
    return Bench(presiding=presiding, members=members)


# ============================================================================
# SESIÓN DE LLAMADAS
# ============================================================================

class _Session:
    """Llamadas secuenciales de un caso, con contabilidad en la transcripción"""

    def __init__(
        self,
        backend: CompletionBackend,
        config: EngineConfig,
        templates: Optional[PromptTemplateSet],
        transcript: Optional[Transcript],
        budget: int,
    ):
        self.backend = backend
        self.config = config
        self.templates = templates if templates is not None else default_templates()
        self.transcript = transcript
        self.budget = budget

    def call(self, messages: Sequence[ChatMessage], retry: bool = False) -> str:
        request = CompletionRequest(
            model=self.config.model,
            messages=tuple(messages),
            temperature=self.config.temperature,
            top_p=self.config.top_p,
            max_tokens=self.config.max_tokens,
        )
        if self.transcript is not None:
            self.transcript.call_count += 1
            if retry:
                self.transcript.retry_calls += 1
        return self.backend.complete(request)

    def ask(
        self, messages: Sequence[ChatMessage], parse: Callable[[str], T], kind: str, who: str
    ) -> Optional[T]:
        """Llamar y parsear; reintentar con recordatorio hasta parse_retries veces"""
        conversation = list(messages)
        for attempt in range(self.config.parse_retries + 1):
            raw = self.call(conversation, retry=attempt > 0)
            try:
                return parse(raw)
            except (OpinionParseError, ConsensusParseError) as e:
                logger.warning(
                    f"⚠️ Salida no interpretable de {who} (intento {attempt + 1}): {e}",
                    extra={"case_id": self.case_id, "agent_id": who},
                )
                conversation.append(ChatMessage(role="assistant", content=raw))
                conversation.append(build_reminder(kind, self.templates))
        return None

    def flag(self, text: str) -> None:
        if self.transcript is not None:
            self.transcript.flags.append(text)

    @property
    def case_id(self) -> Optional[str]:
        return self.transcript.case_id if self.transcript is not None else None


# ============================================================================
# ETAPAS DEL PIPELINE
# ============================================================================

def independent_sentencing(
    bench: Bench,
    case: Case,
    backend: CompletionBackend,
    config: EngineConfig,
    precedents: Sequence[PrecedentEntry] = (),
    templates: Optional[PromptTemplateSet] = None,
    transcript: Optional[Transcript] = None,
) -> OpinionSet:
    """
    S(0): una opinión por agente, en orden del tribunal (presidente primero)

    Un miembro que sigue sin respuesta interpretable tras los reintentos
    se abstiene.

    Raises:
        CaseFailedError: Presidente no interpretable o todos los miembros abstenidos
    """
    session = _Session(backend, config, templates, transcript, DEFAULT_TRANSCRIPT_BUDGET)
    opinions: List[SentencingOpinion] = []

    for agent in bench.agents:
        messages = build_independent_sentencing_prompt(case, agent, precedents, session.templates)
        parsed: Optional[ParsedOpinion] = session.ask(messages, parse_opinion, "opinion", agent.id)

        if parsed is None:
            if agent is bench.presiding:
                raise CaseFailedError(
                    f"❌ Opinión inicial del presidente {agent.id} no interpretable", transcript
                )
            logger.warning(f"🚫 {agent.id} se abstiene (opinión inicial)", extra={"case_id": case.id})
            session.flag(f"abstention:{agent.id}:round0")
            continue

        opinions.append(SentencingOpinion(agent.id, parsed.term_months, parsed.rationale, round=0))

    if bench.members and len(opinions) == 1:
        raise CaseFailedError("❌ Todos los miembros del tribunal se abstuvieron", transcript)

    logger.info(
        f"📝 S(0) caso {case.id}: {[o.term_months for o in opinions]}",
        extra={"case_id": case.id},
    )
    return OpinionSet(round=0, opinions=opinions)


def evaluate_consensus(
    opinions: OpinionSet,
    round_statements: DeliberationRound,
    backend: CompletionBackend,
    config: EngineConfig,
    presiding: AgentProfile,
    templates: Optional[PromptTemplateSet] = None,
    transcript: Optional[Transcript] = None,
) -> ConsensusParse:
    """
    C(t): veredicto del presidente sobre la convergencia de posiciones

    Un veredicto no interpretable tras los reintentos cuenta como
    "sin consenso" (fallback=True).
    """
    if not opinions.opinions:
        raise CaseFailedError("❌ Evaluación de consenso sin opiniones", transcript)

    session = _Session(backend, config, templates, transcript, DEFAULT_TRANSCRIPT_BUDGET)
    messages = build_consensus_prompt(opinions, round_statements, presiding, session.templates)
    verdict = session.ask(messages, parse_consensus, "consensus", presiding.id)

    if verdict is None:
        logger.warning(
            f"⚠️ Veredicto no interpretable en ronda {round_statements.index} - se asume 'No'",
            extra={"case_id": session.case_id},
        )
        session.flag(f"consensus_fallback:round{round_statements.index}")
        return ConsensusParse(
            consensus=False,
            summary="审判长的结论无法识别，按未达成一致处理。",
            fallback=True,
        )
    return verdict


def run_round(
    case: Case,
    bench: Bench,
    state: Transcript,
    backend: CompletionBackend,
    config: EngineConfig,
    templates: Optional[PromptTemplateSet] = None,
    budget: int = DEFAULT_TRANSCRIPT_BUDGET,
) -> DeliberationRound:
    """
    Una ronda de deliberación sobre ``state`` (se actualiza in situ)

    1. Intervenciones: presidente primero, luego miembros en orden
    2. evaluate_consensus
    3. Sin consenso: cada agente con opinión la actualiza; si la respuesta
       no es interpretable se mantiene la opinión anterior sin cambios
    """
    session = _Session(backend, config, templates, state, budget)
    index = len(state.rounds) + 1
    current = state.current_opinions()

    round_ = DeliberationRound(index=index)
    state.rounds.append(round_)

    for agent in bench.agents:
        messages = build_statement_prompt(
            case, agent, state, index, round_.statements, session.templates, budget
        )
        round_.statements.append((agent.id, session.call(messages)))

    round_.verdict = evaluate_consensus(
        current, round_, backend, config, bench.presiding, session.templates, state
    )
    logger.info(
        f"🗣️ Ronda {index} caso {case.id}: consenso={'sí' if round_.verdict.consensus else 'no'}",
        extra={"case_id": case.id},
    )
    if round_.verdict.consensus:
        return round_

    own = current.by_agent()
    updated: List[SentencingOpinion] = []
    for agent in bench.agents:
        prior = own.get(agent.id)
        if prior is None:
            continue  # abstenido
        messages = build_update_prompt(case, agent, prior, round_, session.templates)
        parsed: Optional[ParsedOpinion] = session.ask(messages, parse_opinion, "opinion", agent.id)
        if parsed is None:
            logger.warning(f"↩️ {agent.id} mantiene su opinión anterior", extra={"case_id": case.id})
            session.flag(f"carry_forward:{agent.id}:round{index}")
            updated.append(prior)
            continue
        updated.append(SentencingOpinion(agent.id, parsed.term_months, parsed.rationale, round=index))

    round_.updated_opinions = OpinionSet(round=index, opinions=updated)
    return round_


def _lower_median(terms: Sequence[int]) -> int:
    ordered = sorted(terms)
    return ordered[(len(ordered) - 1) // 2]


def synthesize_final(
    state: Transcript,
    backend: CompletionBackend,
    config: EngineConfig,
    case: Case,
    templates: Optional[PromptTemplateSet] = None,
    budget: int = DEFAULT_TRANSCRIPT_BUDGET,
) -> FinalJudgment:
    """
    S_final = g(S(T), D_history)

    - Consenso con penas unánimes: se ratifica sin llamada
    - Consenso con penas distintas, o sin consenso: una llamada de síntesis;
      si no es interpretable, mediana de las penas vigentes (empate: menor)
    - En ambos casos, llamada de resumen de cierre del presidente
    """
    session = _Session(backend, config, templates, state, budget)
    presiding = state.bench.presiding
    current = state.current_opinions()
    rounds_used = len(state.rounds)
    last_verdict = state.rounds[-1].verdict if state.rounds else None
    consensus = bool(last_verdict is not None and last_verdict.consensus)
    terms = current.terms()

    if consensus and len(set(terms)) == 1:
        judgment = FinalJudgment(
            term_months=terms[0],
            justification=last_verdict.summary,
            consensus_reached=True,
            rounds_used=rounds_used,
        )
        logger.info(f"✅ Consenso ratificado: {terms[0]} meses", extra={"case_id": case.id})
    else:
        messages = build_synthesis_prompt(current, state, case, presiding, session.templates, budget)
        parsed: Optional[ParsedOpinion] = session.ask(messages, parse_opinion, "opinion", presiding.id)
        if parsed is not None:
            judgment = FinalJudgment(
                term_months=parsed.term_months,
                justification=parsed.rationale,
                consensus_reached=consensus,
                rounds_used=rounds_used,
            )
        else:
            median = _lower_median(terms)
            logger.warning(
                f"⚠️ Síntesis no interpretable - mediana de {terms} = {median}",
                extra={"case_id": case.id},
            )
            session.flag("synthesis_fallback:median")
            judgment = FinalJudgment(
                term_months=median,
                justification=f"合议庭各成员意见的中位数：{median}个月。",
                consensus_reached=consensus,
                rounds_used=rounds_used,
                fallback=True,
            )

    state.final = judgment
    summary_messages = build_summary_prompt(current, state, judgment, case, presiding, session.templates, budget)
    state.closing_summary = session.call(summary_messages)
    return judgment


# ============================================================================
# MEMORIA DE PRECEDENTES
# ============================================================================

def remember_case(memory: PrecedentMemory, case: Case, judgment: FinalJudgment) -> PrecedentMemory:
    """Guardar el resultado de un caso bajo su delito"""
    summary = case.fact[: PrecedentMemory.SUMMARY_CHARS]
    if len(case.fact) > PrecedentMemory.SUMMARY_CHARS:
        summary += "…"
    memory.append(case.charge, PrecedentEntry(case.id, summary, judgment.term_months))
    return memory


def recall_similar(memory: PrecedentMemory, case: Case, k: int) -> List[PrecedentEntry]:
    """Hasta k precedentes más recientes del mismo delito (excluye el propio caso)"""
    if k <= 0:
        return []
    entries = [entry for entry in memory.entries(case.charge) if entry.case_id != case.id]
    return entries[-k:]


# ============================================================================
# CASO COMPLETO
# ============================================================================

def run_case(
    case: Case,
    pool: Sequence[AgentProfile],
    backend: CompletionBackend,
    config: EngineConfig,
    memory: Optional[PrecedentMemory] = None,
    templates: Optional[PromptTemplateSet] = None,
    budget: int = DEFAULT_TRANSCRIPT_BUDGET,
) -> Transcript:
    """
    Ejecutar el pipeline completo de un caso

    Returns:
        Transcript con status 'completed'

    Raises:
        BenchSelectionError: Pool insuficiente para el tribunal
        BackendAuthError: Credenciales rechazadas (detiene toda la ejecución)
        CaseFailedError: Fallo del caso; lleva la transcripción parcial
    """
    bench = select_bench(pool, config, derive_case_seed(config.seed, case.id))
    transcript = Transcript(case_id=case.id, bench=bench)
    use_memory = config.memory_enabled and memory is not None

    try:
        precedents = recall_similar(memory, case, config.recall_k) if use_memory else []
        transcript.initial = independent_sentencing(
            bench, case, backend, config, precedents, templates, transcript
        )

        for _ in range(config.max_rounds):
            round_ = run_round(case, bench, transcript, backend, config, templates, budget)
            if round_.verdict.consensus:
                break

        synthesize_final(transcript, backend, config, case, templates, budget)
    except BackendAuthError:
        raise
    except (BackendError, CaseFailedError) as e:
        transcript.status = STATUS_FAILED
        transcript.error = f"{type(e).__name__}: {e}"
        logger.error(f"❌ Caso {case.id} fallido: {e}", extra={"case_id": case.id})
        raise CaseFailedError(transcript.error, transcript) from e

    transcript.status = STATUS_COMPLETED
    if use_memory:
        remember_case(memory, case, transcript.final)

    logger.info(
        f"⚖️ Caso {case.id}: {transcript.final.term_months} meses "
        f"({len(transcript.rounds)} rondas, {transcript.call_count} llamadas)",
        extra={"case_id": case.id},
    )
    return transcript


def call_bound(config: EngineConfig) -> int:
    """Máximo de llamadas por caso sin contar reintentos de parsing"""
    return config.bench_size + config.max_rounds * (2 * config.bench_size + 1) + 2


# ============================================================================
# BASELINES
# ============================================================================

def predict_baseline(
    case: Case,
    method: str,
    backend: CompletionBackend,
    config: Optional[EngineConfig] = None,
    templates: Optional[PromptTemplateSet] = None,
) -> BaselinePrediction:
    """Una llamada con el prompt baseline; la pena es la última expresión del texto"""
    config = config or EngineConfig()
    session = _Session(backend, config, templates, None, DEFAULT_TRANSCRIPT_BUDGET)
    raw = session.call(build_baseline_prompt(case, method, session.templates))
    months = extract_prison_term_months(raw)
    if months is None:
        logger.warning(f"⚠️ Sin pena extraíble ({method}) en caso {case.id}", extra={"case_id": case.id})
    return BaselinePrediction(case_id=case.id, method=method, raw_output=raw, predicted_months=months)


def run_baseline_case(
    case: Case,
    method: str,
    backend: CompletionBackend,
    config: Optional[EngineConfig] = None,
    templates: Optional[PromptTemplateSet] = None,
) -> Optional[int]:
    """Pena predicha por un baseline (None si no se pudo extraer)"""
    return predict_baseline(case, method, backend, config, templates).predicted_months
