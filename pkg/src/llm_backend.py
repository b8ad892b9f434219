"""
🔌 AgentsBench - Backend de Completions

Una sola interfaz ``complete(request) -> str`` con dos implementaciones:

- OpenAIChatBackend: cliente HTTP (httpx) del protocolo chat/completions
  compatible con OpenAI, con reintentos exponenciales (tenacity) y un
  límite de peticiones simultáneas.
- ScriptedBackend: respuestas guionizadas en orden, para tests y replays
  deterministas. Registra cada petición recibida.
"""

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Protocol, Sequence, Tuple, Union

import httpx
from tenacity import RetryCallState, RetryError, Retrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from src.config import BackendConfig
from src.exceptions import (
    BackendAuthError,
    BackendError,
    DataValidationError,
    EmptyCompletionError,
    MalformedResponseError,
    PromptTemplateError,
    RetriesExhaustedError,
    ScriptExhaustedError,
    TransientBackendError,
)

logger = logging.getLogger(__name__)

CHAT_ROLES = ("system", "user", "assistant")
MAX_BACKOFF_SECONDS = 60.0


# ============================================================================
# TIPOS DE PETICIÓN
# ============================================================================

@dataclass(frozen=True)
class ChatMessage:
    """Un mensaje del protocolo chat"""

    role: str
    content: str

    def __post_init__(self):
        if self.role not in CHAT_ROLES:
            raise PromptTemplateError(f"❌ Rol de mensaje desconocido: {self.role}")
        if self.role in ("system", "user") and not self.content.strip():
            raise PromptTemplateError(f"❌ Mensaje '{self.role}' vacío")

    def to_dict(self) -> Dict[str, str]:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class CompletionRequest:
    """Petición de completion (temperature 0 y top_p 1.0 por defecto)"""

    model: str
    messages: Tuple[ChatMessage, ...]
    temperature: float = 0.0
    top_p: float = 1.0
    max_tokens: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise PromptTemplateError("❌ La petición no tiene mensajes")
        if self.temperature < 0:
            raise PromptTemplateError(f"❌ temperature debe ser ≥ 0: {self.temperature}")
        if not (0.0 < self.top_p <= 1.0):
            raise PromptTemplateError(f"❌ top_p debe estar en (0, 1]: {self.top_p}")
        if self.max_tokens is not None and self.max_tokens < 1:
            raise PromptTemplateError(f"❌ max_tokens debe ser positivo: {self.max_tokens}")

    def to_payload(self) -> Dict[str, Any]:
        """Cuerpo JSON para POST {base_url}/chat/completions"""
        payload: Dict[str, Any] = {
            "model": self.model,
            "messages": [message.to_dict() for message in self.messages],
            "temperature": self.temperature,
            "top_p": self.top_p,
        }
        if self.max_tokens is not None:
            payload["max_tokens"] = self.max_tokens
        return payload


class CompletionBackend(Protocol):
    """Cualquier objeto con complete(request) -> str"""

    def complete(self, request: CompletionRequest) -> str:
        ...


# ============================================================================
# BACKEND HTTP (OpenAI-compatible)
# ============================================================================

class OpenAIChatBackend:
    """
    🌐 Cliente del protocolo chat/completions

    - API key SOLO desde la variable de entorno configurada
    - 401/403 → BackendAuthError (sin reintento)
    - Timeout, errores de transporte, 429 y 5xx → reintento exponencial
    - Como máximo ``max_in_flight`` peticiones simultáneas por instancia

    Example:
        >>> backend = OpenAIChatBackend(BackendConfig())
        >>> backend.complete(CompletionRequest(model="gpt-4", messages=[...]))
    """

    def __init__(
        self,
        config: BackendConfig,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        api_key = os.getenv(config.api_key_env_var)
        if not api_key:
            raise BackendAuthError(
                f"❌ Variable de entorno {config.api_key_env_var} no definida\n"
                f"   Configura la API key en el entorno o en .env"
            )

        self.config = config
        self._sleep = sleep
        self._semaphore = threading.BoundedSemaphore(config.max_in_flight)
        self._client = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            headers={
                "Authorization": f"Bearer {api_key}",
                "Content-Type": "application/json",
            },
            timeout=config.request_timeout_ms / 1000,
            transport=transport,
        )

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "OpenAIChatBackend":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _log_retry(self, retry_state: RetryCallState) -> None:
        error = retry_state.outcome.exception() if retry_state.outcome else None
        delay = retry_state.next_action.sleep if retry_state.next_action else 0.0
        logger.warning(
            f"🔄 Reintento {retry_state.attempt_number}/{self.config.max_retries} "
            f"en {delay:.2f}s: {error}"
        )

    def _post_once(self, payload: Dict[str, Any]) -> str:
        with self._semaphore:
            try:
                response = self._client.post("/chat/completions", json=payload)
            except httpx.TimeoutException as e:
                raise TransientBackendError(f"⏱️ Timeout: {e}") from e
            except httpx.TransportError as e:
                raise TransientBackendError(f"🔌 Error de transporte: {e}") from e

        status = response.status_code
        if status in (401, 403):
            raise BackendAuthError(f"❌ Autenticación rechazada (HTTP {status})")
        if status == 429 or status >= 500:
            raise TransientBackendError(f"⚠️ HTTP {status} del backend")
        if status >= 400:
            raise BackendError(f"❌ HTTP {status}: {response.text[:200]}")

        try:
            body = response.json()
            content = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise MalformedResponseError(f"❌ Respuesta sin choices[0].message.content: {e}") from e

        if content is None or not str(content).strip():
            raise EmptyCompletionError("❌ El modelo devolvió contenido vacío")
        if not isinstance(content, str):
            raise MalformedResponseError(f"❌ Contenido no textual: {type(content).__name__}")

        return content

    def complete(self, request: CompletionRequest) -> str:
        """
        Enviar la petición y devolver el contenido de la primera opción (tal cual)

        Raises:
            BackendAuthError: Credenciales rechazadas
            RetriesExhaustedError: Fallos transitorios tras max_retries reintentos
            MalformedResponseError / EmptyCompletionError: Respuesta inutilizable
        """
        payload = request.to_payload()
        initial = self.config.initial_backoff_ms / 1000

        retrying = Retrying(
            stop=stop_after_attempt(self.config.max_retries + 1),
            wait=wait_exponential(multiplier=initial, min=initial, max=MAX_BACKOFF_SECONDS),
            retry=retry_if_exception_type(TransientBackendError),
            before_sleep=self._log_retry,
            sleep=self._sleep,
        )

        try:
            return retrying(self._post_once, payload)
        except RetryError as e:
            last = e.last_attempt.exception()
            raise RetriesExhaustedError(
                f"❌ Reintentos agotados ({self.config.max_retries}): {last}"
            ) from last


# ============================================================================
# BACKEND GUIONIZADO
# ============================================================================

@dataclass(eq=False)
class ScriptedBackend:
    """
    📜 Devuelve las respuestas del guion en orden

    Las llamadas se serializan con un lock para conservar el orden del
    replay. Cada petición recibida queda en ``requests``.
    """

    script: Sequence[str]
    requests: List[CompletionRequest] = field(default_factory=list)
    _position: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            self.requests.append(request)
            if self._position >= len(self.script):
                raise ScriptExhaustedError("script exhausted")
            response = self.script[self._position]
            self._position += 1
            return response

    @property
    def call_count(self) -> int:
        return len(self.requests)

    @property
    def remaining(self) -> int:
        return len(self.script) - self._position


def make_scripted_backend(script: Sequence[str]) -> ScriptedBackend:
    """Backend guionizado sobre una copia del guion"""
    return ScriptedBackend(script=list(script))


Script = Union[List[str], Dict[str, List[str]]]


def load_script(path: Union[str, Path]) -> Script:
    """
    Cargar un guion JSON: lista de respuestas o dict case_id → lista

    Raises:
        DataValidationError: Si el JSON no tiene ninguna de las dos formas
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise DataValidationError(f"❌ Guion JSON mal formado ({path}): {e}") from e

    def _is_text_list(value: Any) -> bool:
        return isinstance(value, list) and all(isinstance(item, str) for item in value)

    if _is_text_list(data):
        return data
    if isinstance(data, dict) and all(_is_text_list(v) for v in data.values()):
        return {str(k): v for k, v in data.items()}

    raise DataValidationError(
        f"❌ El guion {path} debe ser una lista de textos o un objeto case_id → lista"
    )


def script_hash(script: Script) -> str:
    """SHA-256 del guion en JSON canónico (va al manifest)"""
    canonical = json.dumps(script, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
