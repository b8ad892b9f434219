"""
🚨 AgentsBench - Excepciones Personalizadas

Define excepciones específicas del dominio para mejor manejo de errores
y mensajes más claros para el usuario.
"""

from typing import Any, Optional


class BenchError(Exception):
    """
    Excepción base para todas las excepciones de AgentsBench

    Todas las excepciones personalizadas heredan de esta clase
    para facilitar el manejo con try-except genérico.
    """
    pass


# ============================================================================
# EXCEPCIONES DE DATOS
# ============================================================================

class DataValidationError(BenchError):
    """
    Error en validación de datos de entrada

    Ejemplos:
    - Archivo JSONL con línea malformada
    - Campos requeridos faltantes
    - Pena de referencia fuera de rango
    """
    pass


class DatasetRecordError(DataValidationError):
    """
    Registro concreto del dataset inválido (incluye número de línea)
    """

    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        prefix = f"línea {line_no}: " if line_no is not None else ""
        super().__init__(f"{prefix}{message}")


class GoldTermError(DataValidationError):
    """
    La pena de referencia no contiene ningún término reconocible

    Ejemplo:
    >>> normalize_gold_term("sin pena")
    GoldTermError: no se encontró término de prisión
    """
    pass


# ============================================================================
# EXCEPCIONES DE PARSING
# ============================================================================

class TermParseError(BenchError):
    """Numeral chino o expresión de pena no interpretable"""
    pass


class OpinionParseError(BenchError):
    """
    La salida de un agente no contiene una pena recuperable

    Ejemplo:
    >>> parse_opinion("I cannot decide.")
    OpinionParseError: no se encontró pena
    """
    pass


class ConsensusParseError(BenchError):
    """
    Veredicto de consenso ausente o ambiguo (Yes y No a la vez)
    """
    pass


# ============================================================================
# EXCEPCIONES DE BACKEND LLM
# ============================================================================

class BackendError(BenchError):
    """Error genérico del backend de completions"""
    pass


class BackendAuthError(BackendError):
    """
    Autenticación rechazada (401/403) o API key ausente - NO se reintenta
    """
    pass


class TransientBackendError(BackendError):
    """
    Fallo transitorio (timeout, rate limit, 5xx) - se reintenta con backoff
    """
    pass


class RetriesExhaustedError(BackendError):
    """Se agotaron los reintentos de una petición"""
    pass


class MalformedResponseError(BackendError):
    """Cuerpo de respuesta sin choices[0].message.content"""
    pass


class EmptyCompletionError(BackendError):
    """El modelo devolvió contenido vacío"""
    pass


class ScriptExhaustedError(BackendError):
    """El backend guionizado no tiene más respuestas"""
    pass


# ============================================================================
# EXCEPCIONES DE PROMPTS
# ============================================================================

class PromptTemplateError(BenchError):
    """
    Plantilla no encontrada o con placeholders distintos a los documentados
    """
    pass


class UnknownRoleError(PromptTemplateError):
    """Rol de agente no reconocido"""
    pass


class UnknownMethodError(PromptTemplateError):
    """Método baseline no reconocido (standard, cot, ls)"""
    pass


# ============================================================================
# EXCEPCIONES DEL MOTOR DEL TRIBUNAL
# ============================================================================

class BenchSelectionError(BenchError):
    """
    Pool de agentes insuficiente para formar el tribunal

    Ejemplos:
    - Sin juez presidente en el pool
    - bench_size mayor que el pool disponible
    """
    pass


class CaseFailedError(BenchError):
    """
    Fallo a nivel de caso; lleva la transcripción parcial para persistirla
    """

    def __init__(self, message: str, transcript: Any = None):
        self.transcript = transcript
        super().__init__(message)


# ============================================================================
# EXCEPCIONES DE EVALUACIÓN
# ============================================================================

class MetricError(BenchError):
    """Parámetros inválidos para una métrica (max_diff < 1, lista vacía...)"""
    pass


class AnnotationError(BenchError):
    """
    Anotaciones de calidad incompletas o mal formadas

    Ejemplos:
    - Caso sin anotación de algún evaluador
    - Valor distinto de 0/1
    """
    pass


# ============================================================================
# EXCEPCIONES DE CONFIGURACIÓN Y ARTEFACTOS
# ============================================================================

class ConfigurationError(BenchError):
    """
    Error en configuración del sistema

    Ejemplos:
    - YAML corrupto
    - workers < 1
    - Método desconocido
    """
    pass


class RunArtifactError(BenchError):
    """Directorio de ejecución incompleto o archivos corruptos"""
    pass


# ============================================================================
# FUNCIONES AUXILIARES
# ============================================================================

def format_error_message(error: Exception, context: str = "") -> str:
    """
    Formatear mensaje de error con contexto adicional

    Args:
        error: Excepción capturada
        context: Contexto adicional (ej: id del caso)

    Returns:
        Mensaje formateado con emoji y contexto

    Example:
        >>> try:
        ...     load_cases(path, config)
        ... except DatasetRecordError as e:
        ...     print(format_error_message(e, "load_cases"))
        📄❌ Error en load_cases (DatasetRecordError): línea 3: campo 'fact' faltante
    """
    error_type = type(error).__name__
    emoji = "❌"

    if isinstance(error, DataValidationError):
        emoji = "📄❌"
    elif isinstance(error, BackendError):
        emoji = "🔌❌"
    elif isinstance(error, (OpinionParseError, ConsensusParseError, TermParseError)):
        emoji = "🔍❌"
    elif isinstance(error, CaseFailedError):
        emoji = "⚖️❌"

    if context:
        return f"{emoji} Error en {context} ({error_type}): {str(error)}"
    return f"{emoji} {error_type}: {str(error)}"


def is_critical_error(error: Exception) -> bool:
    """
    Determinar si un error debe detener la ejecución completa

    Los errores de caso (parse, backend transitorio) se registran y la
    ejecución continúa con el siguiente caso.
    """
    critical_errors = (
        ConfigurationError,
        BackendAuthError,
        RunArtifactError,
        PromptTemplateError,
    )
    return isinstance(error, critical_errors)
