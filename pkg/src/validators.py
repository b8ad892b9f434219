"""
✅ AgentsBench - Módulo de Validaciones

Funciones reutilizables para validar paths, configuraciones y otros
inputs del usuario o externos.
"""

from pathlib import Path
from typing import Union

from src.config import METHODS, BackendConfig, DatasetConfig, EngineConfig, RunConfig
from src.exceptions import ConfigurationError, DataValidationError

ROLES = ("presiding_judge", "judge", "lay_judge")


# ============================================================================
# VALIDADORES DE PATHS Y ARCHIVOS
# ============================================================================

def validate_jsonl_path(path: Union[str, Path], must_exist: bool = True) -> Path:
    """
    Validar que path existe y es archivo JSONL/JSON

    Raises:
        FileNotFoundError: Si archivo no existe y must_exist=True
        DataValidationError: Si la extensión no es .jsonl/.json
    """
    path = Path(path)

    if must_exist and not path.exists():
        raise FileNotFoundError(
            f"❌ Archivo no encontrado: {path}\n"
            f"   Verifica que la ruta sea correcta"
        )

    if path.suffix.lower() not in (".jsonl", ".json"):
        raise DataValidationError(
            f"❌ Archivo debe ser JSONL o JSON, recibido: {path.suffix}\n"
            f"   Archivo: {path}"
        )

    return path


def validate_directory(path: Union[str, Path], create_if_missing: bool = False) -> Path:
    """
    Validar que path es directorio válido

    Raises:
        FileNotFoundError: Si directorio no existe y create_if_missing=False
        ConfigurationError: Si path es archivo, no directorio
    """
    path = Path(path)

    if not path.exists():
        if create_if_missing:
            path.mkdir(parents=True, exist_ok=True)
        else:
            raise FileNotFoundError(
                f"❌ Directorio no encontrado: {path}\n"
                f"   Usa create_if_missing=True para crear automáticamente"
            )

    if not path.is_dir():
        raise ConfigurationError(f"❌ Path debe ser directorio, no archivo: {path}")

    return path


def safe_path(base_dir: Path, user_input: str) -> Path:
    """
    Crear path seguro evitando path traversal

    Los ids de caso vienen del dataset y se usan como nombre de archivo.

    Example:
        >>> safe_path(run_dir / "cases", "case-001.json")
        >>> # ✅ runs/x/cases/case-001.json
        >>> safe_path(run_dir / "cases", "../../secrets.json")
        >>> # ❌ DataValidationError: Path no permitido
    """
    requested_path = (base_dir / user_input).resolve()
    base_dir_resolved = base_dir.resolve()

    try:
        requested_path.relative_to(base_dir_resolved)
    except ValueError:
        raise DataValidationError(
            f"❌ Path no permitido: {user_input}\n"
            f"   Debe estar dentro de: {base_dir}"
        )

    return requested_path


# ============================================================================
# VALIDADORES DE CONFIGURACIÓN
# ============================================================================

def validate_dataset_config(config: DatasetConfig) -> None:
    if config.max_fact_chars < 1:
        raise ConfigurationError(
            f"❌ max_fact_chars debe ser ≥ 1\n"
            f"   Valor recibido: {config.max_fact_chars}"
        )
    if config.max_term_months < 0:
        raise ConfigurationError(f"❌ max_term_months debe ser ≥ 0: {config.max_term_months}")


def validate_backend_config(config: BackendConfig) -> None:
    """
    Validar configuración del backend

    Raises:
        ConfigurationError: Si parámetros inválidos
    """
    if not config.base_url.startswith(("http://", "https://")):
        raise ConfigurationError(f"❌ base_url debe ser http(s): {config.base_url}")
    if not config.api_key_env_var:
        raise ConfigurationError("❌ api_key_env_var no puede estar vacío")
    if config.max_retries < 0:
        raise ConfigurationError(f"❌ max_retries debe ser ≥ 0: {config.max_retries}")
    if config.initial_backoff_ms < 1:
        raise ConfigurationError(f"❌ initial_backoff_ms debe ser ≥ 1: {config.initial_backoff_ms}")
    if config.request_timeout_ms < 1:
        raise ConfigurationError(f"❌ request_timeout_ms debe ser ≥ 1: {config.request_timeout_ms}")
    if config.max_in_flight < 1:
        raise ConfigurationError(f"❌ max_in_flight debe ser ≥ 1: {config.max_in_flight}")


def validate_engine_config(config: EngineConfig) -> None:
    """
    Validar configuración del motor de deliberación

    Raises:
        ConfigurationError: Si parámetros inválidos
    """
    if config.bench_size < 1:
        raise ConfigurationError(f"❌ bench_size debe ser ≥ 1: {config.bench_size}")
    if config.max_rounds < 1:
        raise ConfigurationError(f"❌ max_rounds debe ser ≥ 1: {config.max_rounds}")
    if config.parse_retries < 0:
        raise ConfigurationError(f"❌ parse_retries debe ser ≥ 0: {config.parse_retries}")
    if config.recall_k < 0:
        raise ConfigurationError(f"❌ recall_k debe ser ≥ 0: {config.recall_k}")
    if not (0.0 < config.top_p <= 1.0):
        raise ConfigurationError(f"❌ top_p debe estar en (0, 1]: {config.top_p}")
    if config.temperature < 0:
        raise ConfigurationError(f"❌ temperature debe ser ≥ 0: {config.temperature}")
    if config.max_tokens is not None and config.max_tokens < 1:
        raise ConfigurationError(f"❌ max_tokens debe ser positivo: {config.max_tokens}")

    if config.composition is not None:
        unknown = set(config.composition) - {"judge", "lay_judge"}
        if unknown:
            raise ConfigurationError(
                f"❌ composition solo admite 'judge' y 'lay_judge', recibido: {sorted(unknown)}"
            )
        if any(count < 0 for count in config.composition.values()):
            raise ConfigurationError("❌ composition no admite cantidades negativas")
        total = sum(config.composition.values())
        if total != config.bench_size - 1:
            raise ConfigurationError(
                f"❌ composition suma {total} miembros pero bench_size - 1 = {config.bench_size - 1}"
            )


def validate_run_config(config: RunConfig) -> None:
    """
    Validar RunConfig completo

    Raises:
        ConfigurationError: Si algún bloque es inválido
    """
    if config.method not in METHODS:
        raise ConfigurationError(
            f"❌ Método desconocido: {config.method}\n"
            f"   Métodos válidos: {', '.join(METHODS)}"
        )
    if config.workers < 1:
        raise ConfigurationError(f"❌ workers debe ser ≥ 1: {config.workers}")
    if config.limit is not None and config.limit < 0:
        raise ConfigurationError(f"❌ limit debe ser ≥ 0: {config.limit}")
    if not (0.0 <= config.failure_threshold_pct <= 100.0):
        raise ConfigurationError(
            f"❌ failure_threshold_pct debe estar entre 0 y 100: {config.failure_threshold_pct}"
        )
    if config.evaluation.max_diff < 1:
        raise ConfigurationError(f"❌ max_diff debe ser ≥ 1: {config.evaluation.max_diff}")
    if config.prompts.transcript_char_budget < 1:
        raise ConfigurationError("❌ transcript_char_budget debe ser ≥ 1")

    validate_dataset_config(config.dataset)
    validate_backend_config(config.backend)
    validate_engine_config(config.engine)
