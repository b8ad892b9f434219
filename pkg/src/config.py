"""
🔧 AgentsBench - Configuración Centralizada

Este módulo centraliza paths, constantes y dataclasses de configuración
del benchmark (dataset, backend LLM, motor del tribunal, prompts,
evaluación y ejecución) para evitar hardcoding en el resto del código.

La configuración efectiva se construye en tres capas:
    1. YAML (config/bench_config.yaml)
    2. Variables de entorno AGENTSBENCH_*
    3. Flags de línea de comandos (scripts/bench_cli.py)
"""

from pathlib import Path
from dataclasses import dataclass, field
from typing import Any, Dict, Final, Optional
import logging
import os

import yaml
from dotenv import load_dotenv

from src.exceptions import ConfigurationError

# Cargar variables de entorno desde .env (API key incluida)
load_dotenv()

logger = logging.getLogger(__name__)

# Directorio raíz del proyecto
PROJECT_ROOT: Final[Path] = Path(__file__).parent.parent

METHODS: Final[tuple] = ("standard", "cot", "ls", "bench")


@dataclass(frozen=True)
class PathConfig:
    """Configuración de rutas del proyecto"""

    CONFIG_DIR: Path = PROJECT_ROOT / "config"
    TEMPLATES_DIR: Path = PROJECT_ROOT / "templates"
    LOGS_DIR: Path = PROJECT_ROOT / "logs"
    RUNS_DIR: Path = PROJECT_ROOT / "runs"

    DEFAULT_TEMPLATES: Path = TEMPLATES_DIR / "default"
    DEFAULT_CONFIG_FILE: Path = CONFIG_DIR / "bench_config.yaml"
    DEFAULT_AGENT_POOL: Path = CONFIG_DIR / "agent_pool.jsonl"

    SYSTEM_LOG: Path = LOGS_DIR / "agentsbench.log"


@dataclass(frozen=True)
class DatasetConfig:
    """Carga y normalización de casos"""

    max_fact_chars: int = 2000
    reject_missing_fields: bool = True
    max_term_months: int = 300


@dataclass(frozen=True)
class BackendConfig:
    """Backend OpenAI-compatible (la API key SOLO viene del entorno)"""

    base_url: str = "https://api.openai.com/v1"
    api_key_env_var: str = "OPENAI_API_KEY"
    max_retries: int = 3
    initial_backoff_ms: int = 500
    request_timeout_ms: int = 60000
    max_in_flight: int = 4


@dataclass(frozen=True)
class EngineConfig:
    """Motor de deliberación del tribunal colegiado"""

    bench_size: int = 3  # incluye al juez presidente
    max_rounds: int = 3
    parse_retries: int = 1
    seed: int = 42
    memory_enabled: bool = False
    recall_k: int = 3
    composition: Optional[Dict[str, int]] = None  # rol -> número de miembros
    presiding_id: Optional[str] = None
    model: str = "gpt-4"
    temperature: float = 0.0
    top_p: float = 1.0
    max_tokens: Optional[int] = None


@dataclass(frozen=True)
class PromptConfig:
    """Plantillas Jinja2 de prompts"""

    template_dir: Optional[Path] = None  # None = plantillas por defecto
    transcript_char_budget: int = 12000


@dataclass(frozen=True)
class EvaluationConfig:
    """Métrica nLog-distance"""

    max_diff: int = 300


@dataclass(frozen=True)
class RunConfig:
    """Configuración completa de una ejecución del benchmark"""

    dataset_path: Optional[Path] = None
    method: str = "bench"
    output_dir: Optional[Path] = None
    agent_pool_path: Path = PathConfig().DEFAULT_AGENT_POOL
    workers: int = 4
    limit: Optional[int] = None
    failure_threshold_pct: float = 10.0
    script_path: Optional[Path] = None
    log_level: str = "INFO"
    log_dir: Path = PathConfig().LOGS_DIR
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)
    engine: EngineConfig = field(default_factory=EngineConfig)
    prompts: PromptConfig = field(default_factory=PromptConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)

    @property
    def model(self) -> str:
        return self.engine.model

    def to_manifest_dict(self) -> Dict[str, Any]:
        """Versión serializable (sin secretos) para manifest.json"""
        def _plain(value: Any) -> Any:
            if isinstance(value, Path):
                return str(value)
            if isinstance(value, dict):
                return {k: _plain(v) for k, v in value.items()}
            return value

        return {
            "dataset_path": _plain(self.dataset_path),
            "method": self.method,
            "output_dir": _plain(self.output_dir),
            "agent_pool_path": _plain(self.agent_pool_path),
            "workers": self.workers,
            "limit": self.limit,
            "failure_threshold_pct": self.failure_threshold_pct,
            "script_path": _plain(self.script_path),
            "dataset": _plain(vars(self.dataset)),
            "backend": _plain(vars(self.backend)),
            "engine": _plain(vars(self.engine)),
            "prompts": _plain(vars(self.prompts)),
            "evaluation": _plain(vars(self.evaluation)),
        }


# Instancias globales
PATHS: Final[PathConfig] = PathConfig()


# ============================================================================
# CARGA DESDE YAML + OVERRIDES
# ============================================================================

# variable de entorno -> ruta dentro del dict de configuración
ENV_OVERRIDES: Final[Dict[str, tuple]] = {
    "AGENTSBENCH_MODEL": ("engine", "model"),
    "AGENTSBENCH_BASE_URL": ("backend", "base_url"),
    "AGENTSBENCH_MAX_ROUNDS": ("engine", "max_rounds"),
    "AGENTSBENCH_BENCH_SIZE": ("engine", "bench_size"),
    "AGENTSBENCH_SEED": ("engine", "seed"),
    "AGENTSBENCH_WORKERS": ("run", "workers"),
    "AGENTSBENCH_MEMORY_ENABLED": ("engine", "memory_enabled"),
    "AGENTSBENCH_MAX_DIFF": ("evaluation", "max_diff"),
    "AGENTSBENCH_LOG_LEVEL": ("general", "log_level"),
}


def _coerce_env_value(raw: str) -> Any:
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    if raw.lstrip("-").isdigit():
        return int(raw)
    return raw


def _set_nested(config: Dict[str, Any], path: tuple, value: Any) -> None:
    current = config
    for key in path[:-1]:
        if current.get(key) is None:
            current[key] = {}
        current = current[key]
    current[path[-1]] = value


def apply_env_overrides(config: Dict[str, Any]) -> Dict[str, Any]:
    """Aplicar overrides AGENTSBENCH_* sobre el dict de configuración"""
    for env_var, config_path in ENV_OVERRIDES.items():
        env_value = os.getenv(env_var)
        if env_value is None:
            continue
        value = _coerce_env_value(env_value)
        _set_nested(config, config_path, value)
        logger.info(f"⚙️ Override desde {env_var}: {'.'.join(config_path)} = {value}")
    return config


def load_config_from_yaml(config_path: Optional[Path] = None) -> Dict[str, Any]:
    """
    Cargar configuración desde archivo YAML y aplicar overrides de entorno

    Args:
        config_path: Ruta al YAML (default: config/bench_config.yaml)

    Returns:
        Dict con secciones general/dataset/backend/engine/prompts/evaluation/run

    Raises:
        ConfigurationError: Si el YAML está mal formado
    """
    config_file = Path(config_path) if config_path else PATHS.DEFAULT_CONFIG_FILE

    if not config_file.exists():
        logger.warning(f"⚠️ Archivo de configuración no encontrado: {config_file} - usando defaults")
        config: Dict[str, Any] = {}
    else:
        try:
            with open(config_file, "r", encoding="utf-8") as f:
                config = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigurationError(f"❌ Error al parsear YAML {config_file}: {e}") from e

        if not isinstance(config, dict):
            raise ConfigurationError(f"❌ El YAML {config_file} debe ser un mapping")
        logger.info(f"✅ Configuración cargada desde: {config_file}")

    return apply_env_overrides(config)


def merge_overrides(config: Dict[str, Any], overrides: Dict[tuple, Any]) -> Dict[str, Any]:
    """Aplicar overrides de CLI (ruta -> valor); los valores None se ignoran"""
    for path, value in overrides.items():
        if value is not None:
            _set_nested(config, path, value)
    return config


def _section(config: Dict[str, Any], name: str) -> Dict[str, Any]:
    section = config.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigurationError(f"❌ La sección '{name}' debe ser un mapping")
    return section


def _build(cls, values: Dict[str, Any], section: str):
    known = set(cls.__dataclass_fields__)
    unknown = set(values) - known
    if unknown:
        raise ConfigurationError(f"❌ Claves desconocidas en '{section}': {sorted(unknown)}")
    return cls(**values)


def build_run_config(config: Dict[str, Any]) -> RunConfig:
    """
    Convertir el dict combinado (YAML + entorno + CLI) en RunConfig validado

    Raises:
        ConfigurationError: Si algún valor es inválido
    """
    # import diferido: validators depende de config
    from src.validators import validate_run_config

    general = _section(config, "general")
    run = dict(_section(config, "run"))
    engine = dict(_section(config, "engine"))
    prompts = dict(_section(config, "prompts"))

    agent_pool = engine.pop("agent_pool", None)
    if prompts.get("template_dir"):
        prompts["template_dir"] = Path(prompts["template_dir"])

    for key in ("dataset_path", "output_dir", "script_path"):
        if run.get(key):
            run[key] = Path(run[key])

    run_config = RunConfig(
        dataset_path=run.get("dataset_path"),
        method=run.get("method", "bench"),
        output_dir=run.get("output_dir"),
        agent_pool_path=Path(agent_pool) if agent_pool else PATHS.DEFAULT_AGENT_POOL,
        workers=int(run.get("workers", 4)),
        limit=run.get("limit"),
        failure_threshold_pct=float(run.get("failure_threshold_pct", 10.0)),
        script_path=run.get("script_path"),
        log_level=str(general.get("log_level", "INFO")),
        log_dir=Path(general.get("log_dir", PATHS.LOGS_DIR)),
        dataset=_build(DatasetConfig, _section(config, "dataset"), "dataset"),
        backend=_build(BackendConfig, _section(config, "backend"), "backend"),
        engine=_build(EngineConfig, engine, "engine"),
        prompts=_build(PromptConfig, prompts, "prompts"),
        evaluation=_build(EvaluationConfig, _section(config, "evaluation"), "evaluation"),
    )

    validate_run_config(run_config)
    return run_config
