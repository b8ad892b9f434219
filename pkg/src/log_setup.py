"""
📝 AgentsBench - Configuración de Logging

Consola + archivo del sistema (logs/agentsbench.log) y, por ejecución,
un log estructurado JSON-lines (run.log.jsonl) dentro del directorio del run.
"""

import logging
from pathlib import Path
from typing import Optional, Union

from pythonjsonlogger.json import JsonFormatter

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
RUN_LOG_NAME = "run.log.jsonl"

# marca para reconocer handlers instalados por este módulo
_HANDLER_TAG = "_agentsbench_handler"


def _tag(handler: logging.Handler, kind: str) -> logging.Handler:
    setattr(handler, _HANDLER_TAG, kind)
    return handler


def _remove_tagged(logger: logging.Logger, kind: str) -> None:
    for handler in list(logger.handlers):
        if getattr(handler, _HANDLER_TAG, None) == kind:
            logger.removeHandler(handler)
            handler.close()


def setup_bench_logging(
    log_dir: Union[str, Path] = "logs",
    level: Union[str, int] = "INFO",
    run_dir: Optional[Path] = None,
) -> logging.Logger:
    """
    Configurar sistema de logging del benchmark

    Llamadas repetidas reemplazan los handlers previos (no se duplican
    líneas en consola al ejecutar varios subcomandos en el mismo proceso).

    Args:
        log_dir: Directorio para agentsbench.log
        level: Nivel de logging (INFO, DEBUG...)
        run_dir: Directorio del run; si se indica, añade run.log.jsonl

    Returns:
        Logger raíz configurado
    """
    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)

    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    root = logging.getLogger()
    root.setLevel(level)

    for kind in ("console", "file", "run"):
        _remove_tagged(root, kind)

    formatter = logging.Formatter(LOG_FORMAT, DATE_FORMAT)

    # Handler para archivo
    file_handler = logging.FileHandler(log_dir / "agentsbench.log", encoding="utf-8")
    file_handler.setLevel(level)
    file_handler.setFormatter(formatter)
    root.addHandler(_tag(file_handler, "file"))

    # Handler para consola
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    root.addHandler(_tag(console_handler, "console"))

    if run_dir is not None:
        attach_run_log(run_dir, level)

    # httpx registra cada petición en INFO
    logging.getLogger("httpx").setLevel(logging.WARNING)

    return root


def attach_run_log(run_dir: Path, level: Union[str, int] = logging.INFO) -> logging.Handler:
    """
    Añadir (o reemplazar) el handler JSON-lines del directorio de ejecución

    Cada registro lleva timestamp, nivel, logger y mensaje; los campos
    pasados vía ``extra`` (case_id, agent_id, ...) se serializan también.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    root = logging.getLogger()
    _remove_tagged(root, "run")

    handler = logging.FileHandler(run_dir / RUN_LOG_NAME, encoding="utf-8")
    handler.setLevel(level)
    handler.setFormatter(
        JsonFormatter(
            "%(asctime)s %(levelname)s %(name)s %(message)s",
            rename_fields={"levelname": "level", "name": "logger"},
            json_ensure_ascii=False,
        )
    )
    root.addHandler(_tag(handler, "run"))
    return handler


def detach_run_log() -> None:
    """Cerrar el handler JSON-lines del run actual"""
    _remove_tagged(logging.getLogger(), "run")
