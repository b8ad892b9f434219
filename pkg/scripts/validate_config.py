"""
Script para validar la configuración YAML del benchmark

Construye el RunConfig completo (YAML + variables AGENTSBENCH_*), muestra
la configuración efectiva y comprueba plantillas y pool de agentes.
La API key nunca se imprime: solo si la variable está definida.

Uso:
    python scripts/validate_config.py
    python scripts/validate_config.py --config config/bench_config_test.yaml
"""

import argparse
import os
import sys
from pathlib import Path

# Agregar directorio raíz al path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.bench_engine import load_agent_pool
from src.config import ENV_OVERRIDES, PATHS, build_run_config, load_config_from_yaml
from src.exceptions import BenchError
from src.prompts import PromptTemplateSet

REQUIRED_SECTIONS = ['general', 'dataset', 'backend', 'engine', 'prompts', 'evaluation', 'run']


def validate_config(config_path: Path) -> bool:
    """Validar archivo de configuración YAML"""

    print("=" * 70)
    print("🔍 Validando configuración del benchmark")
    print("=" * 70)
    print()

    if not config_path.exists():
        print(f"❌ Archivo no encontrado: {config_path}")
        return False

    try:
        raw = load_config_from_yaml(config_path)
        print(f"✅ Archivo YAML válido: {config_path}")
        print()

        print("📋 Validando secciones...")
        for section in REQUIRED_SECTIONS:
            if section in raw:
                print(f"   ✅ {section}")
            else:
                print(f"   ⚪ {section} - no definida (se usan defaults)")

        config = build_run_config(raw)

        print()
        print("🎯 Configuración efectiva:")
        print("-" * 70)

        print(f"\n⚙️ GENERAL:")
        print(f"   Log level: {config.log_level}")
        print(f"   Log dir: {config.log_dir}")

        print(f"\n🔌 BACKEND:")
        print(f"   URL: {config.backend.base_url}")
        key_set = bool(os.getenv(config.backend.api_key_env_var))
        print(f"   API key: {config.backend.api_key_env_var} {'✅ definida' if key_set else '⚪ (no definida)'}")
        print(f"   Reintentos: {config.backend.max_retries} (backoff inicial {config.backend.initial_backoff_ms} ms)")
        print(f"   Timeout: {config.backend.request_timeout_ms} ms | En vuelo: {config.backend.max_in_flight}")

        engine = config.engine
        print(f"\n⚖️ MOTOR:")
        print(f"   Modelo: {engine.model} (temperature={engine.temperature}, top_p={engine.top_p})")
        print(f"   Tribunal: {engine.bench_size} agentes | Composición: {engine.composition or 'libre'}")
        print(f"   Rondas máx.: {engine.max_rounds} | Reintentos de parsing: {engine.parse_retries}")
        print(f"   Semilla: {engine.seed} | Memoria: {engine.memory_enabled} (k={engine.recall_k})")

        pool = load_agent_pool(config.agent_pool_path)
        print(f"   Pool: {config.agent_pool_path} ({len(pool)} agentes)")

        templates = PromptTemplateSet(config.prompts.template_dir) if config.prompts.template_dir else PromptTemplateSet()
        print(f"\n💬 PLANTILLAS:")
        print(f"   Directorio: {config.prompts.template_dir or PATHS.DEFAULT_TEMPLATES}")
        print(f"   Etapas validadas: {len(templates.template_hashes())}")
        print(f"   Presupuesto de historial: {config.prompts.transcript_char_budget} caracteres")

        print(f"\n🚀 RUN:")
        print(f"   Método: {config.method} | Workers: {config.workers}")
        print(f"   Umbral de fallos: {config.failure_threshold_pct}%")
        print(f"   max_diff: {config.evaluation.max_diff}")

        print(f"\n🌐 VARIABLES DE ENTORNO:")
        for var in ENV_OVERRIDES:
            value = os.getenv(var)
            if value:
                print(f"   ✅ {var} = {value}")
            else:
                print(f"   ⚪ {var} = (no definida)")

        print()
        print("=" * 70)
        print("✅ Validación completada - Configuración válida")
        print("=" * 70)

        return True

    except (BenchError, FileNotFoundError) as e:
        print(f"❌ Configuración inválida: {e}")
        return False


def main() -> int:
    parser = argparse.ArgumentParser(
        description='🔍 Validar la configuración de AgentsBench',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Ejemplos de uso:

  # Configuración de producción
  python scripts/validate_config.py

  # Configuración de tests
  python scripts/validate_config.py --config config/bench_config_test.yaml
        """
    )
    parser.add_argument('--config', type=str, default=str(PATHS.DEFAULT_CONFIG_FILE), help='YAML a validar')
    args = parser.parse_args()

    return 0 if validate_config(Path(args.config)) else 1


if __name__ == "__main__":
    sys.exit(main())
