"""
⚖️ AgentsBench - CLI del Benchmark

Subcomandos:
    run              Ejecutar un método (standard, cot, ls, bench) sobre un dataset
    score            Recalcular métricas desde las predicciones guardadas
    kappa            Acuerdo entre evaluadores y tasas de calidad
    report           Tabla comparativa modelo × método
    replay           Reproducir un caso con un backend guionizado
    validate         Diagnóstico línea a línea de un dataset
    parse            Extraer la pena (meses) de un texto por stdin
    import-lawbench  Convertir registros LawBench al esquema del benchmark

Uso:
    python scripts/bench_cli.py run --dataset data/cases.jsonl --method bench --output-dir runs/gpt4-bench
    python scripts/bench_cli.py run --dataset data/cases.jsonl --method cot --limit 10
    python scripts/bench_cli.py score --run-dir runs/gpt4-bench
    python scripts/bench_cli.py report runs/gpt4-standard runs/gpt4-bench
"""

import argparse
import dataclasses
import logging
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

# Agregar directorio raíz al path
sys.path.insert(0, str(Path(__file__).parent.parent))

from tqdm import tqdm

from src.bench_engine import (
    STATUS_COMPLETED,
    STATUS_FAILED,
    AgentProfile,
    PrecedentMemory,
    Transcript,
    agent_pool_hash,
    load_agent_pool,
    predict_baseline,
    run_case,
)
from src.config import METHODS, PATHS, RunConfig, build_run_config, load_config_from_yaml, merge_overrides
from src.dataset import Case, import_lawbench_records, load_cases, validate_dataset
from src.evaluation import load_annotations, quality_report, score_case, summarize_run
from src.exceptions import (
    BackendError,
    BenchError,
    CaseFailedError,
    RunArtifactError,
    format_error_message,
    is_critical_error,
)
from src.llm_backend import CompletionBackend, OpenAIChatBackend, Script, load_script, make_scripted_backend, script_hash
from src.log_setup import detach_run_log, setup_bench_logging
from src.prompts import PromptTemplateSet, default_templates
from src.reporting import REPORT_FORMATS, render_report
from src.run_store import RunDirectory
from src.term_parser import extract_prison_term_months
from src.validators import validate_directory

logger = logging.getLogger("bench_cli")

QUALITY_FIELDS = {"legality": "legality_pct", "logicality": "logicality_pct", "morality": "morality_pct"}


# ============================================================================
# CONFIGURACIÓN
# ============================================================================

def _run_overrides(args: argparse.Namespace) -> Dict[tuple, Any]:
    """Flags de CLI → rutas dentro del dict de configuración"""
    return {
        ("run", "dataset_path"): args.dataset,
        ("run", "method"): args.method,
        ("run", "output_dir"): args.output_dir,
        ("run", "workers"): args.workers,
        ("run", "limit"): args.limit,
        ("run", "script_path"): args.script,
        ("run", "failure_threshold_pct"): args.failure_threshold,
        ("engine", "model"): args.model,
        ("engine", "seed"): args.seed,
        ("engine", "max_rounds"): args.max_rounds,
        ("engine", "bench_size"): args.bench_size,
        ("engine", "memory_enabled"): True if args.memory else None,
        ("engine", "agent_pool"): args.agent_pool,
        ("prompts", "template_dir"): args.template_dir,
        ("backend", "base_url"): args.base_url,
        ("evaluation", "max_diff"): args.max_diff,
        ("general", "log_level"): args.log_level,
        ("general", "log_dir"): args.log_dir,
    }


def _load_run_config(config_path: Optional[str], overrides: Dict[tuple, Any]) -> RunConfig:
    raw = load_config_from_yaml(Path(config_path) if config_path else None)
    return build_run_config(merge_overrides(raw, overrides))


def _templates_for(run_config: RunConfig) -> PromptTemplateSet:
    if run_config.prompts.template_dir is not None:
        return PromptTemplateSet(run_config.prompts.template_dir)
    return default_templates()


def _backend_for_case(
    case: Case, script: Optional[Script], shared: Optional[CompletionBackend]
) -> CompletionBackend:
    if isinstance(script, dict):
        return make_scripted_backend(script.get(case.id, []))
    return shared


# ============================================================================
# RUN
# ============================================================================

def _bench_record(case: Case, transcript: Transcript) -> Dict[str, Any]:
    completed = transcript.status == STATUS_COMPLETED and transcript.final is not None
    return {
        "case_id": case.id,
        "method": "bench",
        "status": transcript.status,
        "gold_term_months": case.gold_term_months,
        "predicted_months": transcript.final.term_months if completed else None,
        "error": transcript.error,
        "transcript": transcript.to_dict(),
    }


def _process_case(
    case: Case,
    run_config: RunConfig,
    backend: CompletionBackend,
    pool: Sequence[AgentProfile],
    memory: Optional[PrecedentMemory],
    templates: PromptTemplateSet,
    run_dir: RunDirectory,
) -> Dict[str, Any]:
    """Un caso de principio a fin; escribe su propio cases/<id>.json"""
    if run_config.method == "bench":
        try:
            transcript = run_case(
                case,
                pool,
                backend,
                run_config.engine,
                memory,
                templates,
                run_config.prompts.transcript_char_budget,
            )
        except CaseFailedError as e:
            if e.transcript is None:
                raise
            transcript = e.transcript
        record = _bench_record(case, transcript)
    else:
        try:
            prediction = predict_baseline(case, run_config.method, backend, run_config.engine, templates)
            record = {
                **prediction.to_dict(),
                "status": STATUS_COMPLETED,
                "gold_term_months": case.gold_term_months,
                "error": None,
            }
        except BackendError as e:
            if is_critical_error(e):
                raise
            logger.error(f"❌ Caso {case.id} fallido: {e}", extra={"case_id": case.id})
            record = {
                "case_id": case.id,
                "method": run_config.method,
                "raw_output": None,
                "predicted_months": None,
                "status": STATUS_FAILED,
                "gold_term_months": case.gold_term_months,
                "error": f"{type(e).__name__}: {e}",
            }

    run_dir.save_case(record)
    return record


def _score_records(records: Sequence[Dict[str, Any]], max_diff: int) -> List:
    results = []
    for record in records:
        predicted = record.get("predicted_months") if record.get("status") == STATUS_COMPLETED else None
        results.append(score_case(record["case_id"], predicted, int(record["gold_term_months"]), max_diff))
    return results


def cmd_run(args: argparse.Namespace) -> int:
    """
    Ejecutar un método sobre el dataset y dejar el run en disco

    Returns:
        0 si todo fue bien; 1 ante error de configuración, error crítico
        o más casos fallidos que failure_threshold_pct
    """
    run_config = _load_run_config(args.config, _run_overrides(args))
    if run_config.dataset_path is None:
        print("❌ Falta --dataset (o run.dataset_path en el YAML)")
        return 1

    output_dir = run_config.output_dir or PATHS.RUNS_DIR / f"{run_config.model}-{run_config.method}"
    validate_directory(output_dir, create_if_missing=True)
    setup_bench_logging(run_config.log_dir, run_config.log_level, run_dir=output_dir)

    try:
        return _execute_run(run_config, Path(output_dir))
    finally:
        detach_run_log()


def _execute_run(run_config: RunConfig, output_dir: Path) -> int:
    run_dir = RunDirectory(output_dir, create=True)
    templates = _templates_for(run_config)

    cases = load_cases(run_config.dataset_path, run_config.dataset)
    if run_config.limit is not None:
        cases = cases[: run_config.limit]

    pool: List[AgentProfile] = []
    if run_config.method == "bench":
        pool = load_agent_pool(run_config.agent_pool_path)

    script: Optional[Script] = None
    if run_config.script_path is not None:
        script = load_script(run_config.script_path)
        if isinstance(script, list) and run_config.workers != 1:
            logger.info("📜 Guion compartido: workers = 1 para conservar el orden")
            run_config = dataclasses.replace(run_config, workers=1)

    manifest = run_dir.build_manifest(
        run_config.to_manifest_dict(),
        templates.template_hashes(),
        script_hash(script) if script is not None else None,
        agent_pool_hash(pool) if pool else None,
    )
    run_dir.write_manifest(manifest)

    done = run_dir.completed_case_ids()
    pending = [case for case in cases if case.id not in done]
    if isinstance(script, list) and done and pending:
        raise RunArtifactError(
            f"❌ Un guion compartido (lista JSON) no se puede reanudar: volvería a empezar desde la respuesta 0\n"
            f"   Usa un guion por caso (objeto JSON id → respuestas) o un --output-dir nuevo"
        )
    if done:
        logger.info(f"⏭️ {len(cases) - len(pending)} casos ya completados se omiten")

    memory = None
    if run_config.method == "bench" and run_config.engine.memory_enabled:
        memory = run_dir.load_memory()

    live: Optional[OpenAIChatBackend] = None
    shared: Optional[CompletionBackend] = None
    if script is None:
        if pending:
            live = OpenAIChatBackend(run_config.backend)
            shared = live
    elif isinstance(script, list):
        shared = make_scripted_backend(script)

    logger.info(
        f"🚀 Run {run_config.method} / {run_config.model}: {len(pending)} casos pendientes, "
        f"{run_config.workers} workers"
    )

    try:
        with ThreadPoolExecutor(max_workers=run_config.workers) as executor:
            futures = {
                executor.submit(
                    _process_case,
                    case,
                    run_config,
                    _backend_for_case(case, script, shared),
                    pool,
                    memory,
                    templates,
                    run_dir,
                ): case.id
                for case in pending
            }
            for future in tqdm(as_completed(futures), total=len(futures), desc="⚖️ Casos", unit="caso"):
                future.result()
    finally:
        if live is not None:
            live.close()
        if memory is not None:
            run_dir.save_memory(memory)

    records = list(run_dir.iter_case_records())
    if not records:
        logger.warning("⚠️ El run no tiene casos")
        return 0

    results = _score_records(records, run_config.evaluation.max_diff)
    failed = sum(1 for r in records if r.get("status") == STATUS_FAILED)
    run_dir.write_metrics(results)
    summary = summarize_run(results, run_config.method, run_config.model, failed_count=failed)
    run_dir.write_summary(summary)

    print(f"📊 Performance: {summary.mean_performance_pct:.2f}% sobre {summary.case_count} casos")
    print(f"   Sin pena interpretable: {summary.unparsed_count} | Fallidos: {failed}")
    print(f"📂 Run guardado en: {run_dir.path}")

    failed_pct = failed / len(records) * 100.0
    if failed_pct > run_config.failure_threshold_pct:
        logger.error(
            f"❌ {failed_pct:.1f}% de casos fallidos (umbral {run_config.failure_threshold_pct}%)"
        )
        return 1
    return 0


# ============================================================================
# SCORE / KAPPA / REPORT
# ============================================================================

def cmd_score(args: argparse.Namespace) -> int:
    """Recalcular métricas; solo escribe scores.json"""
    run_dir = RunDirectory(args.run_dir)
    max_diff = args.max_diff
    if max_diff is None:
        try:
            max_diff = run_dir.read_manifest()["config"]["evaluation"]["max_diff"]
        except (BenchError, KeyError):
            max_diff = 300

    records = list(run_dir.iter_case_records())
    if not records:
        print(f"❌ No hay casos en {run_dir.cases_dir}")
        return 1

    results = _score_records(records, max_diff)
    summary = summarize_run(
        results,
        method=str(records[0].get("method", "")),
        model="",
        failed_count=sum(1 for r in records if r.get("status") == STATUS_FAILED),
    )
    run_dir.write_scores({
        "max_diff": max_diff,
        "mean_performance_pct": summary.mean_performance_pct,
        "case_count": summary.case_count,
        "unparsed_count": summary.unparsed_count,
        "failed_count": summary.failed_count,
        "cases": [r.to_dict() for r in results],
    })

    print(f"📊 Performance: {summary.mean_performance_pct:.2f}% ({summary.case_count} casos, max_diff={max_diff})")
    return 0


def cmd_kappa(args: argparse.Namespace) -> int:
    annotations = load_annotations(args.annotations)
    report = quality_report(annotations)

    print(f"👥 Evaluadores: {', '.join(report['raters'])} | Casos: {report['case_count']}")
    for criterion in QUALITY_FIELDS:
        print(
            f"   {criterion:<11} κ = {report['kappa'][criterion]:.4f}   "
            f"tasa = {report['rates'][criterion]:.2f}%"
        )

    if args.run_dir:
        RunDirectory(args.run_dir).write_quality(report)
        print(f"💾 quality.json escrito en {args.run_dir}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    summaries = []
    for path in args.run_dirs:
        run_dir = RunDirectory(path)
        summary = run_dir.read_summary()
        quality = run_dir.read_quality()
        if quality is not None:
            rates = quality.get("rates", {})
            summary = dataclasses.replace(
                summary, **{field: rates.get(criterion) for criterion, field in QUALITY_FIELDS.items()}
            )
        summaries.append(summary)

    text = render_report(summaries, args.format)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"💾 Reporte guardado en: {args.output}")
    else:
        print(text, end="")
    return 0


# ============================================================================
# REPLAY / VALIDATE / PARSE / IMPORT
# ============================================================================

def _print_transcript(transcript: Transcript) -> None:
    print("=" * 70)
    print(f"📜 Caso {transcript.case_id}")
    print("=" * 70)
    print(f"👥 Tribunal: {', '.join(a.id for a in transcript.bench.agents)}")

    if transcript.initial is not None:
        print("\n📝 Opiniones iniciales:")
        for opinion in transcript.initial.opinions:
            print(f"   {opinion.agent_id}: {opinion.term_months} months")

    for round_ in transcript.rounds:
        print(f"\n🗣️ Ronda {round_.index}")
        for agent_id, text in round_.statements:
            print(f"   【{agent_id}】 {text.strip()}")
        if round_.verdict is not None:
            print(f"   ⚖️ Consenso: {'sí' if round_.verdict.consensus else 'no'}")
        if round_.updated_opinions is not None:
            terms = ", ".join(f"{o.agent_id}={o.term_months}" for o in round_.updated_opinions.opinions)
            print(f"   🔄 Opiniones actualizadas: {terms}")

    if transcript.closing_summary:
        print(f"\n📋 Resumen:\n{transcript.closing_summary.strip()}")
    print("=" * 70)


def cmd_replay(args: argparse.Namespace) -> int:
    run_config = _load_run_config(args.config, {("engine", "agent_pool"): args.agent_pool})
    cases = load_cases(args.case, run_config.dataset)
    if args.case_id:
        matches = [c for c in cases if c.id == args.case_id]
        if not matches:
            print(f"❌ Caso {args.case_id} no está en {args.case}")
            return 1
        case = matches[0]
    elif cases:
        case = cases[0]
    else:
        print(f"❌ {args.case} no contiene casos")
        return 1

    script = load_script(args.script)
    backend = _backend_for_case(case, script, make_scripted_backend(script) if isinstance(script, list) else None)
    pool = load_agent_pool(run_config.agent_pool_path)

    try:
        transcript = run_case(
            case,
            pool,
            backend,
            run_config.engine,
            None,
            _templates_for(run_config),
            run_config.prompts.transcript_char_budget,
        )
    except CaseFailedError as e:
        if e.transcript is not None:
            _print_transcript(e.transcript)
        print(f"❌ Replay fallido: {e}")
        return 1

    _print_transcript(transcript)
    print(
        f"📜 Pena final: {transcript.final.term_months} months | "
        f"Rondas: {transcript.final.rounds_used} | "
        f"Consenso: {'sí' if transcript.final.consensus_reached else 'no'}"
    )
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    report = validate_dataset(args.dataset)
    for error in report.errors:
        print(f"   ❌ {error}")
    status = "✅" if report.ok else "⚠️"
    print(f"{status} {report.valid_count} casos válidos, {len(report.errors)} con errores")
    return 0 if report.ok else 1


def cmd_parse(args: argparse.Namespace) -> int:
    text = args.text if args.text is not None else sys.stdin.read()
    months = extract_prison_term_months(text)
    if months is None:
        print("None")
        return 1
    print(months)
    return 0


def cmd_import_lawbench(args: argparse.Namespace) -> int:
    count = import_lawbench_records(args.src, args.dst, id_prefix=args.id_prefix)
    print(f"✅ {count} casos escritos en {args.dst}")
    return 0


# ============================================================================
# MAIN
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='⚖️ AgentsBench - Benchmark de predicción de penas',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Ejemplos de uso:

  # Tribunal colegiado sobre 3 casos con un guion (sin API)
  python scripts/bench_cli.py run --dataset tests/fixtures/cases.jsonl --method bench \\
      --script tests/fixtures/scripts_by_case.json --limit 3 --output-dir runs/demo

  # Baseline chain-of-thought con el modelo configurado
  python scripts/bench_cli.py run --dataset data/cases.jsonl --method cot --output-dir runs/gpt4-cot

  # Tabla comparativa en CSV
  python scripts/bench_cli.py report runs/gpt4-cot runs/gpt4-bench --format delimited

  # Extraer la pena de un texto
  echo "判处有期徒刑三年六个月" | python scripts/bench_cli.py parse
        """
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # run
    run = subparsers.add_parser("run", help="Ejecutar un método sobre un dataset")
    run.add_argument('--config', type=str, default=None, help='YAML de configuración (default: config/bench_config.yaml)')
    run.add_argument('--dataset', type=str, default=None, help='Dataset JSONL')
    run.add_argument('--method', type=str, choices=METHODS, default=None, help='Método a evaluar')
    run.add_argument('--model', type=str, default=None, help='Nombre del modelo')
    run.add_argument('--output-dir', type=str, default=None, help='Directorio del run (se reanuda si existe)')
    run.add_argument('--workers', type=int, default=None, help='Casos en paralelo')
    run.add_argument('--limit', type=int, default=None, help='Procesar solo los primeros N casos')
    run.add_argument('--seed', type=int, default=None, help='Semilla de selección del tribunal')
    run.add_argument('--max-rounds', type=int, default=None, help='Máximo de rondas de deliberación')
    run.add_argument('--bench-size', type=int, default=None, help='Tamaño del tribunal (incluye presidente)')
    run.add_argument('--memory', action='store_true', help='Activar la memoria de precedentes')
    run.add_argument('--agent-pool', type=str, default=None, help='Pool de agentes JSONL')
    run.add_argument('--template-dir', type=str, default=None, help='Plantillas propias (fallback a default/)')
    run.add_argument('--script', type=str, default=None, help='Guion JSON: usa el backend guionizado')
    run.add_argument('--base-url', type=str, default=None, help='URL base del endpoint OpenAI-compatible')
    run.add_argument('--max-diff', type=int, default=None, help='max_diff de nLog-distance')
    run.add_argument('--failure-threshold', type=float, default=None, help='%% máximo de casos fallidos')
    run.add_argument('--log-level', type=str, default=None, help='Nivel de logging')
    run.add_argument('--log-dir', type=str, default=None, help='Directorio de agentsbench.log')
    run.set_defaults(func=cmd_run)

    # score
    score = subparsers.add_parser("score", help="Recalcular métricas de un run")
    score.add_argument('--run-dir', type=str, required=True, help='Directorio del run')
    score.add_argument('--max-diff', type=int, default=None, help='max_diff (default: el del manifest)')
    score.set_defaults(func=cmd_score)

    # kappa
    kappa = subparsers.add_parser("kappa", help="Cohen's kappa y tasas de calidad")
    kappa.add_argument('annotations', type=str, help='CSV case_id,rater_id,legality,logicality,morality')
    kappa.add_argument('--run-dir', type=str, default=None, help='Guardar quality.json en este run')
    kappa.set_defaults(func=cmd_kappa)

    # report
    report = subparsers.add_parser("report", help="Tabla comparativa de runs")
    report.add_argument('run_dirs', nargs='+', help='Directorios de run')
    report.add_argument('--format', type=str, choices=REPORT_FORMATS, default='table-text', help='Formato de salida')
    report.add_argument('--output', type=str, default=None, help='Archivo de salida (default: stdout)')
    report.set_defaults(func=cmd_report)

    # replay
    replay = subparsers.add_parser("replay", help="Reproducir un caso con un guion")
    replay.add_argument('--script', type=str, required=True, help='Guion JSON')
    replay.add_argument('--case', type=str, required=True, help='JSONL con el caso')
    replay.add_argument('--case-id', type=str, default=None, help='Id del caso (default: el primero)')
    replay.add_argument('--agent-pool', type=str, default=None, help='Pool de agentes JSONL')
    replay.add_argument('--config', type=str, default=None, help='YAML de configuración')
    replay.set_defaults(func=cmd_replay)

    # validate
    validate = subparsers.add_parser("validate", help="Validar un dataset")
    validate.add_argument('dataset', type=str, help='Dataset JSONL')
    validate.set_defaults(func=cmd_validate)

    # parse
    parse = subparsers.add_parser("parse", help="Extraer la pena de un texto (stdin)")
    parse.add_argument('--text', type=str, default=None, help='Texto (default: stdin)')
    parse.set_defaults(func=cmd_parse)

    # import-lawbench
    lawbench = subparsers.add_parser("import-lawbench", help="Importar registros LawBench")
    lawbench.add_argument('src', type=str, help='JSONL o JSON de LawBench')
    lawbench.add_argument('dst', type=str, help='JSONL de salida')
    lawbench.add_argument('--id-prefix', type=str, default='lawbench', help='Prefijo de ids generados')
    lawbench.set_defaults(func=cmd_import_lawbench)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BenchError, FileNotFoundError) as e:
        print(format_error_message(e, context=args.command))
        return 1


if __name__ == '__main__':
    sys.exit(main())
