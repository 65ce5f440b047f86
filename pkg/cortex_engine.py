"""
Command-line entry point of the orchestration framework.

- `run`: Executes one task spec (modular or monolithic pipeline), persists the
  run record under <out>/runs/<run_id>.json and its artifacts under
  <out>/out/<run_id>/, and prints a run summary.
- `bench`: Executes every (spec, pipeline) pair of a suite file and writes the
  benchmark report (report.txt / report.json, optionally comparison charts).
- `report`: Regenerates a report from persisted run records, optionally
  merging survey means.

Exit statuses: 0 success, 1 run failure, 2 usage or configuration error.
"""
import glob
import json
import logging
import os
import sys
from dataclasses import dataclass, fields, replace
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Tuple

import click
from dotenv import dotenv_values

from agents.backends import build_backend
from comms.blackboard import Blackboard
from core.exceptions import ConfigError, CortexError
from core.logging_config import RunEventLogger, setup_logging
from core.model import PipelineMode, PipelineRun, TaskSpec, load_run, load_task_spec, save_run
from evaluation.charts import render_accuracy_chart, render_comparison_chart, render_survey_chart
from evaluation.metrics import BenchRow, accuracy, bench_row, development_time
from evaluation.report import bench_report, write_report
from evaluation.survey import ingest_survey, load_survey, survey_by_pipeline
from integration.integrator import write_outputs
from load_cfg import (
    CORTEXC_AGENT_POOL,
    CORTEXC_BACKEND,
    CORTEXC_CONCURRENCY,
    CORTEXC_ENDPOINT,
    CORTEXC_MAX_ATTEMPTS,
    CORTEXC_MOCK_LATENCY_MS,
    CORTEXC_MODEL,
    CORTEXC_SEED,
    CORTEXC_TIMEOUT_MS,
    LOG_DIRECTORY,
    WORKING_DIRECTORY,
    get_backend_config,
)
from orchestrator.load_balancer import parse_agent_pool
from orchestrator.pipeline import Orchestrator, OrchestratorConfig

# --- Logging Configuration ---
setup_logging('cortex_engine.log', LOG_DIRECTORY)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUN_FAILED = 1
EXIT_USAGE = 2

SEED_MASK = (1 << 64) - 1

# Bad input files or settings; mapped to exit status 2.
# RecursionError: json.load on pathologically nested input.
USAGE_ERRORS = (OSError, ValueError, KeyError, TypeError, AttributeError, RecursionError, CortexError)


@dataclass(frozen=True)
class CliConfig:
    """Merged view of defaults (environment), the config file and command-line flags."""
    backend: str = CORTEXC_BACKEND
    endpoint: str = CORTEXC_ENDPOINT
    model: str = CORTEXC_MODEL
    seed: int = CORTEXC_SEED
    concurrency: int = CORTEXC_CONCURRENCY
    max_attempts: int = CORTEXC_MAX_ATTEMPTS
    out: str = WORKING_DIRECTORY
    mode: Optional[str] = None
    mock_latency_ms: float = CORTEXC_MOCK_LATENCY_MS
    agent_pool: str = CORTEXC_AGENT_POOL
    timeout_ms: int = CORTEXC_TIMEOUT_MS


_CONVERTERS = {"seed": int, "concurrency": int, "max_attempts": int, "timeout_ms": int, "mock_latency_ms": float}


def _convert(key: str, value: Any) -> Any:
    converter = _CONVERTERS.get(key, str)
    try:
        return converter(value)
    except (TypeError, ValueError):
        raise ConfigError(f"Invalid value for '{key}': {value!r}")


def load_cli_config(config_path: Optional[str] = None, flags: Optional[Dict[str, Any]] = None) -> CliConfig:
    """
    Builds the CLI configuration. Flags override config-file values, which
    override the environment defaults from load_cfg.

    Raises:
        ConfigError: unreadable config file, unknown key or invalid value.
    """
    known = {f.name for f in fields(CliConfig)}
    merged: Dict[str, Any] = {}
    if config_path:
        if not os.path.isfile(config_path):
            raise ConfigError(f"Config file not found: {config_path}")
        for raw_key, value in dotenv_values(config_path).items():
            key = raw_key.strip().lower().replace('-', '_')
            if key not in known:
                raise ConfigError(f"Unknown config key '{raw_key}' in {config_path}")
            if value is not None:
                merged[key] = _convert(key, value)
    for key, value in (flags or {}).items():
        if value is not None:
            merged[key] = _convert(key, value)

    config = CliConfig(**merged)
    if config.mode is not None and config.mode not in {m.value for m in PipelineMode}:
        raise ConfigError(f"Invalid mode '{config.mode}'. Use 'modular' or 'monolithic'.")
    return replace(config, seed=config.seed & SEED_MASK)


def parse_failures(values) -> Dict[str, int]:
    """Parses '--fail TASK=N' options (task id or task kind) into a failure plan."""
    failure_plan = {}
    for item in values or ():
        if '=' not in item:
            raise click.BadParameter("Failure plan entries must be in TASK=N format.", param_hint="--fail")
        key, count = item.split('=', 1)
        try:
            failure_plan[key.strip()] = int(count)
        except ValueError:
            raise click.BadParameter(f"Failure count for '{key}' must be an integer.", param_hint="--fail")
    return failure_plan


def default_run_id(spec_id: str, seed: int, suffix: str = "") -> str:
    timestamp = datetime.now(timezone.utc).strftime('%Y%m%dT%H%M%SZ')
    middle = f"-{suffix}" if suffix else ""
    return f"{spec_id}{middle}-{timestamp}-{seed & 0xffff:04x}"


def execute_spec(spec: TaskSpec, config: CliConfig, run_id: str, failure_plan: Optional[Dict[str, int]] = None,
                 events: Optional[RunEventLogger] = None, dump_board: bool = False) -> Tuple[PipelineRun, str]:
    """
    Runs one spec with the configured backend and pool, then persists the run
    record and its artifacts. Returns the run and the path of its record.

    Raises:
        ConfigError: invalid backend, pool or orchestrator settings.
    """
    backend_config = get_backend_config(
        kind=config.backend, endpoint_url=config.endpoint, model_name=config.model, seed=config.seed,
        timeout_ms=config.timeout_ms, mock_latency_ms=config.mock_latency_ms, failure_plan=failure_plan,
    )
    orchestrator_config = OrchestratorConfig(
        concurrency_limit=config.concurrency, max_attempts=config.max_attempts,
        agent_pool=tuple(parse_agent_pool(config.agent_pool)),
    )
    board = Blackboard()
    orchestrator = Orchestrator(orchestrator_config, build_backend(backend_config), board=board, events=events)
    run = orchestrator.run_pipeline(spec, run_id, seed=config.seed)

    record_path = save_run(run, os.path.join(config.out, 'runs'))
    write_outputs(run, os.path.join(config.out, 'out'))
    if dump_board:
        board.dump(os.path.join(config.out, 'out', run.run_id, 'blackboard.json'))
    return run, record_path


def _usage_error(message: str):
    click.echo(f"Error: {message}", err=True)
    sys.exit(EXIT_USAGE)


def _config_options(func):
    """Options shared by every command that executes runs."""
    options = [
        click.option('--config', 'config_path', default=None, help='Path to a key=value config file.'),
        click.option('--backend', type=click.Choice(['mock', 'http']), default=None, help='Generation backend.'),
        click.option('--endpoint', default=None, help='Chat-completion endpoint URL (http backend).'),
        click.option('--model', default=None, help='Model name sent to the backend.'),
        click.option('--seed', type=int, default=None, help='Seed for the mock backend.'),
        click.option('--concurrency', type=int, default=None, help='Maximum number of concurrently running tasks.'),
        click.option('--max-attempts', type=int, default=None, help='Attempts per task before it fails.'),
        click.option('--out', default=None, help='Output directory (runs/ and out/ are created inside).'),
        click.option('--mock-latency-ms', type=float, default=None, help='Simulated latency of the mock backend.'),
        click.option('--agent-pool', default=None, help="Agent pool, e.g. 'pfc:Prefrontal:1,mot:Motor:2'."),
        click.option('--verbose', '-v', is_flag=True, default=False, help='Echo log records to stderr.'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _flags(**kwargs) -> Dict[str, Any]:
    return {k: v for k, v in kwargs.items() if v is not None}


@click.group()
def cli():
    """CLI for modular multi-agent code generation runs and benchmarks."""
    pass


@cli.command(name='run')
@click.argument('spec_path')
@_config_options
@click.option('--mode', type=click.Choice([m.value for m in PipelineMode]), default=None, help='Override the pipeline mode of the spec.')
@click.option('--run-id', default=None, help='Run id. Defaults to <spec_id>-<UTC timestamp>-<4 hex of seed>.')
@click.option('--fail', 'failures', multiple=True, help='Scripted mock failures, e.g. --fail implement=3 or --fail m1=2.')
@click.option('--events', 'events_path', default=None, help='Write the run-event log (JSON lines) to this file.')
@click.option('--dump-board/--no-dump-board', default=False, help='Write the final blackboard to out/<run_id>/blackboard.json.')
def cmd_run(spec_path, config_path, backend, endpoint, model, seed, concurrency, max_attempts, out,
            mock_latency_ms, agent_pool, verbose, mode, run_id, failures, events_path, dump_board):
    """Runs one task spec and persists the run record and artifacts."""
    if verbose:
        setup_logging('cortex_engine.log', LOG_DIRECTORY, console=True)
    failure_plan = parse_failures(failures)
    events = None
    try:
        config = load_cli_config(config_path, _flags(
            backend=backend, endpoint=endpoint, model=model, seed=seed, concurrency=concurrency,
            max_attempts=max_attempts, out=out, mode=mode, mock_latency_ms=mock_latency_ms, agent_pool=agent_pool))
        spec = load_task_spec(spec_path)
        if config.mode:
            spec = replace(spec, mode=PipelineMode(config.mode))
        events = RunEventLogger(stream=sys.stderr if verbose and not events_path else None, path=events_path)
        run, record_path = execute_spec(spec, config, run_id or default_run_id(spec.spec_id, config.seed),
                                        failure_plan, events=events, dump_board=dump_board)
    except USAGE_ERRORS as e:
        logger.error(f"run {spec_path} failed to start: {e}")
        _usage_error(f"{type(e).__name__}: {e}")
    finally:
        if events is not None:
            events.close()

    accuracy_pct = accuracy(run)
    click.echo(f"Run {run.run_id}: {run.status.value}")
    click.echo(f"  development time: {development_time(run):.2f} min")
    click.echo(f"  accuracy: {'n/a' if accuracy_pct is None else f'{accuracy_pct:.1f}%'}")
    click.echo(f"  artifacts: {len(run.artifacts)}")
    click.echo(f"  record: {record_path}")
    if run.failure_reason:
        click.echo(f"  failure: {run.failure_reason}")
    sys.exit(EXIT_OK if run.status.value == "succeeded" else EXIT_RUN_FAILED)


def load_suite(suite_path: str) -> List[Tuple[str, List[PipelineMode]]]:
    """
    Reads a suite file: a JSON list of {"spec_path": ..., "pipelines": [...]}.
    Relative spec paths are resolved against the suite file's directory.

    Raises:
        OSError, ValueError, KeyError: unreadable or malformed suite.
    """
    with open(suite_path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    if not isinstance(data, list):
        raise ValueError(f"Suite {suite_path} must be a JSON list.")
    base_dir = os.path.dirname(os.path.abspath(suite_path))
    entries = []
    for item in data:
        spec_path = item["spec_path"]
        if not os.path.isabs(spec_path):
            spec_path = os.path.join(base_dir, spec_path)
        pipelines = [PipelineMode(p) for p in item.get("pipelines", [PipelineMode.MODULAR.value])]
        if not pipelines:
            raise ValueError(f"Suite entry {item['spec_path']} lists no pipelines.")
        entries.append((spec_path, pipelines))
    return entries


def _load_survey_means(survey_path: Optional[str]):
    if not survey_path:
        return None, None
    records = load_survey(survey_path)
    return ingest_survey(records), survey_by_pipeline(records)


def _emit_report(rows: List[BenchRow], out_dir: str, survey_path: Optional[str], plot: bool):
    survey, survey_pipelines = _load_survey_means(survey_path)
    report = bench_report(rows, survey, survey_pipelines)
    write_report(report, out_dir)
    if plot:
        render_comparison_chart(rows, os.path.join(out_dir, 'comparison.png'))
        render_accuracy_chart(rows, os.path.join(out_dir, 'accuracy.png'))
        if survey_pipelines:
            render_survey_chart(survey_pipelines, os.path.join(out_dir, 'survey.png'))
    click.echo(report.text, nl=False)


@cli.command(name='bench')
@click.argument('suite_path')
@_config_options
@click.option('--run-id', 'batch_id', default=None, help='Batch id for the report directory. Defaults to bench-<UTC timestamp>.')
@click.option('--survey', 'survey_path', default=None, help='Survey CSV to merge into the report.')
@click.option('--plot/--no-plot', default=False, help='Also write development-time, accuracy and survey comparison charts.')
def cmd_bench(suite_path, config_path, backend, endpoint, model, seed, concurrency, max_attempts, out,
              mock_latency_ms, agent_pool, verbose, batch_id, survey_path, plot):
    """Runs every (spec, pipeline) pair of a suite and writes the benchmark report."""
    if verbose:
        setup_logging('cortex_engine.log', LOG_DIRECTORY, console=True)
    try:
        config = load_cli_config(config_path, _flags(
            backend=backend, endpoint=endpoint, model=model, seed=seed, concurrency=concurrency,
            max_attempts=max_attempts, out=out, mock_latency_ms=mock_latency_ms, agent_pool=agent_pool))
        get_backend_config(kind=config.backend, endpoint_url=config.endpoint, model_name=config.model,
                           seed=config.seed, timeout_ms=config.timeout_ms, mock_latency_ms=config.mock_latency_ms)
        parse_agent_pool(config.agent_pool)
        suite = load_suite(suite_path)
        if not suite:
            raise ValueError(f"Suite {suite_path} is empty.")
        if survey_path and not os.path.isfile(survey_path):
            raise ConfigError(f"Survey file not found: {survey_path}")
    except USAGE_ERRORS as e:
        _usage_error(f"{type(e).__name__}: {e}")

    rows: List[BenchRow] = []
    for spec_path, pipelines in suite:
        for pipeline in pipelines:
            task_name = os.path.splitext(os.path.basename(spec_path))[0]
            run_id = f"{task_name}-{pipeline.value}"
            try:
                spec = replace(load_task_spec(spec_path), mode=pipeline)
                task_name = spec.title or spec.spec_id
                run_id = default_run_id(spec.spec_id, config.seed, suffix=pipeline.value)
                run, _ = execute_spec(spec, config, run_id)
                rows.append(bench_row(run, task_name))
                logger.info(f"Bench {task_name} ({pipeline.value}): {run.status.value}")
            except Exception as e:
                logger.exception(f"Bench run for {spec_path} ({pipeline.value}) crashed")
                click.echo(f"Warning: {spec_path} ({pipeline.value}) crashed: {e}", err=True)
                rows.append(BenchRow(task_name=task_name, pipeline=pipeline, dev_time_min=0.0,
                                     accuracy_pct=None, run_id=run_id, status="failed"))

    batch_id = batch_id or f"bench-{datetime.now(timezone.utc).strftime('%Y%m%dT%H%M%SZ')}"
    try:
        _emit_report(rows, os.path.join(config.out, 'out', batch_id), survey_path, plot)
    except USAGE_ERRORS as e:
        _usage_error(f"{type(e).__name__}: {e}")
    sys.exit(EXIT_OK if all(r.status == "succeeded" for r in rows) else EXIT_RUN_FAILED)


def resolve_run_files(refs, out: str) -> List[str]:
    """
    Maps each reference to run record files: a JSON file path, a directory
    (every *.json inside) or a run id looked up under <out>/runs/.

    Raises:
        FileNotFoundError: a reference matches no run file.
    """
    paths: List[str] = []
    for ref in refs:
        if os.path.isdir(ref):
            found = sorted(glob.glob(os.path.join(ref, '*.json')))
            if not found:
                raise FileNotFoundError(f"No run files in directory {ref}")
            paths.extend(found)
        elif os.path.isfile(ref):
            paths.append(ref)
        else:
            candidate = os.path.join(out, 'runs', f"{ref}.json")
            if not os.path.isfile(candidate):
                raise FileNotFoundError(f"Run file not found for '{ref}' (looked at {candidate})")
            paths.append(candidate)
    return paths


@cli.command(name='report')
@click.argument('runs', nargs=-1)
@click.option('--out', default=None, help='Output directory (run ids are looked up in <out>/runs/).')
@click.option('--survey', 'survey_path', default=None, help='Survey CSV to merge into the report.')
@click.option('--run-id', 'report_id', default=None, help='Report directory name under <out>/out/.')
@click.option('--plot/--no-plot', default=False, help='Also write development-time, accuracy and survey comparison charts.')
def cmd_report(runs, out, survey_path, report_id, plot):
    """Regenerates a report from persisted runs (run ids, run files or a batch directory)."""
    out = out or WORKING_DIRECTORY
    if not runs:
        _usage_error("Give at least one run id, run file or directory.")
    rows: List[BenchRow] = []
    try:
        for path in resolve_run_files(runs, out):
            try:
                run = load_run(path)
                rows.append(bench_row(run))
            except (ValueError, KeyError, TypeError, AttributeError, CortexError) as e:
                raise ValueError(f"Corrupt or unfinished run file {path}: {type(e).__name__}: {e}")
        if report_id is None:
            report_id = rows[0].run_id if len(rows) == 1 else f"report-{datetime.now(timezone.utc).strftime('%Y%m%dT%H%M%SZ')}"
        _emit_report(rows, os.path.join(out, 'out', report_id), survey_path, plot)
    except USAGE_ERRORS as e:
        logger.error(f"report failed: {e}")
        _usage_error(str(e))
    sys.exit(EXIT_OK)


if __name__ == '__main__':
    cli()
