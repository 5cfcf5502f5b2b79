"""Command-line interface: ingest, analyze, prompt, chat, serve, export, eval."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from ..dashboard import ENGINE_MODULES
from ..discovery import DirectlyFollowsGraph, dfg_to_dot
from ..errors import PmchatError, RedactionViolationError
from ..eventlog import ColumnMapping, LogMetadata, parse_csv
from ..evaluation import (
    GROUP_BY_CHOICES,
    RatingsStore,
    distribution,
    import_ratings_csv,
    render_distribution_text,
)
from ..llmgateway import LlmGateway, provider_from_env
from ..orgmining import HandoverNetwork, handover_to_dot
from ..pipeline import EngineSettings, analyze_all, analyze_log
from ..promptengine import AnalysisTask, RenderBudget, build_prompt, default_fields_for, render_module_data
from ..store import DataStore
from .sessions import SessionManager

_MODULE_CHOICES = ENGINE_MODULES + ("all",)
_TASK_CHOICES = tuple(t.value for t in AnalysisTask)


def _store(data_dir: str) -> DataStore:
    return DataStore(data_dir)


def _manager(store: DataStore) -> SessionManager:
    return SessionManager(store, LlmGateway(provider_from_env()))


class _ErrorMappingGroup(click.Group):
    """Turn toolkit errors into clean non-zero exits instead of tracebacks."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except PmchatError as exc:
            raise click.ClickException(f"{exc.code}: {exc.message}") from exc


@click.group(cls=_ErrorMappingGroup)
def main():
    """Conversational process-mining toolkit."""


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--case-col", required=True, help="CSV column holding the case id.")
@click.option("--activity-col", required=True, help="CSV column holding the activity.")
@click.option("--timestamp-col", required=True, help="CSV column holding the timestamp.")
@click.option("--resource-col", default=None, help="Optional CSV column holding the resource.")
@click.option("--sector", default="unknown", show_default=True)
@click.option("--economic-activity", default="unknown", show_default=True)
@click.option("--org", default="unknown", show_default=True)
@click.option("--process", default="unknown", show_default=True)
@click.option("--data-dir", default="data", show_default=True, envvar="PMCHAT_DATA_DIR")
def ingest(csv_path, case_col, activity_col, timestamp_col, resource_col,
           sector, economic_activity, org, process, data_dir):
    """Parse a CSV event log into the store (cleaned, normalized, pseudonymized)."""
    mapping = ColumnMapping(
        case_id=case_col, activity=activity_col, timestamp=timestamp_col, resource=resource_col
    )
    metadata = LogMetadata(
        sector=sector, economic_activity=economic_activity,
        process_name=process, organization=org,
    )
    result = parse_csv(Path(csv_path).read_text("utf-8"), mapping, metadata)
    log_id, cached = _store(data_dir).register_log(result)
    click.echo(f"log_id: {log_id}" + (" (cache hit: identical content already ingested)" if cached else ""))
    report = result.report
    click.echo(
        f"rows: {report.input_rows} in, {report.surviving_events} events kept, "
        + ", ".join(f"{reason}: {count}" for reason, count in report.dropped.items())
    )


@main.command()
@click.argument("log_id")
@click.option("--module", "module", type=click.Choice(_MODULE_CHOICES), default="all", show_default=True)
@click.option("--dependency-threshold", type=float, default=0.5, show_default=True)
@click.option("--frequency-threshold", type=int, default=2, show_default=True)
@click.option("--data-dir", default="data", show_default=True, envvar="PMCHAT_DATA_DIR")
def analyze(log_id, module, dependency_threshold, frequency_threshold, data_dir):
    """Compute a module's KPIs and store the payload (cache hit when unchanged)."""
    store = _store(data_dir)
    settings = EngineSettings(
        dependency_threshold=dependency_threshold, frequency_threshold=frequency_threshold
    )
    outcomes = (
        analyze_all(store, log_id, settings)
        if module == "all"
        else [analyze_log(store, log_id, module, settings)]
    )
    for outcome in outcomes:
        state = "cache hit, payload unchanged" if outcome.cached else "stored"
        click.echo(f"{outcome.module}: v{outcome.version} ({state})")


@main.command("prompt")
@click.argument("log_id")
@click.option("--module", type=click.Choice(ENGINE_MODULES), required=True)
@click.option("--style", type=click.Choice(("zero_shot", "optimized")), default="optimized", show_default=True)
@click.option("--task", type=click.Choice(_TASK_CHOICES), default="Analytics", show_default=True)
@click.option("--dry-run", is_flag=True, default=True, help="Print the prompt without calling a provider.")
@click.option("--data-dir", default="data", show_default=True, envvar="PMCHAT_DATA_DIR")
def prompt_cmd(log_id, module, style, task, dry_run, data_dir):
    """Assemble and print the exact prompt for a module/style/task."""
    store = _store(data_dir)
    outputs = store.load_outputs(log_id, [module])
    if module not in outputs:
        raise click.ClickException(f"{module} output missing; run `pmchat analyze {log_id}` first")
    metadata = store.load_metadata(log_id)
    analysis_task = AnalysisTask.parse(task)
    budget = RenderBudget()
    module_data = render_module_data(outputs, budget)
    text = build_prompt(style, default_fields_for(metadata, module, analysis_task), analysis_task, module_data, budget)
    click.echo(text, nl=False)


@main.command()
@click.argument("log_id")
@click.option("--style", type=click.Choice(("zero_shot", "optimized")), default="optimized", show_default=True)
@click.option("--module", type=click.Choice(ENGINE_MODULES), default="dashboard", show_default=True)
@click.option("--task", type=click.Choice(_TASK_CHOICES), default="Analytics", show_default=True)
@click.option("--data-dir", default="data", show_default=True, envvar="PMCHAT_DATA_DIR")
def chat(log_id, style, module, task, data_dir):
    """Interactive loop: one module analysis, then free-form follow-ups."""
    store = _store(data_dir)
    manager = _manager(store)
    session = manager.create_session(log_id, style)
    click.echo(f"session {session.session_id} on log {log_id} ({style})")
    result = manager.run_analysis(session.session_id, module, task)
    if result.not_available:
        click.echo(f"[N.A. after {result.attempts} attempts]")
    else:
        click.echo(result.response)
    click.echo("ask follow-up questions; empty line or 'exit' quits")
    while True:
        try:
            line = click.prompt("you", default="", show_default=False).strip()
        except (EOFError, click.Abort):
            break
        if not line or line.lower() in ("exit", "quit"):
            break
        try:
            reply = manager.follow_up(session.session_id, line)
        except RedactionViolationError as exc:
            click.echo(f"[not sent: {exc.message}]")
            continue
        except PmchatError as exc:
            click.echo(f"[error: {exc.message}]")
            continue
        click.echo(reply.content)


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default="data", show_default=True, envvar="PMCHAT_DATA_DIR")
def serve(port, host, data_dir):
    """Run the HTTP service."""
    import uvicorn

    from .http import create_app

    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="info")


@main.command()
@click.argument("log_id")
@click.option("--what", type=click.Choice(("dfg", "handover")), default="dfg", show_default=True)
@click.option("--format", "fmt", type=click.Choice(("dot", "json")), default="dot", show_default=True)
@click.option("--data-dir", default="data", show_default=True, envvar="PMCHAT_DATA_DIR")
def export(log_id, what, fmt, data_dir):
    """Export the DFG or the handover network as DOT or JSON."""
    store = _store(data_dir)
    module = "discovery" if what == "dfg" else "orgmining"
    outputs = store.load_outputs(log_id, [module])
    if module not in outputs:
        raise click.ClickException(f"{module} output missing; run `pmchat analyze {log_id}` first")
    payload = outputs[module].payload
    if what == "dfg":
        data = payload["dfg"]
        if fmt == "json":
            click.echo(json.dumps(data, indent=2, sort_keys=True))
            return
        dfg = DirectlyFollowsGraph(
            activity_frequencies=data["activity_frequencies"],
            edges={(e["from"], e["to"]): e["frequency"] for e in data["edges"]},
            start_activities=data["start_activities"],
            end_activities=data["end_activities"],
        )
        click.echo(dfg_to_dot(dfg), nl=False)
    else:
        data = payload["handover"]
        if fmt == "json":
            click.echo(json.dumps(data, indent=2, sort_keys=True))
            return
        network = HandoverNetwork(
            resources=frozenset(data["resources"]),
            edges={(e["from"], e["to"]): e["count"] for e in data["edges"]},
        )
        click.echo(handover_to_dot(network), nl=False)


@main.group("eval")
def eval_group():
    """Expert-rating import and distribution reports."""


@eval_group.command("import")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--data-dir", default="data", show_default=True, envvar="PMCHAT_DATA_DIR")
def eval_import(csv_path, data_dir):
    """Import ratings from a `category,sector,gender,style,module` CSV."""
    rows, errors = import_ratings_csv(Path(csv_path).read_text("utf-8"))
    ratings = RatingsStore(_store(data_dir).ratings_path)
    for row in rows:
        ratings.record_rating(**row)
    click.echo(f"imported {len(rows)} ratings")
    for line_number, message in errors:
        click.echo(f"line {line_number}: rejected ({message})", err=True)
    if errors:
        sys.exit(1)


@eval_group.command("report")
@click.option("--group-by", type=click.Choice(GROUP_BY_CHOICES), default="overall", show_default=True)
@click.option("--json", "as_json", is_flag=True, default=False)
@click.option("--data-dir", default="data", show_default=True, envvar="PMCHAT_DATA_DIR")
def eval_report(group_by, as_json, data_dir):
    """Print the rating distribution (percentages are round-half-up integers)."""
    records = RatingsStore(_store(data_dir).ratings_path).load_records()
    report = distribution(records, group_by)
    if as_json:
        click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        click.echo(render_distribution_text(report))


if __name__ == "__main__":  # pragma: no cover
    main()
