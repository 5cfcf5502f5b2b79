"""Engine pipeline: compute a module's KPI payload and persist it.

Payload construction is fully deterministic for a given log, so repeated
runs on an unchanged log produce byte-identical payloads; ``analyze_log``
detects that and reports a cache hit instead of writing a new version.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import conformance as conformance_mod
from . import dashboard as dashboard_mod
from . import discovery as discovery_mod
from . import orgmining as orgmining_mod
from . import performance as performance_mod
from .dashboard import ENGINE_MODULES, ModuleOutputRecord
from .discovery import ProcessModel
from .errors import ValidationError
from .eventlog import EventLog
from .store import DataStore, dump_json

DEFAULT_DEPENDENCY_THRESHOLD = 0.5
DEFAULT_FREQUENCY_THRESHOLD = 2
DEFAULT_BOTTLENECK_TOP_K = 10
DEFAULT_BOTTLENECK_MIN_FREQUENCY = 1


@dataclass(frozen=True)
class AnalyzeOutcome:
    log_id: str
    module: str
    version: int
    cached: bool
    record: ModuleOutputRecord


@dataclass(frozen=True)
class EngineSettings:
    dependency_threshold: float = DEFAULT_DEPENDENCY_THRESHOLD
    frequency_threshold: int = DEFAULT_FREQUENCY_THRESHOLD
    bottleneck_top_k: int = DEFAULT_BOTTLENECK_TOP_K
    bottleneck_min_frequency: int = DEFAULT_BOTTLENECK_MIN_FREQUENCY
    reference_model: ProcessModel | None = None


def _dashboard_payload(log: EventLog) -> dict:
    return {
        "structural": dashboard_mod.structural_stats(log).to_dict(),
        "temporal": dashboard_mod.temporal_stats(log).to_dict(),
    }


def _discovery_payload(log: EventLog, settings: EngineSettings) -> dict:
    dfg = discovery_mod.build_dfg(log)
    variants = discovery_mod.extract_variants(log)
    model = discovery_mod.discover_model(
        log,
        dependency_threshold=settings.dependency_threshold,
        frequency_threshold=settings.frequency_threshold,
    )
    return {
        "dfg": dfg.to_dict(),
        "variants": [v.to_dict() for v in variants],
        "model": model.to_dict(),
        "thresholds": {
            "dependency": settings.dependency_threshold,
            "frequency": settings.frequency_threshold,
        },
    }


def _performance_payload(log: EventLog, settings: EngineSettings) -> dict:
    report = performance_mod.build_performance_report(
        log,
        top_k=settings.bottleneck_top_k,
        min_frequency=settings.bottleneck_min_frequency,
    )
    waiting_rows = [
        {"from": edge[0], "to": edge[1], "stats": stats.to_dict()}
        for edge, stats in sorted(report.edge_waiting.items())
    ]
    return {
        "case_duration": report.case_duration.to_dict(),
        "per_case_durations": dict(sorted(report.per_case_durations.items())),
        "edge_waiting": waiting_rows,
        "bottlenecks": [b.to_dict() for b in report.bottlenecks],
        "throughput": {
            "bucket": "day",
            "series": [
                {"bucket_start": b.bucket_start, "completed_cases": b.completed_cases}
                for b in performance_mod.throughput(log, "day")
            ],
        },
    }


def _conformance_payload(log: EventLog, settings: EngineSettings) -> dict:
    model = settings.reference_model or discovery_mod.discover_model(
        log,
        dependency_threshold=settings.dependency_threshold,
        frequency_threshold=settings.frequency_threshold,
    )
    report = conformance_mod.check_conformance(model, log)
    summary = conformance_mod.conformance_summary(report)
    return {
        "log_fitness": report.log_fitness,
        "allowed_moves": report.allowed_moves,
        "total_moves": report.total_moves,
        "violating_case_count": report.violating_case_count,
        "per_case_fitness": dict(sorted(report.per_case_fitness.items())),
        "violations": [v.to_dict() for v in report.violations],
        "summary": summary.to_dict(),
        "model": model.to_dict(),
    }


def _orgmining_payload(log: EventLog) -> dict:
    network = orgmining_mod.handover_network(log)
    matrix = orgmining_mod.resource_activity_matrix(log)
    workload = orgmining_mod.workload_stats(log)
    return {
        "handover": network.to_dict(),
        "resource_activity_matrix": matrix.to_rows(),
        "workload": [{"resource": r, "events": n} for r, n in workload.items()],
    }


def build_module_payload(
    log: EventLog, module: str, settings: EngineSettings | None = None
) -> dict:
    settings = settings or EngineSettings()
    if module == "dashboard":
        return _dashboard_payload(log)
    if module == "discovery":
        return _discovery_payload(log, settings)
    if module == "performance":
        return _performance_payload(log, settings)
    if module == "conformance":
        return _conformance_payload(log, settings)
    if module == "orgmining":
        return _orgmining_payload(log)
    raise ValidationError(f"unknown module {module!r}; expected one of {ENGINE_MODULES}")


def analyze_log(
    store: DataStore,
    log_id: str,
    module: str,
    settings: EngineSettings | None = None,
) -> AnalyzeOutcome:
    """Compute and store one module's payload; unchanged payloads are cache hits."""
    log = store.load_log(log_id)
    payload = build_module_payload(log, module, settings)
    existing = store.load_outputs(log_id, [module]).get(module)
    if existing is not None and dump_json(existing.payload) == dump_json(payload):
        return AnalyzeOutcome(
            log_id=log_id,
            module=module,
            version=store.latest_version(log_id, module),
            cached=True,
            record=existing,
        )
    record = ModuleOutputRecord.fresh(log_id, module, payload)
    version = store.store_output(record)
    return AnalyzeOutcome(log_id=log_id, module=module, version=version, cached=False, record=record)


def analyze_all(
    store: DataStore, log_id: str, settings: EngineSettings | None = None
) -> list[AnalyzeOutcome]:
    return [analyze_log(store, log_id, module, settings) for module in ENGINE_MODULES]
