"""Dashboard KPIs: structural and temporal statistics plus the stored-output record.

A case counts as rework when any activity occurs in it at least twice,
consecutively or not.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone

from .discovery import extract_variants
from .eventlog import EventLog, format_timestamp

ENGINE_MODULES = ("dashboard", "discovery", "performance", "conformance", "orgmining")
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class StructuralStats:
    total_cases: int
    total_activities: int
    total_variants: int
    total_cases_with_rework: int

    def to_dict(self) -> dict:
        return {
            "total_cases": self.total_cases,
            "total_activities": self.total_activities,
            "total_variants": self.total_variants,
            "total_cases_with_rework": self.total_cases_with_rework,
        }


@dataclass(frozen=True)
class TemporalStats:
    first_event_ms: int
    last_event_ms: int

    @property
    def span_seconds(self) -> int:
        return (self.last_event_ms - self.first_event_ms) // 1000

    @property
    def first_event_iso(self) -> str:
        return format_timestamp(self.first_event_ms)

    @property
    def last_event_iso(self) -> str:
        return format_timestamp(self.last_event_ms)

    def to_dict(self) -> dict:
        return {
            "first_event_date": self.first_event_iso,
            "last_event_date": self.last_event_iso,
            "span_seconds": self.span_seconds,
        }


@dataclass(frozen=True)
class ModuleOutputRecord:
    """One persisted KPI payload; (log_id, module) identifies the latest version."""

    log_id: str
    module: str
    payload: dict
    created_at: str
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def fresh(cls, log_id: str, module: str, payload: dict) -> "ModuleOutputRecord":
        return cls(
            log_id=log_id,
            module=module,
            payload=payload,
            created_at=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ"),
        )

    def to_dict(self) -> dict:
        return {
            "log_id": self.log_id,
            "module": self.module,
            "schema_version": self.schema_version,
            "created_at": self.created_at,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModuleOutputRecord":
        return cls(
            log_id=data["log_id"],
            module=data["module"],
            payload=data["payload"],
            created_at=data["created_at"],
            schema_version=data["schema_version"],
        )


def structural_stats(log: EventLog) -> StructuralStats:
    rework = 0
    for case in log.cases:
        counts = Counter(case.activities)
        if counts and max(counts.values()) >= 2:
            rework += 1
    return StructuralStats(
        total_cases=len(log.cases),
        total_activities=len(log.activity_labels()),
        total_variants=len(extract_variants(log)),
        total_cases_with_rework=rework,
    )


def temporal_stats(log: EventLog) -> TemporalStats:
    times = [event.timestamp_ms for event in log.iter_events()]
    return TemporalStats(first_event_ms=min(times), last_event_ms=max(times))
