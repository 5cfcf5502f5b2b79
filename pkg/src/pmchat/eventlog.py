"""Event-log ingestion: CSV parsing, cleaning, normalization, and filtering.

The canonical log is a set of cases ordered by case id, each holding its
events ordered by timestamp (stable on ties), with resources replaced by
pseudonyms ``r1, r2, ...`` assigned in order of first appearance in the
normalized event stream.  The log id is a content hash of that stream, so
identical normalized content always yields the same id.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterable, Iterator, Mapping

from .errors import EmptyLogError, SchemaError, ValidationError

LOG_ID_HEX_DIGITS = 12
CANONICAL_COLUMNS = ("case_id", "activity", "timestamp", "resource")

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_MS = timedelta(milliseconds=1)

DROP_EMPTY_FIELD = "empty-field"
DROP_BAD_TIMESTAMP = "bad-timestamp"
DROP_DUPLICATE = "duplicate"
DROP_REASONS = (DROP_EMPTY_FIELD, DROP_BAD_TIMESTAMP, DROP_DUPLICATE)

# Fraction of rows that may fail timestamp parsing before the parse aborts.
BAD_TIMESTAMP_ABORT_RATIO = 0.5


def parse_timestamp(text: str) -> int:
    """Parse an accepted timestamp format into UTC epoch milliseconds.

    Accepted: ISO-8601 with offset, ISO-8601 without offset (read as UTC),
    and ``YYYY-MM-DD HH:MM:SS`` (read as UTC).  Sub-millisecond precision is
    truncated.  Raises ``ValueError`` for anything else.
    """
    value = text.strip()
    if not value:
        raise ValueError("empty timestamp")
    if value.endswith(("Z", "z")):
        value = value[:-1] + "+00:00"
    moment = datetime.fromisoformat(value)
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return (moment - _EPOCH) // _MS


def format_timestamp(ms: int) -> str:
    """Render epoch milliseconds as ISO-8601 UTC, with a fraction only when nonzero."""
    moment = _EPOCH + timedelta(milliseconds=ms)
    base = moment.strftime("%Y-%m-%dT%H:%M:%S")
    frac = ms % 1000
    if frac:
        return f"{base}.{frac:03d}Z"
    return base + "Z"


@dataclass(frozen=True)
class LogMetadata:
    """Descriptive context for a log: sector, economic activity, process, organization."""

    sector: str
    economic_activity: str
    process_name: str
    organization: str

    def __post_init__(self):
        missing = [
            name
            for name in ("sector", "economic_activity", "process_name", "organization")
            if not getattr(self, name).strip()
        ]
        if missing:
            raise ValidationError(
                "metadata fields must be non-empty (use 'unknown' as a placeholder): "
                + ", ".join(missing)
            )

    def to_dict(self) -> dict[str, str]:
        return {
            "sector": self.sector,
            "economic_activity": self.economic_activity,
            "process_name": self.process_name,
            "organization": self.organization,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, str]) -> "LogMetadata":
        return cls(
            sector=data["sector"],
            economic_activity=data["economic_activity"],
            process_name=data["process_name"],
            organization=data["organization"],
        )


@dataclass(frozen=True)
class Event:
    """One recorded step: an activity performed for a case at a point in time."""

    case_id: str
    activity: str
    timestamp_ms: int
    resource: str | None = None
    attributes: Mapping[str, str] = field(default_factory=dict)

    @property
    def timestamp(self) -> datetime:
        return _EPOCH + timedelta(milliseconds=self.timestamp_ms)

    @property
    def timestamp_iso(self) -> str:
        return format_timestamp(self.timestamp_ms)


@dataclass(frozen=True)
class Case:
    """One process instance: at least one event, ordered by timestamp."""

    case_id: str
    events: tuple[Event, ...]

    def __post_init__(self):
        if not self.events:
            raise ValidationError(f"case {self.case_id!r} has no events")

    def __len__(self) -> int:
        return len(self.events)

    @property
    def activities(self) -> tuple[str, ...]:
        return tuple(e.activity for e in self.events)

    @property
    def duration_seconds(self) -> int:
        return (self.events[-1].timestamp_ms - self.events[0].timestamp_ms) // 1000


@dataclass(frozen=True)
class EventLog:
    """Normalized event log: cases keyed by id plus descriptive metadata."""

    log_id: str
    cases: tuple[Case, ...]
    metadata: LogMetadata

    def __len__(self) -> int:
        return len(self.cases)

    @property
    def total_events(self) -> int:
        return sum(len(c) for c in self.cases)

    @property
    def case_ids(self) -> tuple[str, ...]:
        return tuple(c.case_id for c in self.cases)

    def case(self, case_id: str) -> Case:
        for c in self.cases:
            if c.case_id == case_id:
                return c
        raise KeyError(case_id)

    def iter_events(self) -> Iterator[Event]:
        for c in self.cases:
            yield from c.events

    def activity_labels(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for e in self.iter_events():
            seen.setdefault(e.activity, None)
        return tuple(seen)


@dataclass(frozen=True)
class CleaningReport:
    """Row accounting for one parse run; drop counts sum to rows lost."""

    input_rows: int
    surviving_events: int
    dropped: Mapping[str, int]

    @property
    def total_dropped(self) -> int:
        return sum(self.dropped.values())

    def to_dict(self) -> dict:
        return {
            "input_rows": self.input_rows,
            "surviving_events": self.surviving_events,
            "dropped": dict(self.dropped),
        }


@dataclass(frozen=True)
class ColumnMapping:
    """Names of the CSV columns holding the four canonical fields."""

    case_id: str
    activity: str
    timestamp: str
    resource: str | None = None

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "activity": self.activity,
            "timestamp": self.timestamp,
            "resource": self.resource,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, str | None]) -> "ColumnMapping":
        return cls(
            case_id=str(data["case_id"]),
            activity=str(data["activity"]),
            timestamp=str(data["timestamp"]),
            resource=data.get("resource") or None,
        )


@dataclass(frozen=True)
class ParseResult:
    """Everything one parse run produced, including ingestion-only bookkeeping.

    ``resource_map`` (raw name -> pseudonym) and ``deny_entries`` (raw case
    ids, raw resource names, raw attribute values) never leave the server
    side; they back re-ingestion stability and the outbound redaction guard.
    """

    log: EventLog
    report: CleaningReport
    resource_map: Mapping[str, str]
    deny_entries: frozenset[str]


@dataclass(frozen=True)
class FilterCriteria:
    """Optional conjunctive filters: date range, activity set, case-id set."""

    start: datetime | None = None
    end: datetime | None = None
    activities: frozenset[str] | None = None
    case_ids: frozenset[str] | None = None

    def __post_init__(self):
        if self.start is not None and self.end is not None and self.start > self.end:
            raise ValidationError("filter range start must not exceed end")
        for name in ("start", "end"):
            value = getattr(self, name)
            if value is not None and value.tzinfo is None:
                object.__setattr__(self, name, value.replace(tzinfo=timezone.utc))

    @property
    def is_empty(self) -> bool:
        return (
            self.start is None
            and self.end is None
            and self.activities is None
            and self.case_ids is None
        )


def canonical_csv(cases: Iterable[Case]) -> str:
    """Serialize cases as the canonical four-column RFC 4180 CSV."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CANONICAL_COLUMNS)
    for case in cases:
        for event in case.events:
            writer.writerow(
                [case.case_id, event.activity, event.timestamp_iso, event.resource or ""]
            )
    return buffer.getvalue()


def compute_log_id(cases: Iterable[Case]) -> str:
    digest = hashlib.sha256(canonical_csv(cases).encode("utf-8")).hexdigest()
    return digest[:LOG_ID_HEX_DIGITS]


def _normalize_events(
    events: Iterable[Event],
) -> tuple[tuple[Case, ...], dict[str, str]]:
    """Sort, deduplicate, and pseudonymize; returns cases plus the resource map.

    Events are grouped by case id (cases ordered lexicographically), sorted
    by timestamp within each case keeping the incoming order on ties, and
    deduplicated on the (case, activity, timestamp, resource) tuple.
    Pseudonyms are assigned scanning the normalized stream, which makes the
    whole step idempotent: a second pass maps r1 -> r1, r2 -> r2, ...
    """
    by_case: dict[str, list[tuple[int, Event]]] = {}
    for position, event in enumerate(events):
        by_case.setdefault(event.case_id, []).append((position, event))

    resource_map: dict[str, str] = {}
    cases: list[Case] = []
    for case_id in sorted(by_case):
        ordered = sorted(by_case[case_id], key=lambda item: (item[1].timestamp_ms, item[0]))
        seen: set[tuple[str, str, int, str | None]] = set()
        case_events: list[Event] = []
        for _, event in ordered:
            key = (event.case_id, event.activity, event.timestamp_ms, event.resource)
            if key in seen:
                continue
            seen.add(key)
            resource = event.resource
            if resource is not None:
                if resource not in resource_map:
                    resource_map[resource] = f"r{len(resource_map) + 1}"
                resource = resource_map[resource]
            case_events.append(
                Event(
                    case_id=event.case_id,
                    activity=event.activity,
                    timestamp_ms=event.timestamp_ms,
                    resource=resource,
                    attributes=event.attributes,
                )
            )
        cases.append(Case(case_id=case_id, events=tuple(case_events)))
    return tuple(cases), resource_map


def log_from_events(events: Iterable[Event], metadata: LogMetadata) -> EventLog:
    """Build a normalized EventLog from loose events (programmatic ingestion)."""
    cases, _ = _normalize_events(events)
    if not cases:
        raise EmptyLogError("no events supplied")
    return EventLog(log_id=compute_log_id(cases), cases=cases, metadata=metadata)


def normalize(log: EventLog) -> EventLog:
    """Return the normalized form of ``log``; identity on already-normalized logs."""
    cases, _ = _normalize_events(log.iter_events())
    return EventLog(log_id=compute_log_id(cases), cases=cases, metadata=log.metadata)


def parse_csv(raw_text: str, mapping: ColumnMapping, metadata: LogMetadata) -> ParseResult:
    """Parse raw CSV text into a normalized EventLog plus its cleaning report.

    Rows with an empty case id, activity, or timestamp are dropped and
    counted; rows whose timestamp does not parse are dropped and counted,
    and the parse aborts if more than half of all rows fail that way.
    Exact duplicate rows (case, activity, timestamp, raw resource) keep
    their first occurrence only.
    """
    reader = csv.reader(io.StringIO(raw_text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("CSV input is empty (missing header row)") from None
    header = [h.strip() for h in header]
    column_index = {name: i for i, name in enumerate(header)}

    required = {"case_id": mapping.case_id, "activity": mapping.activity, "timestamp": mapping.timestamp}
    if mapping.resource is not None:
        required["resource"] = mapping.resource
    missing = sorted(col for col in required.values() if col not in column_index)
    if missing:
        raise SchemaError(
            "mapped columns missing from CSV header: " + ", ".join(missing),
            details={"missing": missing, "header": header},
        )

    attribute_columns = [
        (name, idx)
        for name, idx in column_index.items()
        if name not in set(required.values())
    ]

    dropped = {reason: 0 for reason in DROP_REASONS}
    input_rows = 0
    raw_events: list[Event] = []
    deny: set[str] = set()
    seen_rows: set[tuple[str, str, int, str | None]] = set()

    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        input_rows += 1
        cell = lambda col: row[column_index[col]].strip() if column_index[col] < len(row) else ""
        case_id = cell(mapping.case_id)
        activity = cell(mapping.activity)
        ts_text = cell(mapping.timestamp)
        if not case_id or not activity or not ts_text:
            dropped[DROP_EMPTY_FIELD] += 1
            continue
        try:
            ts_ms = parse_timestamp(ts_text)
        except ValueError:
            dropped[DROP_BAD_TIMESTAMP] += 1
            continue
        resource = cell(mapping.resource) if mapping.resource is not None else ""
        resource_value = resource or None
        key = (case_id, activity, ts_ms, resource_value)
        if key in seen_rows:
            dropped[DROP_DUPLICATE] += 1
            continue
        seen_rows.add(key)
        attributes = {}
        for name, idx in attribute_columns:
            value = (row[idx] if idx < len(row) else "").strip()
            attributes[name] = value
            if value:
                deny.add(value)
        deny.add(case_id)
        if resource_value is not None:
            deny.add(resource_value)
        raw_events.append(
            Event(
                case_id=case_id,
                activity=activity,
                timestamp_ms=ts_ms,
                resource=resource_value,
                attributes=attributes,
            )
        )

    if input_rows and dropped[DROP_BAD_TIMESTAMP] / input_rows > BAD_TIMESTAMP_ABORT_RATIO:
        raise ValidationError(
            f"{dropped[DROP_BAD_TIMESTAMP]} of {input_rows} rows have unparseable "
            "timestamps (more than half); aborting instead of guessing"
        )
    if not raw_events:
        raise EmptyLogError("no rows survived cleaning")

    cases, resource_map = _normalize_events(raw_events)
    log = EventLog(log_id=compute_log_id(cases), cases=cases, metadata=metadata)
    report = CleaningReport(
        input_rows=input_rows,
        surviving_events=log.total_events,
        dropped=dropped,
    )
    return ParseResult(
        log=log,
        report=report,
        resource_map=resource_map,
        deny_entries=frozenset(deny),
    )


def filter_log(log: EventLog, criteria: FilterCriteria) -> EventLog:
    """Keep exactly the events satisfying all supplied criteria.

    Cases emptied by the filter are removed and the log id is recomputed.
    Pseudonyms and event order are preserved (the input is already
    normalized), so downstream KPIs keep the ingestion pseudonym table.
    """
    if criteria.is_empty:
        return log
    start_ms = None if criteria.start is None else (criteria.start - _EPOCH) // _MS
    end_ms = None if criteria.end is None else (criteria.end - _EPOCH) // _MS

    kept_cases: list[Case] = []
    for case in log.cases:
        if criteria.case_ids is not None and case.case_id not in criteria.case_ids:
            continue
        kept = [
            e
            for e in case.events
            if (start_ms is None or e.timestamp_ms >= start_ms)
            and (end_ms is None or e.timestamp_ms <= end_ms)
            and (criteria.activities is None or e.activity in criteria.activities)
        ]
        if kept:
            kept_cases.append(Case(case_id=case.case_id, events=tuple(kept)))
    if not kept_cases:
        raise EmptyLogError("filter criteria removed every event")
    cases = tuple(kept_cases)
    return EventLog(log_id=compute_log_id(cases), cases=cases, metadata=log.metadata)


def parse_canonical_csv(raw_text: str, metadata: LogMetadata) -> EventLog:
    """Load a log previously persisted in the canonical four-column format."""
    mapping = ColumnMapping(case_id="case_id", activity="activity", timestamp="timestamp", resource="resource")
    return parse_csv(raw_text, mapping, metadata).log
