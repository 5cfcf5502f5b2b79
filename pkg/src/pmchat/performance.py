"""Performance mining: flow times, inter-event waiting, bottlenecks, throughput.

Events carry a single timestamp, so no service-time/waiting-time split is
computable; the elapsed time between consecutive events is exposed as
waiting time.  All durations are whole seconds (floored).
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from datetime import date, timedelta

from . import kernels
from .errors import ValidationError
from .eventlog import EventLog

THROUGHPUT_BUCKETS = ("day", "week", "month")


@dataclass(frozen=True)
class DurationStats:
    """Summary of a non-empty duration sample, in seconds.

    The median of an even-sized sample is the mean of the two middle
    values; mean and median may therefore be fractional.
    """

    count: int
    min: int
    max: int
    mean: float
    median: float

    @classmethod
    def from_samples(cls, samples: list[int]) -> "DurationStats":
        if not samples:
            raise ValidationError("duration stats need at least one sample")
        return cls(
            count=len(samples),
            min=min(samples),
            max=max(samples),
            mean=sum(samples) / len(samples),
            median=float(statistics.median(samples)),
        )

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "min": self.min,
            "max": self.max,
            "mean": self.mean,
            "median": self.median,
        }


@dataclass(frozen=True)
class Bottleneck:
    edge: tuple[str, str]
    mean_waiting: float
    frequency: int

    def to_dict(self) -> dict:
        return {
            "from": self.edge[0],
            "to": self.edge[1],
            "mean_waiting": self.mean_waiting,
            "frequency": self.frequency,
        }


@dataclass(frozen=True)
class ThroughputBucket:
    bucket_start: str
    completed_cases: int


@dataclass(frozen=True)
class PerformanceReport:
    case_duration: DurationStats
    per_case_durations: dict[str, int]
    edge_waiting: dict[tuple[str, str], DurationStats]
    bottlenecks: list[Bottleneck]


def case_durations(log: EventLog) -> tuple[dict[str, int], DurationStats]:
    """Per-case flow time (last minus first event) plus its summary stats."""
    durations = {case.case_id: case.duration_seconds for case in log.cases}
    return durations, DurationStats.from_samples(list(durations.values()))


def edge_waiting_stats(log: EventLog) -> dict[tuple[str, str], DurationStats]:
    """One waiting sample per consecutive pair occurrence, grouped per DFG edge."""
    encoded = kernels.encode_log(log)
    labels = encoded.activities
    grouped = kernels.pair_deltas(encoded.offsets, encoded.activity_codes, encoded.times_ms)
    return {
        (labels[a], labels[b]): DurationStats.from_samples(samples)
        for (a, b), samples in grouped.items()
    }


def identify_bottlenecks(
    edge_stats: dict[tuple[str, str], DurationStats],
    top_k: int,
    min_frequency: int,
) -> list[Bottleneck]:
    """Rank edges by mean waiting descending; ties prefer higher frequency, then edge.

    Edges observed fewer than ``min_frequency`` times are ignored; the
    result is truncated to ``top_k`` entries (0 yields an empty list).
    """
    if top_k < 0 or min_frequency < 1:
        raise ValidationError("top_k must be >= 0 and min_frequency >= 1")
    eligible = [
        Bottleneck(edge=edge, mean_waiting=stats.mean, frequency=stats.count)
        for edge, stats in edge_stats.items()
        if stats.count >= min_frequency
    ]
    eligible.sort(key=lambda b: (-b.mean_waiting, -b.frequency, b.edge))
    return eligible[:top_k]


def _bucket_start(day: date, bucket: str) -> date:
    if bucket == "day":
        return day
    if bucket == "week":
        return day - timedelta(days=day.weekday())
    return day.replace(day=1)


def _next_bucket(start: date, bucket: str) -> date:
    if bucket == "day":
        return start + timedelta(days=1)
    if bucket == "week":
        return start + timedelta(days=7)
    if start.month == 12:
        return start.replace(year=start.year + 1, month=1)
    return start.replace(month=start.month + 1)


def throughput(log: EventLog, bucket: str = "day") -> list[ThroughputBucket]:
    """Completed cases per calendar bucket (a case counts where its last event falls).

    The series is dense: buckets between the first and last active bucket
    are present with a zero count.
    """
    if bucket not in THROUGHPUT_BUCKETS:
        raise ValidationError(f"bucket must be one of {THROUGHPUT_BUCKETS}")
    completion_days = [case.events[-1].timestamp.date() for case in log.cases]
    starts = [_bucket_start(day, bucket) for day in completion_days]
    counts: dict[date, int] = {}
    for start in starts:
        counts[start] = counts.get(start, 0) + 1
    series: list[ThroughputBucket] = []
    cursor = min(starts)
    last = max(starts)
    while cursor <= last:
        series.append(
            ThroughputBucket(bucket_start=cursor.isoformat(), completed_cases=counts.get(cursor, 0))
        )
        cursor = _next_bucket(cursor, bucket)
    return series


def build_performance_report(
    log: EventLog,
    top_k: int = 10,
    min_frequency: int = 1,
) -> PerformanceReport:
    per_case, stats = case_durations(log)
    waiting = edge_waiting_stats(log)
    return PerformanceReport(
        case_duration=stats,
        per_case_durations=per_case,
        edge_waiting=waiting,
        bottlenecks=identify_bottlenecks(waiting, top_k=top_k, min_frequency=min_frequency),
    )
