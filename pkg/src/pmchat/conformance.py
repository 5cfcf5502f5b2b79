"""Conformance checking: replay cases against a process model and score the fit.

Replay is edge-membership over the thresholded-DFG model: per case one
start check, one check per consecutive event pair, and one end check, so a
case of length n contributes n + 1 moves.  Log fitness is the ratio of
allowed moves to total moves over all cases.  An event whose activity is
not part of the model fails its incident checks with the unknown-activity
kind taking precedence.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import kernels
from .discovery import ProcessModel
from .eventlog import Case, EventLog

VIOLATION_KINDS = ("unknown-activity", "disallowed-edge", "bad-start", "bad-end")
_KIND_BY_CODE = {
    kernels.KIND_UNKNOWN_ACTIVITY: "unknown-activity",
    kernels.KIND_DISALLOWED_EDGE: "disallowed-edge",
    kernels.KIND_BAD_START: "bad-start",
    kernels.KIND_BAD_END: "bad-end",
}


@dataclass(frozen=True)
class Violation:
    """One failed replay check, located at a 0-based event index."""

    case_id: str
    position: int
    kind: str
    detail: str

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "position": self.position,
            "kind": self.kind,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ReplayOutcome:
    allowed_moves: int
    total_moves: int
    violations: tuple[Violation, ...]

    @property
    def fitness(self) -> float:
        return self.allowed_moves / self.total_moves


@dataclass(frozen=True)
class ConformanceReport:
    per_case_fitness: dict[str, float]
    log_fitness: float
    violations: tuple[Violation, ...]
    violating_case_count: int
    allowed_moves: int
    total_moves: int


@dataclass(frozen=True)
class ConformanceSummary:
    text: str
    fitness: float
    violating_case_count: int
    top_kinds: tuple[tuple[str, int], ...]

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "fitness": self.fitness,
            "violating_case_count": self.violating_case_count,
            "top_kinds": [[kind, count] for kind, count in self.top_kinds],
        }


def replay_case(model: ProcessModel, case: Case) -> ReplayOutcome:
    """Replay one case; total moves = 1 start + (length - 1) edges + 1 end."""
    activities = case.activities
    violations: list[Violation] = []
    allowed = 0

    first, last = activities[0], activities[-1]
    if first not in model.activities:
        violations.append(Violation(case.case_id, 0, "unknown-activity", first))
    elif first not in model.allowed_starts:
        violations.append(Violation(case.case_id, 0, "bad-start", first))
    else:
        allowed += 1

    for position in range(1, len(activities)):
        a, b = activities[position - 1], activities[position]
        if a not in model.activities:
            violations.append(Violation(case.case_id, position, "unknown-activity", a))
        elif b not in model.activities:
            violations.append(Violation(case.case_id, position, "unknown-activity", b))
        elif (a, b) not in model.allowed_edges:
            violations.append(
                Violation(case.case_id, position, "disallowed-edge", f"{a} -> {b}")
            )
        else:
            allowed += 1

    end_position = len(activities) - 1
    if last not in model.activities:
        violations.append(Violation(case.case_id, end_position, "unknown-activity", last))
    elif last not in model.allowed_ends:
        violations.append(Violation(case.case_id, end_position, "bad-end", last))
    else:
        allowed += 1

    return ReplayOutcome(
        allowed_moves=allowed,
        total_moves=len(activities) + 1,
        violations=tuple(violations),
    )


def check_conformance(model: ProcessModel, log: EventLog) -> ConformanceReport:
    """Aggregate replay over all cases (kernel-backed, deterministic order)."""
    encoded = kernels.encode_log(log)
    labels = encoded.activities
    n_labels = len(labels)
    known = np.zeros(n_labels, dtype=np.uint8)
    start_ok = np.zeros(n_labels, dtype=np.uint8)
    end_ok = np.zeros(n_labels, dtype=np.uint8)
    edge_ok = np.zeros((max(n_labels, 1), max(n_labels, 1)), dtype=np.uint8)
    code_of = {label: i for i, label in enumerate(labels)}
    for i, label in enumerate(labels):
        if label in model.activities:
            known[i] = 1
        if label in model.allowed_starts:
            start_ok[i] = 1
        if label in model.allowed_ends:
            end_ok[i] = 1
    for a, b in model.allowed_edges:
        if a in code_of and b in code_of:
            edge_ok[code_of[a], code_of[b]] = 1

    allowed_per_case, raw_violations = kernels.replay(
        encoded.offsets, encoded.activity_codes, known, start_ok, end_ok, edge_ok
    )

    violations = tuple(
        Violation(
            case_id=encoded.case_ids[ci],
            position=pos,
            kind=_KIND_BY_CODE[kind],
            detail=(
                f"{labels[a]} -> {labels[b]}"
                if kind == kernels.KIND_DISALLOWED_EDGE
                else labels[a]
            ),
        )
        for ci, pos, kind, a, b in raw_violations
    )

    per_case_fitness: dict[str, float] = {}
    total_allowed = 0
    total_moves = 0
    violating = 0
    for ci, case in enumerate(log.cases):
        case_total = len(case) + 1
        case_allowed = int(allowed_per_case[ci])
        per_case_fitness[case.case_id] = case_allowed / case_total
        total_allowed += case_allowed
        total_moves += case_total
        if case_allowed < case_total:
            violating += 1

    return ConformanceReport(
        per_case_fitness=per_case_fitness,
        log_fitness=total_allowed / total_moves,
        violations=violations,
        violating_case_count=violating,
        allowed_moves=total_allowed,
        total_moves=total_moves,
    )


def conformance_summary(report: ConformanceReport, top_n: int = 4) -> ConformanceSummary:
    """Fitness plus the violation kinds ranked by count (enumeration order on ties)."""
    counts = Counter(v.kind for v in report.violations)
    ranked = sorted(
        ((kind, counts[kind]) for kind in VIOLATION_KINDS if counts[kind]),
        key=lambda item: (-item[1], VIOLATION_KINDS.index(item[0])),
    )[: max(top_n, 0)]
    text = f"fitness {report.log_fitness:.3f}, {report.violating_case_count} violating cases"
    return ConformanceSummary(
        text=text,
        fitness=report.log_fitness,
        violating_case_count=report.violating_case_count,
        top_kinds=tuple(ranked),
    )
