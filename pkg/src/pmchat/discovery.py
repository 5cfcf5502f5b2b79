"""Process discovery: directly-follows graph, variants, and a thresholded model.

The model keeps every observed activity and admits an edge when its
frequency reaches ``frequency_threshold`` and its dependency score reaches
``dependency_threshold``.  A dependency threshold of 0 disables the
dependency filter entirely, so discovery at ``(0.0, 1)`` admits everything
it saw and replays its own log perfectly.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from . import kernels
from .errors import ValidationError
from .eventlog import EventLog


@dataclass(frozen=True)
class DirectlyFollowsGraph:
    """Activity nodes with directly-follows edge frequencies and start/end tallies."""

    activity_frequencies: dict[str, int]
    edges: dict[tuple[str, str], int]
    start_activities: dict[str, int]
    end_activities: dict[str, int]

    @property
    def total_edge_frequency(self) -> int:
        return sum(self.edges.values())

    def edge_count(self, source: str, target: str) -> int:
        return self.edges.get((source, target), 0)

    def sorted_edges(self) -> list[tuple[str, str, int]]:
        """Edges sorted by frequency descending, then lexicographically."""
        return sorted(
            ((a, b, n) for (a, b), n in self.edges.items()),
            key=lambda item: (-item[2], item[0], item[1]),
        )

    def to_dict(self) -> dict:
        return {
            "activity_frequencies": dict(sorted(self.activity_frequencies.items())),
            "edges": [
                {"from": a, "to": b, "frequency": n} for a, b, n in self.sorted_edges()
            ],
            "start_activities": dict(sorted(self.start_activities.items())),
            "end_activities": dict(sorted(self.end_activities.items())),
        }


@dataclass(frozen=True)
class Variant:
    """A distinct activity sequence with its case count and one example case."""

    activity_sequence: tuple[str, ...]
    frequency: int
    example_case_id: str

    def to_dict(self) -> dict:
        return {
            "sequence": list(self.activity_sequence),
            "frequency": self.frequency,
            "example_case_id": self.example_case_id,
        }


@dataclass(frozen=True)
class ProcessModel:
    """The reference behavior conformance checks replay against."""

    activities: frozenset[str]
    allowed_edges: frozenset[tuple[str, str]]
    allowed_starts: frozenset[str]
    allowed_ends: frozenset[str]
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        stray = {a for edge in self.allowed_edges for a in edge} - self.activities
        stray |= self.allowed_starts - self.activities
        stray |= self.allowed_ends - self.activities
        if stray:
            raise ValidationError(
                "model references activities outside its activity set: "
                + ", ".join(sorted(stray))
            )

    def to_dict(self) -> dict:
        return {
            "activities": sorted(self.activities),
            "allowed_edges": [[a, b] for a, b in sorted(self.allowed_edges)],
            "allowed_starts": sorted(self.allowed_starts),
            "allowed_ends": sorted(self.allowed_ends),
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProcessModel":
        return cls(
            activities=frozenset(data["activities"]),
            allowed_edges=frozenset((a, b) for a, b in data["allowed_edges"]),
            allowed_starts=frozenset(data["allowed_starts"]),
            allowed_ends=frozenset(data["allowed_ends"]),
            warnings=tuple(data.get("warnings", ())),
        )


def build_dfg(log: EventLog) -> DirectlyFollowsGraph:
    """Count every consecutive within-case pair plus start/end activities."""
    encoded = kernels.encode_log(log)
    labels = encoded.activities
    pair_counts = kernels.count_edges(encoded.offsets, encoded.activity_codes)
    edges = {(labels[a], labels[b]): n for (a, b), n in pair_counts.items()}

    frequencies: Counter[str] = Counter()
    starts: Counter[str] = Counter()
    ends: Counter[str] = Counter()
    for case in log.cases:
        starts[case.events[0].activity] += 1
        ends[case.events[-1].activity] += 1
        for event in case.events:
            frequencies[event.activity] += 1
    return DirectlyFollowsGraph(
        activity_frequencies=dict(frequencies),
        edges=edges,
        start_activities=dict(starts),
        end_activities=dict(ends),
    )


def extract_variants(log: EventLog) -> list[Variant]:
    """One variant per distinct activity sequence, ordered by frequency then sequence."""
    counts: Counter[tuple[str, ...]] = Counter()
    examples: dict[tuple[str, ...], str] = {}
    for case in log.cases:
        sequence = case.activities
        counts[sequence] += 1
        examples.setdefault(sequence, case.case_id)
    return [
        Variant(activity_sequence=seq, frequency=n, example_case_id=examples[seq])
        for seq, n in sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    ]


def dependency_measure(dfg: DirectlyFollowsGraph, a: str, b: str) -> float:
    """Directional dependency in (-1, 1): (|a>b| - |b>a|) / (|a>b| + |b>a| + 1).

    For self-relations the two counts coincide and the score is 0.
    Absent edges count as 0, so unrelated activities also score 0.
    """
    forward = dfg.edge_count(a, b)
    backward = dfg.edge_count(b, a)
    return (forward - backward) / (forward + backward + 1)


def discover_model(
    log: EventLog,
    dependency_threshold: float = 0.5,
    frequency_threshold: int = 2,
) -> ProcessModel:
    """Thresholded-DFG discovery.

    Edges need frequency >= ``frequency_threshold`` and, when the
    dependency threshold is positive, a dependency score >= that
    threshold.  Start and end activities need their observed count to
    reach the frequency threshold.  If no edge survives, the model is
    still returned with a degenerate-model warning attached.
    """
    if not 0.0 <= dependency_threshold < 1.0:
        raise ValidationError("dependency_threshold must lie in [0, 1)")
    if frequency_threshold < 1:
        raise ValidationError("frequency_threshold must be a positive integer")

    dfg = build_dfg(log)
    allowed_edges = frozenset(
        edge
        for edge, count in dfg.edges.items()
        if count >= frequency_threshold
        and (
            dependency_threshold == 0.0
            or dependency_measure(dfg, *edge) >= dependency_threshold
        )
    )
    warnings: tuple[str, ...] = ()
    if not allowed_edges:
        warnings = (
            "degenerate model: thresholds excluded every directly-follows edge",
        )
    return ProcessModel(
        activities=frozenset(dfg.activity_frequencies),
        allowed_edges=allowed_edges,
        allowed_starts=frozenset(
            a for a, n in dfg.start_activities.items() if n >= frequency_threshold
        ),
        allowed_ends=frozenset(
            a for a, n in dfg.end_activities.items() if n >= frequency_threshold
        ),
        warnings=warnings,
    )


def dfg_to_dot(dfg: DirectlyFollowsGraph) -> str:
    """Render the DFG as DOT text with frequency-labelled nodes and edges."""
    lines = ["digraph dfg {", "  rankdir=LR;"]
    for activity, count in sorted(dfg.activity_frequencies.items()):
        lines.append(f'  "{activity}" [label="{activity} ({count})"];')
    for a, b, n in dfg.sorted_edges():
        lines.append(f'  "{a}" -> "{b}" [label="{n}"];')
    for activity in sorted(dfg.start_activities):
        lines.append(f'  start -> "{activity}" [style=dashed];')
    for activity in sorted(dfg.end_activities):
        lines.append(f'  "{activity}" -> end [style=dashed];')
    lines.append("  start [shape=circle]; end [shape=doublecircle];")
    lines.append("}")
    return "\n".join(lines) + "\n"
