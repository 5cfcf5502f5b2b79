"""Organizational mining over pseudonymized resources.

Handover of work counts a consecutive event pair only when both events
carry a resource; a missing resource breaks the chain rather than
fabricating an interaction.  Self-handovers count.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from . import kernels
from .eventlog import EventLog


@dataclass(frozen=True)
class HandoverNetwork:
    """Directed resource-to-resource handover counts."""

    resources: frozenset[str]
    edges: dict[tuple[str, str], int]
    warnings: tuple[str, ...] = field(default=())

    @property
    def total_handovers(self) -> int:
        return sum(self.edges.values())

    def sorted_edges(self) -> list[tuple[str, str, int]]:
        return sorted(
            ((a, b, n) for (a, b), n in self.edges.items()),
            key=lambda item: (-item[2], item[0], item[1]),
        )

    def to_dict(self) -> dict:
        return {
            "resources": sorted(self.resources),
            "edges": [{"from": a, "to": b, "count": n} for a, b, n in self.sorted_edges()],
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class ResourceActivityMatrix:
    """Event counts per (resource, activity) pair; resource-less events excluded."""

    counts: dict[tuple[str, str], int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_rows(self) -> list[dict]:
        return [
            {"resource": r, "activity": a, "count": n}
            for (r, a), n in sorted(self.counts.items())
        ]


def handover_network(log: EventLog) -> HandoverNetwork:
    """Count handovers between consecutive resourced events within each case."""
    encoded = kernels.encode_log(log)
    labels = encoded.resources
    pair_counts = kernels.count_edges(
        encoded.offsets, encoded.resource_codes, skip_negative=True
    )
    edges = {(labels[a], labels[b]): n for (a, b), n in pair_counts.items()}
    warnings: tuple[str, ...] = ()
    if not labels:
        warnings = ("no event carries a resource; handover network is empty",)
    return HandoverNetwork(resources=frozenset(labels), edges=edges, warnings=warnings)


def resource_activity_matrix(log: EventLog) -> ResourceActivityMatrix:
    counts: Counter[tuple[str, str]] = Counter()
    for event in log.iter_events():
        if event.resource is not None:
            counts[(event.resource, event.activity)] += 1
    return ResourceActivityMatrix(counts=dict(counts))


def workload_stats(log: EventLog) -> dict[str, int]:
    """Events per resource, sorted by count descending then resource name."""
    matrix = resource_activity_matrix(log)
    totals: Counter[str] = Counter()
    for (resource, _), count in matrix.counts.items():
        totals[resource] += count
    return dict(sorted(totals.items(), key=lambda item: (-item[1], item[0])))


def handover_to_dot(network: HandoverNetwork) -> str:
    lines = ["digraph handover {", "  rankdir=LR;"]
    for resource in sorted(network.resources):
        lines.append(f'  "{resource}";')
    for a, b, n in network.sorted_edges():
        lines.append(f'  "{a}" -> "{b}" [label="{n}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
