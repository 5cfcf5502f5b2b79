"""Benchmark the compiled pair-scan kernels against the pure-Python fallback.

Builds a synthetic log (default ~200k events), then times the three kernels
and the engine operations that sit on top of them under each backend.

    python benchmarks/bench_kernels.py [--events 200000] [--repeat 3]
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from pmchat import kernels
from pmchat.conformance import check_conformance
from pmchat.discovery import build_dfg, discover_model
from pmchat.eventlog import Event, LogMetadata, log_from_events
from pmchat.orgmining import handover_network
from pmchat.performance import edge_waiting_stats


def synthetic_log(target_events: int, seed: int = 1) -> "tuple":
    rng = random.Random(seed)
    activities = [f"step-{i:02d}" for i in range(30)]
    resources = [f"staff-{i:02d}" for i in range(40)]
    events = []
    case = 0
    while len(events) < target_events:
        case += 1
        t = 1_700_000_000_000 + rng.randint(0, 10**6) * 1000
        for _ in range(rng.randint(5, 35)):
            events.append(
                Event(
                    case_id=f"case-{case:06d}",
                    activity=rng.choice(activities),
                    timestamp_ms=t,
                    resource=rng.choice(resources),
                )
            )
            t += rng.randint(0, 3600) * 1000
    metadata = LogMetadata(
        sector="unknown", economic_activity="unknown",
        process_name="benchmark", organization="unknown",
    )
    return log_from_events(events, metadata)


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--events", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    print(f"building synthetic log (~{args.events} events) ...")
    log = synthetic_log(args.events)
    print(f"log: {len(log.cases)} cases, {log.total_events} events")
    encoded = kernels.encode_log(log)
    n = len(encoded.activities)
    known = np.ones(n, dtype=np.uint8)
    start_ok = np.ones(n, dtype=np.uint8)
    end_ok = np.ones(n, dtype=np.uint8)
    edge_ok = np.ones((n, n), dtype=np.uint8)
    model = discover_model(log, 0.0, 1)

    rows = []
    cases = {
        "kernel count_edges": lambda: kernels.count_edges(encoded.offsets, encoded.activity_codes),
        "kernel pair_deltas": lambda: kernels.pair_deltas(
            encoded.offsets, encoded.activity_codes, encoded.times_ms
        ),
        "kernel replay": lambda: kernels.replay(
            encoded.offsets, encoded.activity_codes, known, start_ok, end_ok, edge_ok
        ),
        "build_dfg": lambda: build_dfg(log),
        "edge_waiting_stats": lambda: edge_waiting_stats(log),
        "handover_network": lambda: handover_network(log),
        "check_conformance": lambda: check_conformance(model, log),
    }

    available = kernels.available_backends()
    timings: dict[str, dict[str, float]] = {name: {} for name in cases}
    for backend in available:
        kernels.use_backend(backend)
        for name, fn in cases.items():
            timings[name][backend] = _time(fn, args.repeat)

    width = max(len(name) for name in cases) + 2
    header = f"{'operation'.ljust(width)}" + "".join(f"{b:>12}" for b in available)
    if len(available) == 2:
        header += f"{'speedup':>10}"
    print()
    print(header)
    print("-" * len(header))
    for name, per_backend in timings.items():
        line = name.ljust(width) + "".join(f"{per_backend[b] * 1000:>10.1f}ms" for b in available)
        if len(available) == 2:
            line += f"{per_backend['pure'] / per_backend['compiled']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
