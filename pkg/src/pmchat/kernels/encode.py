"""Integer encoding of an event log for the pair-scan kernels.

Labels are mapped to codes in order of first appearance in the normalized
event stream, which keeps every downstream computation deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..eventlog import EventLog

MISSING = -1


@dataclass(frozen=True)
class EncodedLog:
    """Array view of a log: case offsets plus per-event code/time columns."""

    case_ids: tuple[str, ...]
    activities: tuple[str, ...]
    resources: tuple[str, ...]
    offsets: np.ndarray
    activity_codes: np.ndarray
    resource_codes: np.ndarray
    times_ms: np.ndarray

    @property
    def n_cases(self) -> int:
        return len(self.case_ids)

    @property
    def n_events(self) -> int:
        return int(self.offsets[-1])


def encode_log(log: EventLog) -> EncodedLog:
    activity_code: dict[str, int] = {}
    resource_code: dict[str, int] = {}
    offsets = [0]
    acts: list[int] = []
    res: list[int] = []
    times: list[int] = []
    for case in log.cases:
        for event in case.events:
            acts.append(activity_code.setdefault(event.activity, len(activity_code)))
            if event.resource is None:
                res.append(MISSING)
            else:
                res.append(resource_code.setdefault(event.resource, len(resource_code)))
            times.append(event.timestamp_ms)
        offsets.append(len(acts))
    return EncodedLog(
        case_ids=log.case_ids,
        activities=tuple(activity_code),
        resources=tuple(resource_code),
        offsets=np.asarray(offsets, dtype=np.int64),
        activity_codes=np.asarray(acts, dtype=np.int64),
        resource_codes=np.asarray(res, dtype=np.int64),
        times_ms=np.asarray(times, dtype=np.int64),
    )
