"""Pure-Python pair-scan kernels.

Reference semantics for the compiled backend in ``_speedups.pyx``; both
must return identical values for identical inputs.  Inputs are the arrays
produced by :mod:`pmchat.kernels.encode`.
"""

from __future__ import annotations

BACKEND_NAME = "pure"


def _as_list(values):
    if hasattr(values, "tolist"):
        return values.tolist()
    return [int(v) for v in values]

# Violation kind codes shared with the compiled backend.
KIND_UNKNOWN_ACTIVITY = 0
KIND_DISALLOWED_EDGE = 1
KIND_BAD_START = 2
KIND_BAD_END = 3


def count_edges(offsets, codes, skip_negative=False):
    """Count consecutive within-case pairs; returns {(from, to): count}.

    With ``skip_negative`` a pair is counted only when both codes are
    non-negative (used for resource chains with missing entries).
    """
    offs = _as_list(offsets)
    vals = _as_list(codes)
    counts: dict[tuple[int, int], int] = {}
    for ci in range(len(offs) - 1):
        lo, hi = offs[ci], offs[ci + 1]
        for i in range(lo + 1, hi):
            a, b = vals[i - 1], vals[i]
            if skip_negative and (a < 0 or b < 0):
                continue
            key = (a, b)
            counts[key] = counts.get(key, 0) + 1
    return counts


def pair_deltas(offsets, codes, times_ms):
    """Elapsed whole seconds per consecutive pair; returns {(from, to): [secs...]}.

    Each sample is floor((t_next - t_prev) / 1000); samples keep scan order.
    """
    offs = _as_list(offsets)
    vals = _as_list(codes)
    ts = _as_list(times_ms)
    samples: dict[tuple[int, int], list[int]] = {}
    for ci in range(len(offs) - 1):
        lo, hi = offs[ci], offs[ci + 1]
        for i in range(lo + 1, hi):
            key = (vals[i - 1], vals[i])
            samples.setdefault(key, []).append((ts[i] - ts[i - 1]) // 1000)
    return samples


def replay(offsets, codes, known, start_ok, end_ok, edge_ok):
    """Replay every case against model membership tables.

    Per case the checks are: one start check, one edge check per
    consecutive pair, one end check (total = length + 1).  An unknown
    activity fails its incident checks with the unknown-activity kind
    taking precedence over edge/start/end kinds.

    Returns ``(allowed_per_case, violations)`` where each violation is
    ``(case_index, position, kind, code_a, code_b)`` in scan order;
    ``position`` is the 0-based event index where the check is detected.
    """
    offs = _as_list(offsets)
    vals = _as_list(codes)
    known_l = [bool(x) for x in _as_list(known)]
    start_l = [bool(x) for x in _as_list(start_ok)]
    end_l = [bool(x) for x in _as_list(end_ok)]
    edges = [[bool(v) for v in row] for row in (edge_ok.tolist() if hasattr(edge_ok, "tolist") else edge_ok)]
    n_cases = len(offs) - 1
    allowed = [0] * n_cases
    violations: list[tuple[int, int, int, int, int]] = []

    for ci in range(n_cases):
        lo, hi = offs[ci], offs[ci + 1]
        first = vals[lo]
        last = vals[hi - 1]
        ok = 0
        if not known_l[first]:
            violations.append((ci, 0, KIND_UNKNOWN_ACTIVITY, first, -1))
        elif not start_l[first]:
            violations.append((ci, 0, KIND_BAD_START, first, -1))
        else:
            ok += 1
        for i in range(lo + 1, hi):
            a, b = vals[i - 1], vals[i]
            pos = i - lo
            if not known_l[a]:
                violations.append((ci, pos, KIND_UNKNOWN_ACTIVITY, a, -1))
            elif not known_l[b]:
                violations.append((ci, pos, KIND_UNKNOWN_ACTIVITY, b, -1))
            elif not edges[a][b]:
                violations.append((ci, pos, KIND_DISALLOWED_EDGE, a, b))
            else:
                ok += 1
        end_pos = hi - 1 - lo
        if not known_l[last]:
            violations.append((ci, end_pos, KIND_UNKNOWN_ACTIVITY, last, -1))
        elif not end_l[last]:
            violations.append((ci, end_pos, KIND_BAD_END, last, -1))
        else:
            ok += 1
        allowed[ci] = ok
    return allowed, violations
