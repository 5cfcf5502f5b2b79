# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pair-scan kernels; must mirror ``_pure`` exactly."""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector

cnp.import_array()

BACKEND_NAME = "compiled"

KIND_UNKNOWN_ACTIVITY = 0
KIND_DISALLOWED_EDGE = 1
KIND_BAD_START = 2
KIND_BAD_END = 3

cdef int64_t _max_code(cnp.int64_t[::1] codes) nogil:
    cdef Py_ssize_t i
    cdef int64_t top = 0
    for i in range(codes.shape[0]):
        if codes[i] + 1 > top:
            top = codes[i] + 1
    return top


def count_edges(cnp.int64_t[::1] offsets, cnp.int64_t[::1] codes, bint skip_negative=False):
    """Count consecutive within-case pairs; returns {(from, to): count}."""
    cdef unordered_map[int64_t, int64_t] counts
    cdef Py_ssize_t ci, i
    cdef int64_t a, b, lo, hi
    cdef int64_t span = _max_code(codes)
    if span == 0:
        span = 1
    with nogil:
        for ci in range(offsets.shape[0] - 1):
            lo = offsets[ci]
            hi = offsets[ci + 1]
            for i in range(lo + 1, hi):
                a = codes[i - 1]
                b = codes[i]
                if skip_negative and (a < 0 or b < 0):
                    continue
                counts[a * span + b] += 1
    cdef dict packed = counts  # coerces to {packed_key: count}
    result = {}
    for key, value in packed.items():
        result[(key // span, key % span)] = value
    return result


def pair_deltas(cnp.int64_t[::1] offsets, cnp.int64_t[::1] codes, cnp.int64_t[::1] times_ms):
    """Elapsed whole seconds per consecutive pair; returns {(from, to): [secs...]}."""
    cdef unordered_map[int64_t, vector[int64_t]] samples
    cdef Py_ssize_t ci, i
    cdef int64_t lo, hi, key
    cdef int64_t span = _max_code(codes)
    if span == 0:
        span = 1
    with nogil:
        for ci in range(offsets.shape[0] - 1):
            lo = offsets[ci]
            hi = offsets[ci + 1]
            for i in range(lo + 1, hi):
                key = codes[i - 1] * span + codes[i]
                samples[key].push_back((times_ms[i] - times_ms[i - 1]) // 1000)
    cdef dict packed = samples  # coerces to {packed_key: [secs...]}
    result = {}
    for key, value in packed.items():
        result[(key // span, key % span)] = value
    return result


def replay(
    cnp.int64_t[::1] offsets,
    cnp.int64_t[::1] codes,
    cnp.uint8_t[::1] known,
    cnp.uint8_t[::1] start_ok,
    cnp.uint8_t[::1] end_ok,
    cnp.uint8_t[:, ::1] edge_ok,
):
    """Replay cases against membership tables; see ``_pure.replay`` for semantics."""
    cdef Py_ssize_t n_cases = offsets.shape[0] - 1
    cdef cnp.ndarray[cnp.int64_t, ndim=1] allowed = np.zeros(n_cases, dtype=np.int64)
    cdef cnp.int64_t[::1] allowed_v = allowed
    violations = []
    cdef Py_ssize_t ci, i
    cdef int64_t lo, hi, first, last, a, b, pos, ok
    for ci in range(n_cases):
        lo = offsets[ci]
        hi = offsets[ci + 1]
        first = codes[lo]
        last = codes[hi - 1]
        ok = 0
        if not known[first]:
            violations.append((ci, 0, KIND_UNKNOWN_ACTIVITY, first, -1))
        elif not start_ok[first]:
            violations.append((ci, 0, KIND_BAD_START, first, -1))
        else:
            ok += 1
        for i in range(lo + 1, hi):
            a = codes[i - 1]
            b = codes[i]
            pos = i - lo
            if not known[a]:
                violations.append((ci, pos, KIND_UNKNOWN_ACTIVITY, a, -1))
            elif not known[b]:
                violations.append((ci, pos, KIND_UNKNOWN_ACTIVITY, b, -1))
            elif not edge_ok[a, b]:
                violations.append((ci, pos, KIND_DISALLOWED_EDGE, a, b))
            else:
                ok += 1
        pos = hi - 1 - lo
        if not known[last]:
            violations.append((ci, pos, KIND_UNKNOWN_ACTIVITY, last, -1))
        elif not end_ok[last]:
            violations.append((ci, pos, KIND_BAD_END, last, -1))
        else:
            ok += 1
        allowed_v[ci] = ok
    return allowed.tolist(), violations
