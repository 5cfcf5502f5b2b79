"""Hot-loop kernels with a compiled core and a pure-Python fallback.

The compiled extension (``_speedups``, Cython) is preferred when it
imported cleanly; otherwise the pure backend is used.  Set
``PMCHAT_PURE_PYTHON=1`` to force the fallback, or call :func:`use_backend`
(tests and the benchmark do this) to switch explicitly.
"""

from __future__ import annotations

import os

from . import _pure
from .encode import MISSING, EncodedLog, encode_log

KIND_UNKNOWN_ACTIVITY = _pure.KIND_UNKNOWN_ACTIVITY
KIND_DISALLOWED_EDGE = _pure.KIND_DISALLOWED_EDGE
KIND_BAD_START = _pure.KIND_BAD_START
KIND_BAD_END = _pure.KIND_BAD_END

_BACKENDS = {"pure": _pure}

try:  # pragma: no cover - exercised only when the extension is built
    from . import _speedups  # type: ignore[attr-defined]

    _BACKENDS["compiled"] = _speedups
except ImportError:  # pragma: no cover
    _speedups = None

_FORCE_PURE = os.environ.get("PMCHAT_PURE_PYTHON", "").strip().lower() in {"1", "true", "yes"}
_active = _BACKENDS["pure"] if (_FORCE_PURE or "compiled" not in _BACKENDS) else _BACKENDS["compiled"]


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return _active.BACKEND_NAME


def use_backend(name: str) -> str:
    """Switch the active backend ('pure' or 'compiled'); returns the new name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; available: {available_backends()}")
    _active = _BACKENDS[name]
    return _active.BACKEND_NAME


def count_edges(offsets, codes, skip_negative=False):
    return _active.count_edges(offsets, codes, skip_negative)


def pair_deltas(offsets, codes, times_ms):
    return _active.pair_deltas(offsets, codes, times_ms)


def replay(offsets, codes, known, start_ok, end_ok, edge_ok):
    return _active.replay(offsets, codes, known, start_ok, end_ok, edge_ok)


__all__ = [
    "EncodedLog",
    "MISSING",
    "encode_log",
    "count_edges",
    "pair_deltas",
    "replay",
    "available_backends",
    "active_backend",
    "use_backend",
    "KIND_UNKNOWN_ACTIVITY",
    "KIND_DISALLOWED_EDGE",
    "KIND_BAD_START",
    "KIND_BAD_END",
]
