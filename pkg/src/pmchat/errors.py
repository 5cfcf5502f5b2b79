"""Exception hierarchy shared across the toolkit.

Every error carries a stable ``code`` so the HTTP layer can emit a uniform
``{code, message, details}`` envelope without inspecting exception types.
"""

from __future__ import annotations

from typing import Any


class PmchatError(Exception):
    """Base class for all toolkit errors."""

    code = "error"

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class SchemaError(PmchatError):
    """The input data does not match the expected schema (e.g. missing CSV columns)."""

    code = "schema_error"


class ValidationError(PmchatError):
    """A value or payload violates a documented contract."""

    code = "validation_error"


class EmptyLogError(PmchatError):
    """Parsing or filtering left no events to work with."""

    code = "empty_log"


class NotFoundError(PmchatError):
    """A referenced log, session, or record does not exist."""

    code = "not_found"


class PreconditionError(PmchatError):
    """The operation needs state that has not been produced yet (e.g. missing KPIs)."""

    code = "precondition_failed"


class EmptyReportError(PmchatError):
    """A ratings query matched no records."""

    code = "empty_report"


class RedactionViolationError(PmchatError):
    """An outbound message contains raw log values and was not sent."""

    code = "redaction_violation"

    def __init__(self, message: str, matches: tuple[str, ...]):
        # Matched entries are masked in the message/details; the raw entries
        # stay on the attribute for in-process callers only.
        masked = [mask_value(m) for m in matches]
        super().__init__(message, details={"matched_count": len(matches), "matched": masked})
        self.matches = matches


class ProviderUnavailableError(PmchatError):
    """The completion provider exhausted its retries on an interactive turn."""

    code = "provider_unavailable"


def mask_value(value: str) -> str:
    """Mask a sensitive value for logs and API responses, keeping only a hint."""
    if len(value) <= 2:
        return value[:1] + "…"
    return value[0] + "…" + value[-1] + f" ({len(value)} chars)"
