"""Service layer: sessions, HTTP API, and the command-line interface."""

from .sessions import AnalysisResult, Session, SessionManager

__all__ = ["AnalysisResult", "Session", "SessionManager"]
