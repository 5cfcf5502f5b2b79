"""Conversational session management over the KPI store and the LLM gateway.

A session binds a log and a prompt style.  The first analysis seeds the
history with a system message; every analysis or follow-up then appends a
user turn and, on success, the assistant turn.  Histories are append-only
and persisted after every change, and the full prompt text of each
analysis is stored verbatim for audit.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone

from ..dashboard import ENGINE_MODULES
from ..errors import (
    PreconditionError,
    ProviderUnavailableError,
    RedactionViolationError,
    ValidationError,
)
from ..evaluation import RatingsStore
from ..llmgateway import ChatMessage, CompletionRequest, DenyIndex, LlmGateway, NotAvailable
from ..promptengine import (
    PROMPT_STYLES,
    AnalysisTask,
    RenderBudget,
    build_prompt,
    default_fields_for,
    estimate_tokens,
    render_module_data,
)
from ..store import DataStore

SYSTEM_PROMPT = (
    "You are a business process analyst and process mining expert. Ground every "
    "answer in the aggregated process-mining figures supplied in the conversation."
)

# Reserved headroom when sub-budgeting the module data inside a prompt.
_PROMPT_OVERHEAD_TOKENS = 64
_MIN_MODULE_DATA_TOKENS = 256


@dataclass
class AnalysisResult:
    session_id: str
    module: str
    task: str
    prompt_text: str
    response: str | None
    not_available: bool
    attempts: int
    latency_seconds: float

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "module": self.module,
            "task": self.task,
            "prompt_text": self.prompt_text,
            "response": self.response,
            "not_available": self.not_available,
            "attempts": self.attempts,
            "latency_seconds": self.latency_seconds,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisResult":
        return cls(
            session_id=data["session_id"],
            module=data["module"],
            task=data["task"],
            prompt_text=data["prompt_text"],
            response=data["response"],
            not_available=data["not_available"],
            attempts=data["attempts"],
            latency_seconds=data["latency_seconds"],
        )


@dataclass
class Session:
    session_id: str
    log_id: str
    prompt_style: str
    created_at: str
    history: list[ChatMessage] = field(default_factory=list)
    analyses: list[AnalysisResult] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "log_id": self.log_id,
            "prompt_style": self.prompt_style,
            "created_at": self.created_at,
            "history": [m.to_dict() for m in self.history],
            "analyses": [a.to_dict() for a in self.analyses],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Session":
        return cls(
            session_id=data["session_id"],
            log_id=data["log_id"],
            prompt_style=data["prompt_style"],
            created_at=data["created_at"],
            history=[ChatMessage(**m) for m in data["history"]],
            analyses=[AnalysisResult.from_dict(a) for a in data["analyses"]],
        )


def truncate_history(
    messages: list[ChatMessage], budget: RenderBudget
) -> list[ChatMessage]:
    """Drop the oldest non-system turns pairwise until the estimate fits."""

    def total(msgs: list[ChatMessage]) -> int:
        return sum(estimate_tokens(m.content) for m in msgs)

    kept = list(messages)
    while total(kept) > budget.max_prompt_tokens:
        index = next((i for i, m in enumerate(kept) if m.role != "system"), None)
        if index is None or index >= len(kept) - 2:
            break  # nothing left to drop but the current turn
        del kept[index : index + 2]
    return kept


class SessionManager:
    def __init__(
        self,
        store: DataStore,
        gateway: LlmGateway,
        budget: RenderBudget | None = None,
        auto_rate_na: bool = False,
    ):
        self.store = store
        self.gateway = gateway
        self.budget = budget or RenderBudget()
        self.auto_rate_na = auto_rate_na
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _session_lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    # -- lifecycle ---------------------------------------------------------

    def create_session(self, log_id: str, prompt_style: str) -> Session:
        if prompt_style not in PROMPT_STYLES:
            raise ValidationError(
                f"unknown prompt style {prompt_style!r}; expected one of {PROMPT_STYLES}"
            )
        outputs = self.store.load_outputs(log_id, ["dashboard"])
        if "dashboard" not in outputs:
            raise PreconditionError(
                f"dashboard output missing for log {log_id!r}; run the dashboard "
                "analysis before opening a session"
            )
        session = Session(
            session_id=self.store.next_session_id(),
            log_id=log_id,
            prompt_style=prompt_style,
            created_at=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ"),
        )
        self.store.save_session(session.to_dict())
        return session

    def load_session(self, session_id: str) -> Session:
        return Session.from_dict(self.store.load_session_data(session_id))

    # -- conversation ------------------------------------------------------

    def run_analysis(self, session_id: str, module: str, task) -> AnalysisResult:
        task = AnalysisTask.parse(task)
        if module not in ENGINE_MODULES:
            raise ValidationError(
                f"unknown module {module!r}; expected one of {ENGINE_MODULES}"
            )
        with self._session_lock(session_id):
            session = self.load_session(session_id)
            outputs = self.store.load_outputs(session.log_id, [module])
            if module not in outputs:
                raise PreconditionError(
                    f"{module} output missing for log {session.log_id!r}; run that "
                    "analysis before requesting it in a session"
                )
            metadata = self.store.load_metadata(session.log_id)
            defaults = default_fields_for(metadata, module, task)
            module_budget = RenderBudget(
                max_prompt_tokens=max(
                    self.budget.max_prompt_tokens - _PROMPT_OVERHEAD_TOKENS,
                    _MIN_MODULE_DATA_TOKENS,
                )
            )
            module_data = render_module_data(outputs, module_budget)
            prompt = build_prompt(
                session.prompt_style, defaults, task, module_data, self.budget
            )
            deny = DenyIndex.build(self.store.load_deny_entries(session.log_id))

            if not session.history:
                session.history.append(ChatMessage(role="system", content=SYSTEM_PROMPT))
            user_turn = ChatMessage(role="user", content=prompt)
            outbound = truncate_history(session.history + [user_turn], self.budget)
            outcome = self.gateway.run(
                CompletionRequest(messages=tuple(outbound)), deny_index=deny
            )

            if isinstance(outcome, NotAvailable):
                result = AnalysisResult(
                    session_id=session_id,
                    module=module,
                    task=task.value,
                    prompt_text=prompt,
                    response=None,
                    not_available=True,
                    attempts=outcome.attempts,
                    latency_seconds=0.0,
                )
                session.history.append(user_turn)
                session.analyses.append(result)
                self.store.save_session(session.to_dict())
                if self.auto_rate_na:
                    self._record_na_rating(session, module)
                return result

            result = AnalysisResult(
                session_id=session_id,
                module=module,
                task=task.value,
                prompt_text=prompt,
                response=outcome.content,
                not_available=False,
                attempts=outcome.attempts,
                latency_seconds=outcome.latency_seconds,
            )
            session.history.append(user_turn)
            session.history.append(ChatMessage(role="assistant", content=outcome.content))
            session.analyses.append(result)
            self.store.save_session(session.to_dict())
            return result

    def follow_up(self, session_id: str, user_text: str) -> ChatMessage:
        if not user_text.strip():
            raise ValidationError("follow-up text must be non-empty")
        with self._session_lock(session_id):
            session = self.load_session(session_id)
            if not session.analyses:
                raise PreconditionError(
                    "run at least one analysis before asking follow-up questions"
                )
            deny = DenyIndex.build(self.store.load_deny_entries(session.log_id))
            matches = deny.match(user_text)
            if matches:
                # Rejected before anything is persisted: history grows by zero.
                raise RedactionViolationError(
                    "the follow-up message contains raw log values and was not sent",
                    matches=matches,
                )
            user_turn = ChatMessage(role="user", content=user_text)
            outbound = truncate_history(session.history + [user_turn], self.budget)
            outcome = self.gateway.run(
                CompletionRequest(messages=tuple(outbound)), deny_index=deny
            )
            if isinstance(outcome, NotAvailable):
                session.history.append(user_turn)
                self.store.save_session(session.to_dict())
                raise ProviderUnavailableError(
                    f"the provider gave no answer after {outcome.attempts} attempts",
                    details={"attempts": outcome.attempts, "reason": outcome.reason},
                )
            reply = ChatMessage(role="assistant", content=outcome.content)
            session.history.append(user_turn)
            session.history.append(reply)
            self.store.save_session(session.to_dict())
            return reply

    def _record_na_rating(self, session: Session, module: str) -> None:
        metadata = self.store.load_metadata(session.log_id)
        RatingsStore(self.store.ratings_path).record_rating(
            category="NA",
            sector=metadata.sector,
            style=session.prompt_style,
            module=module,
            session_id=session.session_id,
        )
