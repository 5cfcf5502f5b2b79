"""Provider-agnostic chat-completion gateway with retries and a redaction guard.

Raw log values (case ids, pre-pseudonym resource names, attribute values)
never leave the process: every outbound request is checked against the
log's deny index before a provider is called, and a violation aborts the
send as a structured outcome.  Exhausted retries yield a ``NotAvailable``
outcome rather than an exception, mirroring the N.A. rating category.

Providers: ``mock`` (deterministic, offline; the test default) and
``remote`` (JSON chat-completions endpoint configured via the
``PMCHAT_LLM_*`` environment variables).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass

import httpx

from .errors import RedactionViolationError, ValidationError, mask_value
from .promptengine import extract_section_headers

logger = logging.getLogger(__name__)

MESSAGE_ROLES = ("system", "user", "assistant")
DEFAULT_TEMPERATURE = 0.2
DEFAULT_MAX_OUTPUT_TOKENS = 1024
DEFAULT_TIMEOUT_SECONDS = 60.0
DEFAULT_MAX_CONCURRENCY = 4


class RetryableProviderError(Exception):
    """Transient provider failure: timeout, rate limit, or empty content."""


class FatalProviderError(Exception):
    """Non-retryable provider failure, e.g. authentication."""


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in MESSAGE_ROLES:
            raise ValidationError(f"unknown message role {self.role!r}")
        if self.role in ("user", "assistant") and not self.content.strip():
            raise ValidationError(f"{self.role} messages must have non-empty content")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class CompletionRequest:
    messages: tuple[ChatMessage, ...]
    model_name: str = "default"
    temperature: float = DEFAULT_TEMPERATURE
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS

    def __post_init__(self):
        if not any(m.role == "user" for m in self.messages):
            raise ValidationError("a completion request needs at least one user message")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValidationError("temperature must lie in [0, 2]")

    def last_user_content(self) -> str:
        for message in reversed(self.messages):
            if message.role == "user":
                return message.content
        raise ValidationError("no user message present")


@dataclass(frozen=True)
class CompletionResult:
    content: str
    finish_reason: str  # "complete" | "truncated"
    latency_seconds: float
    provider: str
    attempts: int = 1


@dataclass(frozen=True)
class NotAvailable:
    """Outcome of exhausted retries; maps to the N.A. rating category."""

    reason: str
    attempts: int


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_delay_seconds: float = 1.0
    backoff_factor: float = 2.0

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValidationError("max_attempts must be at least 1")

    def delay_before_attempt(self, attempt: int) -> float:
        """Delay preceding attempt N (2-based); geometric in the attempt number."""
        return self.base_delay_seconds * self.backoff_factor ** (attempt - 2)


@dataclass(frozen=True)
class RedactionReport:
    matches: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.matches

    def masked_matches(self) -> list[str]:
        return [mask_value(m) for m in self.matches]


@dataclass(frozen=True)
class DenyIndex:
    """Raw values that must never appear in an outbound message (exact substrings)."""

    entries: frozenset[str]

    @classmethod
    def build(cls, entries) -> "DenyIndex":
        return cls(entries=frozenset(e for e in entries if e))

    def match(self, text: str) -> tuple[str, ...]:
        return tuple(sorted(entry for entry in self.entries if entry in text))


def serialize_request(request: CompletionRequest) -> str:
    """Canonical JSON body for a request; this is what transports record."""
    return json.dumps(
        {
            "model": request.model_name,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
            "messages": [m.to_dict() for m in request.messages],
        },
        sort_keys=True,
        ensure_ascii=False,
    )


def redaction_guard(request: CompletionRequest, deny_index: DenyIndex) -> RedactionReport:
    """Pass iff no message content contains any deny-index entry as a substring."""
    matched: set[str] = set()
    for message in request.messages:
        matched.update(deny_index.match(message.content))
    report = RedactionReport(matches=tuple(sorted(matched)))
    if not report.passed:
        logger.warning(
            "redaction guard blocked an outbound request (%d matches: %s)",
            len(report.matches),
            ", ".join(report.masked_matches()),
        )
    return report


class Provider:
    """A chat-completion backend; implementations raise the two error kinds above."""

    name = "provider"

    def send(self, request: CompletionRequest) -> CompletionResult:
        raise NotImplementedError


class MockProvider(Provider):
    """Deterministic offline provider.

    Replies with a fixed template naming the section headers found in the
    last user message plus an uppercase digest of the canonical request
    body, so identical requests always produce identical replies.  Fault
    injection: ``fail_times`` makes the first N calls raise a retryable
    error; ``fail_always`` makes every call fail.
    """

    name = "mock"

    def __init__(self, fail_times: int = 0, fail_always: bool = False):
        self.fail_times = fail_times
        self.fail_always = fail_always
        self.calls = 0

    def send(self, request: CompletionRequest) -> CompletionResult:
        self.calls += 1
        if self.fail_always or self.calls <= self.fail_times:
            raise RetryableProviderError(f"injected failure on call {self.calls}")
        body = serialize_request(request)
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest().upper()[:12]
        headers = extract_section_headers(request.last_user_content())
        if headers:
            content = (
                f"Deterministic mock analysis covering {len(headers)} sections "
                f"({', '.join(headers)}). digest={digest}"
            )
        else:
            content = f"Deterministic mock reply. digest={digest}"
        return CompletionResult(
            content=content, finish_reason="complete", latency_seconds=0.0, provider=self.name
        )


class RemoteProvider(Provider):
    """JSON chat-completions endpoint: POST {base_url}/chat/completions."""

    name = "remote"

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        timeout: float = DEFAULT_TIMEOUT_SECONDS,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self._client = client or httpx.Client(timeout=timeout)

    def send(self, request: CompletionRequest) -> CompletionResult:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model or request.model_name,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
            "messages": [m.to_dict() for m in request.messages],
        }
        started = time.perf_counter()
        try:
            response = self._client.post(
                f"{self.base_url}/chat/completions", json=body, headers=headers
            )
        except httpx.TimeoutException as exc:
            raise RetryableProviderError(f"transport timeout: {exc}") from exc
        except httpx.HTTPError as exc:
            raise RetryableProviderError(f"transport error: {exc}") from exc
        latency = time.perf_counter() - started
        if response.status_code in (401, 403):
            raise FatalProviderError(f"authentication failed (HTTP {response.status_code})")
        if response.status_code == 429 or response.status_code >= 500:
            raise RetryableProviderError(f"provider busy (HTTP {response.status_code})")
        if response.status_code != 200:
            raise FatalProviderError(f"unexpected provider response (HTTP {response.status_code})")
        data = response.json()
        try:
            choice = data["choices"][0]
            content = choice["message"]["content"]
            finish = choice.get("finish_reason", "stop")
        except (KeyError, IndexError, TypeError) as exc:
            raise RetryableProviderError(f"malformed provider response: {exc}") from exc
        if not (content or "").strip():
            raise RetryableProviderError("provider returned empty content")
        return CompletionResult(
            content=content,
            finish_reason="truncated" if finish == "length" else "complete",
            latency_seconds=latency,
            provider=self.name,
        )


def complete(request: CompletionRequest, provider: Provider) -> CompletionResult:
    """One provider call; the caller is responsible for the redaction guard."""
    return provider.send(request)


def complete_with_retry(
    request: CompletionRequest,
    policy: RetryPolicy,
    provider: Provider,
    sleep=time.sleep,
) -> CompletionResult | NotAvailable:
    """Retry transient failures with exponential backoff; never raises on exhaustion.

    Fatal provider errors short-circuit immediately.  After
    ``policy.max_attempts`` transient failures the outcome is
    ``NotAvailable`` carrying the last error.
    """
    last_error = "no attempt made"
    for attempt in range(1, policy.max_attempts + 1):
        if attempt > 1:
            sleep(policy.delay_before_attempt(attempt))
        try:
            result = complete(request, provider)
        except RetryableProviderError as exc:
            last_error = str(exc)
            logger.info("attempt %d/%d failed: %s", attempt, policy.max_attempts, exc)
            continue
        return CompletionResult(
            content=result.content,
            finish_reason=result.finish_reason,
            latency_seconds=result.latency_seconds,
            provider=result.provider,
            attempts=attempt,
        )
    return NotAvailable(reason=last_error, attempts=policy.max_attempts)


class LlmGateway:
    """Bundles a provider, retry policy, a concurrency cap, and request recording.

    ``outbound_log`` accumulates the canonical body of every request that
    passed the guard and was handed to the provider; tests use it to prove
    that no raw log value ever reaches the transport.
    """

    def __init__(
        self,
        provider: Provider,
        policy: RetryPolicy | None = None,
        max_concurrency: int = DEFAULT_MAX_CONCURRENCY,
        sleep=time.sleep,
    ):
        self.provider = provider
        self.policy = policy or RetryPolicy()
        self.outbound_log: list[str] = []
        self._semaphore = threading.BoundedSemaphore(max_concurrency)
        self._sleep = sleep

    def run(
        self, request: CompletionRequest, deny_index: DenyIndex | None = None
    ) -> CompletionResult | NotAvailable:
        """Guard, record, and send with retries; raises on redaction violations."""
        if deny_index is not None:
            report = redaction_guard(request, deny_index)
            if not report.passed:
                raise RedactionViolationError(
                    "outbound message contains raw log values and was not sent",
                    matches=report.matches,
                )
        recording = _RecordingProvider(self.provider, self.outbound_log)
        with self._semaphore:
            return complete_with_retry(request, self.policy, recording, sleep=self._sleep)


class _RecordingProvider(Provider):
    """Wraps a provider, appending each outbound body to a shared log."""

    def __init__(self, inner: Provider, log: list[str]):
        self.inner = inner
        self.name = inner.name
        self._log = log

    def send(self, request: CompletionRequest) -> CompletionResult:
        # Append before sending so even failing attempts are recorded.
        self._log.append(serialize_request(request))
        return self.inner.send(request)


def provider_from_env(environ=os.environ) -> Provider:
    """Build the configured provider; the mock is the safe default."""
    kind = environ.get("PMCHAT_PROVIDER", "mock").strip().lower()
    if kind == "mock":
        return MockProvider()
    if kind == "remote":
        base_url = environ.get("PMCHAT_LLM_BASE_URL", "")
        if not base_url:
            raise ValidationError("PMCHAT_LLM_BASE_URL is required for the remote provider")
        return RemoteProvider(
            base_url=base_url,
            model=environ.get("PMCHAT_LLM_MODEL", ""),
            api_key=environ.get("PMCHAT_LLM_API_KEY", ""),
        )
    raise ValidationError(f"unknown provider {kind!r}; expected 'mock' or 'remote'")
