"""HTTP API binding the engine, prompt builder, gateway, and store together.

All bodies are JSON; errors use the envelope ``{code, message, details}``.
Endpoints are synchronous handlers (FastAPI runs them on a thread pool),
and the store's per-log and per-session locks provide write serialization.
An optional static bearer token (``PMCHAT_API_TOKEN``) protects everything
except ``/healthz``.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .. import kernels
from ..dashboard import ENGINE_MODULES
from ..errors import (
    EmptyLogError,
    EmptyReportError,
    NotFoundError,
    PmchatError,
    PreconditionError,
    ProviderUnavailableError,
    RedactionViolationError,
    SchemaError,
    ValidationError,
)
from ..eventlog import ColumnMapping, LogMetadata, parse_csv
from ..evaluation import GROUP_BY_CHOICES, RatingsStore, distribution, parse_category
from ..llmgateway import LlmGateway, Provider, provider_from_env
from ..pipeline import EngineSettings, analyze_all, analyze_log
from ..store import DataStore
from .sessions import SessionManager

_STATUS_BY_ERROR = {
    NotFoundError: 404,
    SchemaError: 400,
    ValidationError: 400,
    EmptyLogError: 400,
    EmptyReportError: 404,
    PreconditionError: 409,
    RedactionViolationError: 400,
    ProviderUnavailableError: 503,
}


class AnalyzeBody(BaseModel):
    module: str
    dependency_threshold: float | None = None
    frequency_threshold: int | None = None


class SessionBody(BaseModel):
    log_id: str
    style: str


class SessionAnalysisBody(BaseModel):
    module: str
    task: str


class MessageBody(BaseModel):
    text: str


class RatingBody(BaseModel):
    category: str
    sector: str = ""
    gender: str = ""
    style: str = ""
    module: str = ""
    session_id: str = ""


def _envelope(code: str, message: str, details: dict) -> dict:
    return {"code": code, "message": message, "details": details}


def create_app(
    data_dir: str | Path,
    provider: Provider | None = None,
    gateway: LlmGateway | None = None,
    frontend_dist: str | Path | None = None,
) -> FastAPI:
    store = DataStore(data_dir)
    gateway = gateway or LlmGateway(provider or provider_from_env())
    manager = SessionManager(store, gateway)
    ratings = RatingsStore(store.ratings_path)

    app = FastAPI(title="pmchat", version="0.1.0")
    app.state.store = store
    app.state.gateway = gateway
    app.state.manager = manager

    @app.exception_handler(PmchatError)
    def handle_pmchat_error(_request: Request, exc: PmchatError):
        status = next(
            (code for cls, code in _STATUS_BY_ERROR.items() if isinstance(exc, cls)), 500
        )
        return JSONResponse(
            status_code=status, content=_envelope(exc.code, exc.message, exc.details)
        )

    @app.exception_handler(RequestValidationError)
    def handle_request_validation(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content=_envelope("invalid_request", "request body failed validation", {"errors": exc.errors()}),
        )

    @app.middleware("http")
    async def bearer_auth(request: Request, call_next):
        token = os.environ.get("PMCHAT_API_TOKEN", "")
        if token and request.url.path != "/healthz":
            supplied = request.headers.get("Authorization", "")
            if supplied != f"Bearer {token}":
                return JSONResponse(
                    status_code=401,
                    content=_envelope("unauthorized", "missing or invalid bearer token", {}),
                )
        return await call_next(request)

    # -- logs ---------------------------------------------------------------

    @app.post("/logs")
    def ingest_log(
        file: UploadFile = File(...),
        metadata: str = Form(...),
        mapping: str = Form(...),
    ):
        try:
            metadata_obj = LogMetadata.from_dict(json.loads(metadata))
            mapping_obj = ColumnMapping.from_dict(json.loads(mapping))
        except (KeyError, json.JSONDecodeError) as exc:
            raise ValidationError(f"bad metadata/mapping JSON: {exc}") from exc
        raw = file.file.read().decode("utf-8")
        result = parse_csv(raw, mapping_obj, metadata_obj)
        log_id, cached = store.register_log(result)
        return {
            "log_id": log_id,
            "cached": cached,
            "cleaning_report": result.report.to_dict(),
        }

    def _payload_of(log_id: str, module: str) -> dict:
        outputs = store.load_outputs(log_id, [module])
        if module not in outputs:
            raise PreconditionError(
                f"{module} output missing for log {log_id!r}; POST /logs/{log_id}/analyze first"
            )
        return outputs[module].payload

    @app.get("/logs/{log_id}/kpis/structural")
    def get_structural(log_id: str):
        return {"log_id": log_id, **_payload_of(log_id, "dashboard")["structural"]}

    @app.get("/logs/{log_id}/kpis/temporal")
    def get_temporal(log_id: str):
        return {"log_id": log_id, **_payload_of(log_id, "dashboard")["temporal"]}

    @app.get("/logs/{log_id}/dfg")
    def get_dfg(log_id: str):
        return {"log_id": log_id, **_payload_of(log_id, "discovery")["dfg"]}

    @app.get("/logs/{log_id}/variants")
    def get_variants(log_id: str):
        return {"log_id": log_id, "variants": _payload_of(log_id, "discovery")["variants"]}

    @app.get("/logs/{log_id}/performance")
    def get_performance(log_id: str):
        return {"log_id": log_id, **_payload_of(log_id, "performance")}

    @app.get("/logs/{log_id}/conformance")
    def get_conformance(log_id: str):
        return {"log_id": log_id, **_payload_of(log_id, "conformance")}

    @app.get("/logs/{log_id}/handover")
    def get_handover(log_id: str):
        return {"log_id": log_id, **_payload_of(log_id, "orgmining")["handover"]}

    @app.post("/logs/{log_id}/analyze")
    def analyze(log_id: str, body: AnalyzeBody):
        settings = EngineSettings(
            dependency_threshold=(
                body.dependency_threshold
                if body.dependency_threshold is not None
                else EngineSettings().dependency_threshold
            ),
            frequency_threshold=(
                body.frequency_threshold
                if body.frequency_threshold is not None
                else EngineSettings().frequency_threshold
            ),
        )
        if body.module == "all":
            outcomes = analyze_all(store, log_id, settings)
        elif body.module in ENGINE_MODULES:
            outcomes = [analyze_log(store, log_id, body.module, settings)]
        else:
            raise ValidationError(
                f"unknown module {body.module!r}; expected 'all' or one of {ENGINE_MODULES}"
            )
        return {
            "log_id": log_id,
            "results": [
                {"module": o.module, "version": o.version, "cached": o.cached}
                for o in outcomes
            ],
        }

    # -- sessions -----------------------------------------------------------

    @app.post("/sessions")
    def create_session(body: SessionBody):
        session = manager.create_session(body.log_id, body.style)
        return session.to_dict()

    @app.post("/sessions/{session_id}/analysis")
    def session_analysis(session_id: str, body: SessionAnalysisBody):
        result = manager.run_analysis(session_id, body.module, body.task)
        return result.to_dict()

    @app.post("/sessions/{session_id}/message")
    def session_message(session_id: str, body: MessageBody):
        reply = manager.follow_up(session_id, body.text)
        return {"session_id": session_id, "reply": reply.to_dict()}

    @app.get("/sessions/{session_id}/history")
    def session_history(session_id: str):
        session = manager.load_session(session_id)
        return {
            "session_id": session_id,
            "log_id": session.log_id,
            "prompt_style": session.prompt_style,
            "messages": [m.to_dict() for m in session.history],
            "analyses": [a.to_dict() for a in session.analyses],
        }

    # -- ratings ------------------------------------------------------------

    @app.post("/ratings")
    def post_rating(body: RatingBody):
        record = ratings.record_rating(
            category=parse_category(body.category),
            sector=body.sector,
            gender=body.gender,
            style=body.style,
            module=body.module,
            session_id=body.session_id,
        )
        return {"rating_id": record.rating_id}

    @app.get("/ratings/distribution")
    def ratings_distribution(group_by: str = "overall", sector: str | None = None,
                             style: str | None = None, gender: str | None = None):
        if group_by not in GROUP_BY_CHOICES:
            raise ValidationError(f"group_by must be one of {GROUP_BY_CHOICES}")
        report = distribution(
            ratings.load_records(), group_by, sector=sector, style=style, gender=gender
        )
        return report.to_dict()

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "kernel_backend": kernels.active_backend()}

    dist = Path(frontend_dist) if frontend_dist else Path(__file__).resolve().parents[3] / "frontend" / "dist"
    if dist.is_dir():
        app.mount("/ui", StaticFiles(directory=dist, html=True), name="ui")

    return app
