"""File-backed data store: logs, KPI outputs, sessions, and ratings.

Layout under the data directory::

    logs/{log_id}/events.csv            canonical four-column log
    logs/{log_id}/metadata.json
    logs/{log_id}/resource_map.json     raw resource name -> pseudonym
    logs/{log_id}/deny_index.json       raw values barred from outbound prompts
    logs/{log_id}/cleaning_report.json
    logs/{log_id}/outputs/{module}.v{n}.json
    logs/{log_id}/outputs/index.json    module -> latest version
    sessions/{session_id}.json
    ratings/ratings.csv

Writes are atomic (write-temp-then-rename); the store is single-writer
per log id and per session, enforced with in-process locks.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from .dashboard import ENGINE_MODULES, SCHEMA_VERSION, ModuleOutputRecord
from .errors import NotFoundError, ValidationError
from .eventlog import (
    CleaningReport,
    EventLog,
    LogMetadata,
    ParseResult,
    canonical_csv,
    parse_canonical_csv,
)

_SESSION_PREFIX = "s"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def dump_json(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


class DataStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._log_locks: dict[str, threading.Lock] = {}
        self._session_lock = threading.Lock()

    # -- paths -------------------------------------------------------------

    @property
    def logs_dir(self) -> Path:
        return self.root / "logs"

    @property
    def sessions_dir(self) -> Path:
        return self.root / "sessions"

    @property
    def ratings_path(self) -> Path:
        return self.root / "ratings" / "ratings.csv"

    def _log_dir(self, log_id: str) -> Path:
        return self.logs_dir / log_id

    def log_lock(self, log_id: str) -> threading.Lock:
        with self._lock:
            return self._log_locks.setdefault(log_id, threading.Lock())

    # -- logs ----------------------------------------------------------------

    def register_log(self, result: ParseResult) -> tuple[str, bool]:
        """Persist a parsed log; returns (log_id, cached) with cached=True on re-ingest."""
        log = result.log
        log_dir = self._log_dir(log.log_id)
        with self.log_lock(log.log_id):
            if (log_dir / "events.csv").exists():
                return log.log_id, True
            _atomic_write(log_dir / "events.csv", canonical_csv(log.cases))
            _atomic_write(log_dir / "metadata.json", dump_json(log.metadata.to_dict()))
            _atomic_write(
                log_dir / "resource_map.json", dump_json(dict(result.resource_map))
            )
            _atomic_write(
                log_dir / "deny_index.json",
                dump_json({"entries": sorted(result.deny_entries)}),
            )
            _atomic_write(
                log_dir / "cleaning_report.json", dump_json(result.report.to_dict())
            )
        return log.log_id, False

    def log_exists(self, log_id: str) -> bool:
        return (self._log_dir(log_id) / "events.csv").exists()

    def log_ids(self) -> list[str]:
        if not self.logs_dir.exists():
            return []
        return sorted(p.name for p in self.logs_dir.iterdir() if (p / "events.csv").exists())

    def _require_log(self, log_id: str) -> Path:
        log_dir = self._log_dir(log_id)
        if not (log_dir / "events.csv").exists():
            raise NotFoundError(f"log {log_id!r} is not registered")
        return log_dir

    def load_log(self, log_id: str) -> EventLog:
        log_dir = self._require_log(log_id)
        metadata = self.load_metadata(log_id)
        log = parse_canonical_csv((log_dir / "events.csv").read_text("utf-8"), metadata)
        if log.log_id != log_id:
            raise ValidationError(
                f"stored log {log_id!r} re-hashes to {log.log_id!r}; store is corrupt"
            )
        return log

    def load_metadata(self, log_id: str) -> LogMetadata:
        log_dir = self._require_log(log_id)
        return LogMetadata.from_dict(json.loads((log_dir / "metadata.json").read_text("utf-8")))

    def load_cleaning_report(self, log_id: str) -> CleaningReport:
        log_dir = self._require_log(log_id)
        data = json.loads((log_dir / "cleaning_report.json").read_text("utf-8"))
        return CleaningReport(
            input_rows=data["input_rows"],
            surviving_events=data["surviving_events"],
            dropped=data["dropped"],
        )

    def load_deny_entries(self, log_id: str) -> frozenset[str]:
        log_dir = self._require_log(log_id)
        data = json.loads((log_dir / "deny_index.json").read_text("utf-8"))
        return frozenset(data["entries"])

    # -- KPI outputs -----------------------------------------------------------

    def _outputs_dir(self, log_id: str) -> Path:
        return self._log_dir(log_id) / "outputs"

    def _read_index(self, log_id: str) -> dict[str, int]:
        index_path = self._outputs_dir(log_id) / "index.json"
        if not index_path.exists():
            return {}
        return json.loads(index_path.read_text("utf-8"))

    def store_output(self, record: ModuleOutputRecord) -> int:
        """Durably write a module payload; later writes supersede, history remains."""
        if record.module not in ENGINE_MODULES:
            raise ValidationError(
                f"unknown module {record.module!r}; expected one of {ENGINE_MODULES}"
            )
        try:
            json.dumps(record.payload)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"payload is not JSON-serializable: {exc}") from exc
        self._require_log(record.log_id)
        with self.log_lock(record.log_id):
            index = self._read_index(record.log_id)
            version = index.get(record.module, 0) + 1
            out_dir = self._outputs_dir(record.log_id)
            _atomic_write(
                out_dir / f"{record.module}.v{version}.json", dump_json(record.to_dict())
            )
            index[record.module] = version
            _atomic_write(out_dir / "index.json", dump_json(index))
        return version

    def _load_output_version(self, log_id: str, module: str, version: int) -> ModuleOutputRecord:
        path = self._outputs_dir(log_id) / f"{module}.v{version}.json"
        data = json.loads(path.read_text("utf-8"))
        if data["schema_version"] > SCHEMA_VERSION:
            raise ValidationError(
                f"output {module}.v{version} uses schema version {data['schema_version']}, "
                f"newer than the supported {SCHEMA_VERSION}"
            )
        return ModuleOutputRecord.from_dict(data)

    def load_outputs(
        self, log_id: str, modules: list[str] | None = None
    ) -> dict[str, ModuleOutputRecord]:
        """Latest record per requested module; missing modules are simply absent."""
        self._require_log(log_id)
        index = self._read_index(log_id)
        wanted = modules if modules is not None else list(ENGINE_MODULES)
        result: dict[str, ModuleOutputRecord] = {}
        for module in wanted:
            if module in index:
                result[module] = self._load_output_version(log_id, module, index[module])
        return result

    def latest_version(self, log_id: str, module: str) -> int:
        self._require_log(log_id)
        return self._read_index(log_id).get(module, 0)

    def output_history(self, log_id: str, module: str) -> list[ModuleOutputRecord]:
        self._require_log(log_id)
        index = self._read_index(log_id)
        latest = index.get(module, 0)
        return [
            self._load_output_version(log_id, module, version)
            for version in range(1, latest + 1)
        ]

    # -- sessions ----------------------------------------------------------------

    def next_session_id(self) -> str:
        """Monotonic ids (s0001, s0002, ...) per data directory."""
        with self._session_lock:
            self.sessions_dir.mkdir(parents=True, exist_ok=True)
            existing = [
                int(p.stem[len(_SESSION_PREFIX) :])
                for p in self.sessions_dir.glob(f"{_SESSION_PREFIX}*.json")
                if p.stem[len(_SESSION_PREFIX) :].isdigit()
            ]
            return f"{_SESSION_PREFIX}{max(existing, default=0) + 1:04d}"

    def save_session(self, session_data: dict) -> None:
        _atomic_write(
            self.sessions_dir / f"{session_data['session_id']}.json", dump_json(session_data)
        )

    def load_session_data(self, session_id: str) -> dict:
        path = self.sessions_dir / f"{session_id}.json"
        if not path.exists():
            raise NotFoundError(f"session {session_id!r} does not exist")
        return json.loads(path.read_text("utf-8"))

    def session_ids(self) -> list[str]:
        if not self.sessions_dir.exists():
            return []
        return sorted(p.stem for p in self.sessions_dir.glob(f"{_SESSION_PREFIX}*.json"))
