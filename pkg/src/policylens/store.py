"""Durable, domain-keyed persistence plus the cached assessment pipeline.

One SQLite file holds assessments, policy documents, chat threads, the
settings singleton, carryover memory, activity events, and short-lived
negative cache entries. The store also owns request coalescing: at most one
assessment pipeline runs per domain at any instant, and concurrent callers
for the same domain all receive that single run's result.
"""

from __future__ import annotations

import hashlib
import json
import sqlite3
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

from .acquisition import (
    AcquisitionConfig,
    AcquisitionStatus,
    PolicyDocument,
    acquire_policy,
    registrable_domain,
)
from .assessment import (
    AssessmentUnavailableError,
    PolicyAssessment,
    assess_domain,
)
from .llm import LlmGateway
from .prompts import UserSettings

DEFAULT_NEGATIVE_TTL = 600.0  # seconds


class ResultStatus(str, Enum):
    OK = "ok"
    LINK_NOT_FOUND = "link_not_found"
    FETCH_BLOCKED = "fetch_blocked"
    TOO_SHORT = "too_short"
    ASSESSMENT_UNAVAILABLE = "assessment_unavailable"


class EventKind(str, Enum):
    PANEL_OPENED = "panel_opened"
    PANEL_CLOSED = "panel_closed"
    QUESTION_ASKED = "question_asked"
    SUGGESTION_USED = "suggestion_used"
    SETTINGS_CHANGED = "settings_changed"
    ASSESSMENT_REQUESTED = "assessment_requested"
    POLICY_VIEWED = "policy_viewed"


@dataclass(frozen=True)
class ActivityEvent:
    at: datetime
    kind: EventKind
    payload: dict[str, str] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"at": self.at.isoformat(), "kind": self.kind.value, "payload": dict(self.payload)}


@dataclass(frozen=True)
class DomainResult:
    """Outcome of the assessment pipeline for one domain."""

    domain: str
    status: ResultStatus
    assessment: Optional[PolicyAssessment] = None
    document: Optional[PolicyDocument] = None
    diagnostics: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status is ResultStatus.OK


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class AssessmentPipeline:
    """Acquire a policy and assess it; failures become DomainResult statuses.

    Provider transport errors still raise so callers can distinguish a broken
    provider (HTTP 502 at the service) from a domain-level failure.
    """

    def __init__(self, gateway: LlmGateway, acquisition: AcquisitionConfig = AcquisitionConfig()):
        self.gateway = gateway
        self.acquisition = acquisition

    def acquire(self, page_url: str, policy_url: Optional[str] = None) -> PolicyDocument:
        return acquire_policy(page_url, self.acquisition, policy_url)

    def assess(self, document: PolicyDocument) -> DomainResult:
        if not document.ok:
            return DomainResult(
                domain=document.domain,
                status=ResultStatus(document.status.value),
                document=document,
            )
        try:
            assessment = assess_domain(document, self.gateway)
        except AssessmentUnavailableError as exc:
            return DomainResult(
                domain=document.domain,
                status=ResultStatus.ASSESSMENT_UNAVAILABLE,
                document=document,
                diagnostics=tuple(exc.diagnostics),
            )
        return DomainResult(
            domain=document.domain,
            status=ResultStatus.OK,
            assessment=assessment,
            document=document,
        )

    def run(self, page_url: str, policy_url: Optional[str] = None) -> DomainResult:
        return self.assess(self.acquire(page_url, policy_url))


class _Inflight:
    def __init__(self):
        self.done = threading.Event()
        self.result: Optional[DomainResult] = None
        self.error: Optional[BaseException] = None


_SCHEMA = """
CREATE TABLE IF NOT EXISTS assessments (
    domain TEXT PRIMARY KEY,
    json TEXT NOT NULL,
    created_at TEXT NOT NULL,
    model_id TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS documents (
    domain TEXT PRIMARY KEY,
    json TEXT NOT NULL,
    content_hash TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS threads (
    domain TEXT NOT NULL,
    scope TEXT NOT NULL,
    json TEXT NOT NULL,
    PRIMARY KEY (domain, scope)
);
CREATE TABLE IF NOT EXISTS settings (
    id INTEGER PRIMARY KEY CHECK (id = 1),
    json TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS carryover (
    scope TEXT PRIMARY KEY,
    question TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS events (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    at TEXT NOT NULL,
    kind TEXT NOT NULL,
    payload TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS negative_cache (
    domain TEXT PRIMARY KEY,
    status TEXT NOT NULL,
    diagnostics TEXT NOT NULL,
    expires_at REAL NOT NULL
);
"""


class Store:
    """Single-file persistence keyed by registrable domain."""

    def __init__(
        self,
        path: str | Path,
        clock: Callable[[], float] = time.time,
        negative_ttl: float = DEFAULT_NEGATIVE_TTL,
    ):
        self.path = str(path)
        self.clock = clock
        self.negative_ttl = negative_ttl
        self._inflight: dict[str, _Inflight] = {}
        self._inflight_guard = threading.Lock()
        with self._connect() as conn:
            conn.executescript(_SCHEMA)

    def _connect(self) -> sqlite3.Connection:
        conn = sqlite3.connect(self.path, timeout=30.0)
        conn.execute("PRAGMA busy_timeout = 30000")
        return conn

    # -- assessments / documents -------------------------------------------

    def put_assessment(self, assessment: PolicyAssessment) -> None:
        with self._connect() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO assessments (domain, json, created_at, model_id) "
                "VALUES (?, ?, ?, ?)",
                (
                    assessment.domain,
                    json.dumps(assessment.as_dict()),
                    assessment.created_at.isoformat(),
                    assessment.model_id,
                ),
            )

    def get_assessment(self, domain: str) -> Optional[PolicyAssessment]:
        with self._connect() as conn:
            row = conn.execute(
                "SELECT json FROM assessments WHERE domain = ?", (domain,)
            ).fetchone()
        return PolicyAssessment.from_dict(json.loads(row[0])) if row else None

    def delete_assessment(self, domain: str) -> None:
        with self._connect() as conn:
            conn.execute("DELETE FROM assessments WHERE domain = ?", (domain,))

    def put_document(self, document: PolicyDocument) -> None:
        with self._connect() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO documents (domain, json, content_hash) VALUES (?, ?, ?)",
                (document.domain, json.dumps(document.as_dict()), content_hash(document.text)),
            )

    def get_document(self, domain: str) -> Optional[PolicyDocument]:
        with self._connect() as conn:
            row = conn.execute(
                "SELECT json FROM documents WHERE domain = ?", (domain,)
            ).fetchone()
        return PolicyDocument.from_dict(json.loads(row[0])) if row else None

    def get_document_hash(self, domain: str) -> Optional[str]:
        with self._connect() as conn:
            row = conn.execute(
                "SELECT content_hash FROM documents WHERE domain = ?", (domain,)
            ).fetchone()
        return row[0] if row else None

    # -- threads / settings / carryover --------------------------------------

    def get_thread(self, domain: str, scope_key: str) -> Optional[dict]:
        with self._connect() as conn:
            row = conn.execute(
                "SELECT json FROM threads WHERE domain = ? AND scope = ?",
                (domain, scope_key),
            ).fetchone()
        return json.loads(row[0]) if row else None

    def put_thread(self, domain: str, scope_key: str, data: dict) -> None:
        with self._connect() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO threads (domain, scope, json) VALUES (?, ?, ?)",
                (domain, scope_key, json.dumps(data)),
            )

    def list_threads(self, domain: str) -> list[dict]:
        with self._connect() as conn:
            rows = conn.execute(
                "SELECT json FROM threads WHERE domain = ? ORDER BY scope", (domain,)
            ).fetchall()
        return [json.loads(row[0]) for row in rows]

    def delete_threads(self, domain: str) -> None:
        with self._connect() as conn:
            conn.execute("DELETE FROM threads WHERE domain = ?", (domain,))

    def get_settings(self) -> UserSettings:
        with self._connect() as conn:
            row = conn.execute("SELECT json FROM settings WHERE id = 1").fetchone()
        return UserSettings.from_dict(json.loads(row[0])) if row else UserSettings()

    def put_settings(self, settings: UserSettings) -> None:
        with self._connect() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO settings (id, json) VALUES (1, ?)",
                (json.dumps(settings.as_dict()),),
            )

    def get_carryover(self, scope_key: str) -> Optional[str]:
        with self._connect() as conn:
            row = conn.execute(
                "SELECT question FROM carryover WHERE scope = ?", (scope_key,)
            ).fetchone()
        return row[0] if row else None

    def put_carryover(self, scope_key: str, question: str) -> None:
        with self._connect() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO carryover (scope, question) VALUES (?, ?)",
                (scope_key, question),
            )

    # -- events ----------------------------------------------------------------

    def log_event(self, kind: EventKind, payload: Optional[dict[str, str]] = None,
                  at: Optional[datetime] = None) -> None:
        stamp = at or datetime.fromtimestamp(self.clock(), tz=timezone.utc)
        with self._connect() as conn:
            conn.execute(
                "INSERT INTO events (at, kind, payload) VALUES (?, ?, ?)",
                (stamp.isoformat(), kind.value, json.dumps(payload or {})),
            )

    def list_events(self) -> list[ActivityEvent]:
        with self._connect() as conn:
            rows = conn.execute(
                "SELECT at, kind, payload FROM events ORDER BY id"
            ).fetchall()
        return [
            ActivityEvent(
                at=datetime.fromisoformat(at),
                kind=EventKind(kind),
                payload=json.loads(payload),
            )
            for at, kind, payload in rows
        ]

    def export_events(self) -> str:
        """Events as newline-delimited JSON, in append order."""
        return "\n".join(json.dumps(e.as_dict()) for e in self.list_events())

    # -- negative cache ----------------------------------------------------------

    def _put_negative(self, result: DomainResult) -> None:
        with self._connect() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO negative_cache (domain, status, diagnostics, expires_at) "
                "VALUES (?, ?, ?, ?)",
                (
                    result.domain,
                    result.status.value,
                    json.dumps(list(result.diagnostics)),
                    self.clock() + self.negative_ttl,
                ),
            )

    def _get_negative(self, domain: str) -> Optional[DomainResult]:
        with self._connect() as conn:
            row = conn.execute(
                "SELECT status, diagnostics, expires_at FROM negative_cache WHERE domain = ?",
                (domain,),
            ).fetchone()
        if row is None:
            return None
        status, diagnostics, expires_at = row
        if expires_at < self.clock():
            with self._connect() as conn:
                conn.execute("DELETE FROM negative_cache WHERE domain = ?", (domain,))
            return None
        return DomainResult(
            domain=domain,
            status=ResultStatus(status),
            diagnostics=tuple(json.loads(diagnostics)),
        )

    def _clear_negative(self, domain: str) -> None:
        with self._connect() as conn:
            conn.execute("DELETE FROM negative_cache WHERE domain = ?", (domain,))

    # -- cached pipeline ----------------------------------------------------------

    def get_or_assess(
        self,
        page_url: str,
        pipeline: AssessmentPipeline,
        policy_url: Optional[str] = None,
    ) -> DomainResult:
        """Return the cached assessment or run the pipeline exactly once.

        Cache hits never touch the network. Failures are cached as negative
        entries for negative_ttl seconds. Concurrent misses for one domain
        coalesce into a single pipeline run shared by all callers.
        """
        domain = registrable_domain(page_url)
        cached = self.get_assessment(domain)
        if cached is not None:
            return DomainResult(
                domain=domain,
                status=ResultStatus.OK,
                assessment=cached,
                document=self.get_document(domain),
            )
        negative = self._get_negative(domain)
        if negative is not None:
            return negative
        return self._run_coalesced(domain, lambda: pipeline.run(page_url, policy_url))

    def reassess(
        self,
        page_url: str,
        pipeline: AssessmentPipeline,
        policy_url: Optional[str] = None,
    ) -> DomainResult:
        """Force re-acquisition; re-assess only when the policy text changed.

        An unchanged content hash returns the stored assessment without a
        provider call.
        """
        domain = registrable_domain(page_url)

        def runner() -> DomainResult:
            document = pipeline.acquire(page_url, policy_url)
            if document.ok:
                stored = self.get_assessment(domain)
                if stored is not None and self.get_document_hash(domain) == content_hash(document.text):
                    self.put_document(document)
                    return DomainResult(
                        domain=domain, status=ResultStatus.OK,
                        assessment=stored, document=document,
                    )
            return pipeline.assess(document)

        return self._run_coalesced(domain, runner)

    def _run_coalesced(self, domain: str, runner: Callable[[], DomainResult]) -> DomainResult:
        with self._inflight_guard:
            inflight = self._inflight.get(domain)
            leader = inflight is None
            if leader:
                inflight = _Inflight()
                self._inflight[domain] = inflight
        if not leader:
            inflight.done.wait()
            if inflight.error is not None:
                raise inflight.error
            return inflight.result
        try:
            result = runner()
            self._persist(result)
            inflight.result = result
            return result
        except BaseException as exc:
            inflight.error = exc
            raise
        finally:
            with self._inflight_guard:
                self._inflight.pop(domain, None)
            inflight.done.set()

    def _persist(self, result: DomainResult) -> None:
        if result.ok:
            self.put_document(result.document)
            self.put_assessment(result.assessment)
            self._clear_negative(result.domain)
        else:
            self._put_negative(result)
