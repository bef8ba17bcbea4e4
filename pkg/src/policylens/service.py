"""Local HTTP service exposing the assessment engine as a JSON API (v1).

Endpoints are thin delegations to the store, pipeline, and conversation
modules. Acquisition failures are domain results (HTTP 200 with a status
field); only transport-level problems map to 4xx/5xx.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional
from urllib.parse import urlparse

from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field, field_validator

from .acquisition import AcquisitionConfig, DEFAULT_KEYWORDS
from .conversation import (
    ChatScope,
    ConversationManager,
    DomainNotAssessedError,
    UnknownCriterionError,
)
from .llm import (
    GatewayConfig,
    LlmGateway,
    MockProvider,
    OpenAICompatProvider,
    Provider,
    PromptTier,
    ProviderUnavailableError,
    ResponseEmptyError,
)
from .prompts import UserSettings
from .store import (
    AssessmentPipeline,
    DomainResult,
    EventKind,
    Store,
)

logger = logging.getLogger("policylens.service")

API_VERSION = "v1"


class ConfigError(Exception):
    """The service configuration is invalid; refuse to start."""


@dataclass(frozen=True)
class ServiceConfig:
    bind_host: str = "127.0.0.1"
    bind_port: int = 8900
    provider_kind: str = "mock"  # "mock" or "openai"
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "POLICYLENS_API_KEY"
    scenario_dir: Optional[str] = None
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    store_path: str = "policylens.db"
    fetch_timeout: float = 10.0
    min_words: int = 100
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    study_mode: bool = False
    allowed_origins: tuple[str, ...] = ()
    allowed_origin_regex: str = r"chrome-extension://.*|moz-extension://.*"

    def validate(self) -> None:
        if self.provider_kind not in ("mock", "openai"):
            raise ConfigError(f"unknown provider kind {self.provider_kind!r}")
        if self.provider_kind == "openai":
            if not self.base_url:
                raise ConfigError("openai provider requires base_url")
            if not os.environ.get(self.api_key_env):
                raise ConfigError(
                    f"openai provider requires the {self.api_key_env} environment variable"
                )

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        gateway = GatewayConfig(**data.get("gateway", {}))
        acquisition = data.get("acquisition", {})
        config = cls(
            bind_host=data.get("bind_host", cls.bind_host),
            bind_port=data.get("bind_port", cls.bind_port),
            provider_kind=data.get("provider", cls.provider_kind),
            base_url=data.get("base_url", cls.base_url),
            api_key_env=data.get("api_key_env", cls.api_key_env),
            scenario_dir=data.get("scenario_dir"),
            gateway=gateway,
            store_path=data.get("store_path", cls.store_path),
            fetch_timeout=acquisition.get("fetch_timeout", cls.fetch_timeout),
            min_words=acquisition.get("min_words", cls.min_words),
            keywords=tuple(acquisition.get("keywords", DEFAULT_KEYWORDS)),
            study_mode=data.get("study_mode", False),
            allowed_origins=tuple(data.get("allowed_origins", ())),
            allowed_origin_regex=data.get("allowed_origin_regex", cls.allowed_origin_regex),
        )
        return config.with_env_overrides()

    def with_env_overrides(self) -> "ServiceConfig":
        env = os.environ
        updates = {}
        if "POLICYLENS_BIND_HOST" in env:
            updates["bind_host"] = env["POLICYLENS_BIND_HOST"]
        if "POLICYLENS_BIND_PORT" in env:
            updates["bind_port"] = int(env["POLICYLENS_BIND_PORT"])
        if "POLICYLENS_PROVIDER" in env:
            updates["provider_kind"] = env["POLICYLENS_PROVIDER"]
        if "POLICYLENS_BASE_URL" in env:
            updates["base_url"] = env["POLICYLENS_BASE_URL"]
        if "POLICYLENS_STORE_PATH" in env:
            updates["store_path"] = env["POLICYLENS_STORE_PATH"]
        if "POLICYLENS_STUDY_MODE" in env:
            updates["study_mode"] = env["POLICYLENS_STUDY_MODE"].lower() in ("1", "true", "yes")
        return replace(self, **updates) if updates else self


def _build_provider(config: ServiceConfig) -> Provider:
    if config.provider_kind == "mock":
        return MockProvider(scenario_dir=config.scenario_dir)
    return OpenAICompatProvider(
        base_url=config.base_url,
        api_key=os.environ[config.api_key_env],
        model_ids={
            PromptTier.ASSESSMENT: config.gateway.assessment_model,
            PromptTier.LIGHTWEIGHT: config.gateway.lightweight_model,
        },
    )


def _absolute_http_url(value: str) -> str:
    parsed = urlparse(value)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise ValueError(f"not an absolute http(s) URL: {value!r}")
    return value


# -- wire models ----------------------------------------------------------------


class AssessRequest(BaseModel):
    page_url: str
    policy_url: Optional[str] = None

    @field_validator("page_url")
    @classmethod
    def _check_page_url(cls, value):
        return _absolute_http_url(value)

    @field_validator("policy_url")
    @classmethod
    def _check_policy_url(cls, value):
        return None if value is None else _absolute_http_url(value)


class CriterionPayload(BaseModel):
    name: str
    score: int
    color: str
    justification: str


class AssessResponse(BaseModel):
    domain: str
    status: str
    overall_color: str
    average: Optional[float] = None
    criteria: list[CriterionPayload] = Field(default_factory=list)
    pressing_issues: list[str] = Field(default_factory=list)
    policy_word_count: int = 0
    truncated: bool = False
    diagnostics: list[str] = Field(default_factory=list)


class SettingsPayload(BaseModel):
    length: str = "medium"
    complexity: str = "no_prior"

    def to_settings(self) -> UserSettings:
        try:
            return UserSettings.from_dict({"length": self.length, "complexity": self.complexity})
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc


class ChatRequest(BaseModel):
    domain: str
    scope: str = "general"
    question: str
    settings: Optional[SettingsPayload] = None

    @field_validator("question")
    @classmethod
    def _check_question(cls, value):
        if not value or not value.strip():
            raise ValueError("question must be nonempty")
        return value


class ChatResponse(BaseModel):
    answer: str
    suggestions: list[str]


class SuggestionsResponse(BaseModel):
    suggestions: list[str]


class PolicyTextResponse(BaseModel):
    domain: str
    source_url: str
    text: str
    word_count: int


class ReassessRequest(BaseModel):
    page_url: str
    policy_url: Optional[str] = None

    @field_validator("page_url")
    @classmethod
    def _check_page_url(cls, value):
        return _absolute_http_url(value)


class EventRequest(BaseModel):
    kind: str
    payload: dict[str, str] = Field(default_factory=dict)


def _result_payload(result: DomainResult) -> AssessResponse:
    if result.ok and result.assessment is not None:
        a = result.assessment
        return AssessResponse(
            domain=result.domain,
            status="ok",
            overall_color=a.overall.value,
            average=a.average,
            criteria=[CriterionPayload(**c.as_dict()) for c in a.criteria],
            pressing_issues=[c.name for c in a.pressing_issues],
            policy_word_count=result.document.word_count if result.document else 0,
            truncated=a.truncated,
        )
    return AssessResponse(
        domain=result.domain,
        status=result.status.value,
        overall_color="unknown",
        diagnostics=list(result.diagnostics),
    )


def _parse_scope(raw: str) -> ChatScope:
    try:
        return ChatScope.from_key(raw)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def create_app(
    config: ServiceConfig = ServiceConfig(),
    provider: Optional[Provider] = None,
    store: Optional[Store] = None,
    acquisition: Optional[AcquisitionConfig] = None,
) -> FastAPI:
    """Build the service with all modules wired; test seams are injectable."""
    config.validate()
    if provider is None:
        provider = _build_provider(config)
    gateway = LlmGateway(provider, config.gateway)
    if acquisition is None:
        acquisition = AcquisitionConfig(
            fetch_timeout=config.fetch_timeout,
            min_words=config.min_words,
            keywords=config.keywords,
        )
    if store is None:
        store = Store(config.store_path)
    pipeline = AssessmentPipeline(gateway, acquisition)
    conversations = ConversationManager(store, gateway)

    app = FastAPI(title="policylens", version=API_VERSION)
    app.state.config = config
    app.state.provider = provider
    app.state.store = store
    app.state.pipeline = pipeline
    app.state.conversations = conversations

    if config.allowed_origins or config.allowed_origin_regex:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.allowed_origins),
            allow_origin_regex=config.allowed_origin_regex or None,
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.middleware("http")
    async def _version_header(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-API-Version"] = API_VERSION
        return response

    def _log_event(kind: EventKind, payload: dict[str, str]) -> None:
        if config.study_mode:
            store.log_event(kind, payload)

    @app.post("/assess", response_model=AssessResponse)
    def assess(body: AssessRequest) -> AssessResponse:
        _log_event(EventKind.ASSESSMENT_REQUESTED, {"page_url": body.page_url})
        try:
            result = store.get_or_assess(body.page_url, pipeline, body.policy_url)
        except (ProviderUnavailableError, ResponseEmptyError) as exc:
            logger.error("provider failure during assess: %s", exc)
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        logger.info("assessed %s -> %s", result.domain, result.status.value)
        return _result_payload(result)

    @app.post("/chat", response_model=ChatResponse)
    def chat(body: ChatRequest) -> ChatResponse:
        scope = _parse_scope(body.scope)
        settings = body.settings.to_settings() if body.settings else None
        try:
            answer = conversations.ask(body.domain, scope, body.question, settings)
            suggestions = conversations.suggest(body.domain, scope)
        except DomainNotAssessedError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except UnknownCriterionError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except (ProviderUnavailableError, ResponseEmptyError) as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        _log_event(
            EventKind.QUESTION_ASKED,
            {"domain": body.domain, "scope": body.scope,
             "question_length": str(len(body.question))},
        )
        return ChatResponse(answer=answer, suggestions=suggestions)

    @app.get("/suggestions", response_model=SuggestionsResponse)
    def suggestions(domain: str = Query(...), scope: str = Query("general")) -> SuggestionsResponse:
        parsed_scope = _parse_scope(scope)
        try:
            items = conversations.suggest(domain, parsed_scope)
        except DomainNotAssessedError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except UnknownCriterionError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except (ProviderUnavailableError, ResponseEmptyError) as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        return SuggestionsResponse(suggestions=items)

    @app.get("/policy-text", response_model=PolicyTextResponse)
    def policy_text(domain: str = Query(...)) -> PolicyTextResponse:
        document = store.get_document(domain)
        if document is None:
            raise HTTPException(status_code=404, detail=f"no policy stored for {domain}")
        _log_event(EventKind.POLICY_VIEWED, {"domain": domain})
        return PolicyTextResponse(
            domain=document.domain,
            source_url=document.source_url,
            text=document.text,
            word_count=document.word_count,
        )

    @app.get("/settings", response_model=SettingsPayload)
    def get_settings() -> SettingsPayload:
        return SettingsPayload(**store.get_settings().as_dict())

    @app.put("/settings", response_model=SettingsPayload)
    def put_settings(body: SettingsPayload) -> SettingsPayload:
        settings = body.to_settings()
        store.put_settings(settings)
        _log_event(EventKind.SETTINGS_CHANGED, settings.as_dict())
        return SettingsPayload(**settings.as_dict())

    @app.delete("/history/{domain}", status_code=204)
    def delete_history(domain: str) -> Response:
        conversations.clear_history(domain)
        return Response(status_code=204)

    @app.post("/reassess/{domain}", response_model=AssessResponse)
    def reassess(domain: str, body: ReassessRequest) -> AssessResponse:
        from .acquisition import registrable_domain

        if registrable_domain(body.page_url) != domain:
            raise HTTPException(
                status_code=422,
                detail=f"page_url domain does not match path domain {domain!r}",
            )
        try:
            result = store.reassess(body.page_url, pipeline, body.policy_url)
        except (ProviderUnavailableError, ResponseEmptyError) as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        return _result_payload(result)

    @app.post("/events", status_code=202)
    def post_event(body: EventRequest) -> dict:
        if not config.study_mode:
            raise HTTPException(status_code=403, detail="activity logging is disabled")
        try:
            kind = EventKind(body.kind)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=f"unknown event kind {body.kind!r}") from exc
        store.log_event(kind, body.payload)
        return {"logged": True}

    return app
