"""Model access for the two tiers: assessment-grade and lightweight.

A provider turns a PromptRequest into a ModelResponse. The OpenAI-compatible
provider speaks the standard JSON chat-completion wire format; the mock
provider replays scripted responses (by prompt hash, by substring rule, or as
an ordered step sequence) so every test is deterministic and offline.
"""

from __future__ import annotations

import hashlib
import logging
import re
import threading
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Protocol

import requests

logger = logging.getLogger(__name__)


class PromptTier(str, Enum):
    ASSESSMENT = "assessment"
    LIGHTWEIGHT = "lightweight"


@dataclass(frozen=True)
class PromptRequest:
    tier: PromptTier
    system_prompt: str
    user_prompt: Optional[str] = None
    max_output_tokens: int = 900
    temperature: float = 0.0

    def __post_init__(self):
        if not self.system_prompt:
            raise ValueError("system_prompt must be nonempty")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


@dataclass(frozen=True)
class ModelResponse:
    text: str
    token_usage: dict[str, int] = field(default_factory=lambda: {"input": 0, "output": 0})
    provider_id: str = ""


class ProviderUnavailableError(Exception):
    """Network, auth, or transport failure while calling the provider."""


class ResponseEmptyError(Exception):
    """The provider answered with empty text."""


class Provider(Protocol):
    def complete(self, request: PromptRequest) -> ModelResponse: ...


def prompt_hash(system_prompt: str, user_prompt: Optional[str] = None) -> str:
    """Stable 16-hex-digit key for scripting mock responses to a prompt."""
    payload = system_prompt + "\x00" + (user_prompt or "")
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class GatewayConfig:
    assessment_model: str = "gpt-4o"
    lightweight_model: str = "gpt-4o-mini"
    assessment_temperature: float = 0.0
    lightweight_temperature: float = 0.7
    assessment_max_output_tokens: int = 900
    lightweight_max_output_tokens: int = 300
    context_budget_tokens: int = 100_000


class OpenAICompatProvider:
    """Provider for any OpenAI-compatible chat-completion endpoint."""

    def __init__(
        self,
        base_url: str,
        api_key: str,
        model_ids: dict[PromptTier, str],
        timeout: float = 60.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model_ids = dict(model_ids)
        self.timeout = timeout

    def complete(self, request: PromptRequest) -> ModelResponse:
        model = self.model_ids[request.tier]
        messages = [{"role": "system", "content": request.system_prompt}]
        if request.user_prompt is not None:
            messages.append({"role": "user", "content": request.user_prompt})
        try:
            response = requests.post(
                f"{self.base_url}/chat/completions",
                json={
                    "model": model,
                    "messages": messages,
                    "temperature": request.temperature,
                    "max_tokens": request.max_output_tokens,
                },
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProviderUnavailableError(str(exc)) from exc
        if response.status_code != 200:
            raise ProviderUnavailableError(
                f"provider returned HTTP {response.status_code}: {response.text[:200]}"
            )
        body = response.json()
        text = body["choices"][0]["message"]["content"] or ""
        if not text.strip():
            raise ResponseEmptyError(f"empty completion from {model}")
        usage = body.get("usage", {})
        return ModelResponse(
            text=text,
            token_usage={
                "input": usage.get("prompt_tokens", 0),
                "output": usage.get("completion_tokens", 0),
            },
            provider_id=model,
        )


_SCENARIO_STEP = re.compile(r"^(assessment|lightweight)-(\d+)\.txt$")
_SCENARIO_HASH = re.compile(r"^hash-([0-9a-f]{16})\.txt$")


class MockProvider:
    """Deterministic scripted provider for tests and offline runs.

    Resolution order per request: prompt-hash rule, substring rule, scripted
    step queue for the request's tier, then the dynamic responder hook.
    All bookkeeping is thread-safe so concurrent callers see one consistent
    step sequence.
    """

    def __init__(self, scenario_dir: Optional[str] = None):
        self._lock = threading.Lock()
        self._steps: dict[PromptTier, deque[str]] = {
            PromptTier.ASSESSMENT: deque(),
            PromptTier.LIGHTWEIGHT: deque(),
        }
        self._hash_rules: dict[str, str] = {}
        self._substring_rules: list[tuple[str, str]] = []
        self.responder: Optional[Callable[[PromptRequest], Optional[str]]] = None
        self.calls: list[PromptRequest] = []
        self.call_counts: Counter = Counter()
        if scenario_dir is not None:
            self._load_scenarios(Path(scenario_dir))

    def _load_scenarios(self, directory: Path) -> None:
        steps: dict[PromptTier, list[tuple[int, str]]] = {
            PromptTier.ASSESSMENT: [],
            PromptTier.LIGHTWEIGHT: [],
        }
        for path in sorted(directory.iterdir()):
            if (match := _SCENARIO_STEP.match(path.name)):
                tier = PromptTier(match.group(1))
                steps[tier].append((int(match.group(2)), path.read_text(encoding="utf-8")))
            elif (match := _SCENARIO_HASH.match(path.name)):
                self._hash_rules[match.group(1)] = path.read_text(encoding="utf-8")
        for tier, entries in steps.items():
            for _, text in sorted(entries):
                self._steps[tier].append(text)

    def script(self, tier: PromptTier, *responses: str) -> None:
        """Queue step responses consumed in order by the given tier."""
        with self._lock:
            self._steps[tier].extend(responses)

    def add_hash_rule(self, key: str, response: str) -> None:
        with self._lock:
            self._hash_rules[key] = response

    def add_substring_rule(self, needle: str, response: str) -> None:
        with self._lock:
            self._substring_rules.append((needle, response))

    def reset_counters(self) -> None:
        with self._lock:
            self.calls.clear()
            self.call_counts.clear()

    def complete(self, request: PromptRequest) -> ModelResponse:
        with self._lock:
            self.calls.append(request)
            self.call_counts[request.tier] += 1
            text = self._resolve(request)
        if text is None and self.responder is not None:
            # Outside the lock: a slow responder must not serialize callers.
            text = self.responder(request)
        if text is None:
            raise ProviderUnavailableError(
                f"mock has no scripted response for tier {request.tier.value}"
            )
        if not text.strip():
            raise ResponseEmptyError("mock scripted an empty response")
        return ModelResponse(
            text=text,
            token_usage={"input": 0, "output": 0},
            provider_id=f"mock-{request.tier.value}",
        )

    def _resolve(self, request: PromptRequest) -> Optional[str]:
        key = prompt_hash(request.system_prompt, request.user_prompt)
        if key in self._hash_rules:
            return self._hash_rules[key]
        haystack = request.system_prompt + "\n" + (request.user_prompt or "")
        for needle, response in self._substring_rules:
            if needle in haystack:
                return response
        if self._steps[request.tier]:
            return self._steps[request.tier].popleft()
        return None


class LlmGateway:
    """Routes requests to the configured provider with one retry.

    ProviderUnavailable and ResponseEmpty are each retried once, then
    surfaced to the caller.
    """

    def __init__(self, provider: Provider, config: GatewayConfig = GatewayConfig()):
        self.provider = provider
        self.config = config

    def model_id(self, tier: PromptTier) -> str:
        if tier is PromptTier.ASSESSMENT:
            return self.config.assessment_model
        return self.config.lightweight_model

    def request(
        self,
        tier: PromptTier,
        system_prompt: str,
        user_prompt: Optional[str] = None,
    ) -> PromptRequest:
        """Build a PromptRequest with the tier's configured defaults."""
        if tier is PromptTier.ASSESSMENT:
            return PromptRequest(
                tier=tier,
                system_prompt=system_prompt,
                user_prompt=user_prompt,
                max_output_tokens=self.config.assessment_max_output_tokens,
                temperature=self.config.assessment_temperature,
            )
        return PromptRequest(
            tier=tier,
            system_prompt=system_prompt,
            user_prompt=user_prompt,
            max_output_tokens=self.config.lightweight_max_output_tokens,
            temperature=self.config.lightweight_temperature,
        )

    def complete(self, request: PromptRequest) -> ModelResponse:
        try:
            return self.provider.complete(request)
        except (ProviderUnavailableError, ResponseEmptyError) as exc:
            logger.warning("provider call failed, retrying once: %s", exc)
            return self.provider.complete(request)
