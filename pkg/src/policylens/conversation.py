"""Per-domain chat threads with generated follow-up suggestions.

Each domain has one General thread plus one thread per assessment criterion;
the two kinds differ only in the rating context baked into the system prompt.
After every answer three fresh suggestions are generated, and the last
question asked per scope carries over to other domains so the same question
can be replayed when comparing sites.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional, Protocol, Sequence

from .acquisition import PolicyDocument
from .assessment import PolicyAssessment
from .llm import LlmGateway, PromptTier
from .prompts import UserSettings, render_chat_prompt, render_suggestion_prompt

SUGGESTION_COUNT = 3


class Role(str, Enum):
    USER = "user"
    ASSISTANT = "assistant"


class DomainNotAssessedError(Exception):
    """Chat requires a completed assessment for the domain."""


class UnknownCriterionError(Exception):
    """The requested criterion is not part of the domain's assessment."""


@dataclass(frozen=True)
class ChatScope:
    kind: str
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind == "general":
            if self.name is not None:
                raise ValueError("general scope carries no criterion name")
        elif self.kind == "criterion":
            if not self.name or not self.name.strip():
                raise ValueError("criterion scope requires a nonempty name")
        else:
            raise ValueError(f"unknown scope kind {self.kind!r}")

    @classmethod
    def general(cls) -> "ChatScope":
        return cls(kind="general")

    @classmethod
    def criterion(cls, name: str) -> "ChatScope":
        return cls(kind="criterion", name=name)

    @property
    def topic(self) -> str:
        return self.name if self.kind == "criterion" else "General"

    def key(self) -> str:
        return "general" if self.kind == "general" else f"criterion:{self.name}"

    @classmethod
    def from_key(cls, key: str) -> "ChatScope":
        if key == "general":
            return cls.general()
        if key.startswith("criterion:"):
            return cls.criterion(key.split(":", 1)[1])
        raise ValueError(f"malformed scope key {key!r}")


@dataclass
class ChatMessage:
    role: Role
    text: str
    at: datetime

    def as_dict(self) -> dict:
        return {"role": self.role.value, "text": self.text, "at": self.at.isoformat()}

    @classmethod
    def from_dict(cls, data: dict) -> "ChatMessage":
        return cls(role=Role(data["role"]), text=data["text"],
                   at=datetime.fromisoformat(data["at"]))


@dataclass
class ChatThread:
    domain: str
    scope: ChatScope
    messages: list[ChatMessage] = field(default_factory=list)
    suggestions: list[str] = field(default_factory=list)

    def asked_questions(self) -> list[str]:
        return [m.text for m in self.messages if m.role is Role.USER]

    def transcript(self) -> str:
        return "\n".join(
            f"{'User' if m.role is Role.USER else 'Assistant'}: {m.text}"
            for m in self.messages
        )

    def as_dict(self) -> dict:
        return {
            "domain": self.domain,
            "scope": self.scope.key(),
            "messages": [m.as_dict() for m in self.messages],
            "suggestions": list(self.suggestions),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChatThread":
        return cls(
            domain=data["domain"],
            scope=ChatScope.from_key(data["scope"]),
            messages=[ChatMessage.from_dict(m) for m in data["messages"]],
            suggestions=list(data.get("suggestions", [])),
        )


class ThreadStorage(Protocol):
    """Persistence surface the conversation layer relies on."""

    def get_assessment(self, domain: str) -> Optional[PolicyAssessment]: ...
    def get_document(self, domain: str) -> Optional[PolicyDocument]: ...
    def get_thread(self, domain: str, scope_key: str) -> Optional[dict]: ...
    def put_thread(self, domain: str, scope_key: str, data: dict) -> None: ...
    def delete_threads(self, domain: str) -> None: ...
    def get_carryover(self, scope_key: str) -> Optional[str]: ...
    def put_carryover(self, scope_key: str, question: str) -> None: ...
    def get_settings(self) -> UserSettings: ...


# Generic questions used when the model cannot produce three usable
# suggestions. Keyed by normalized criterion name; "general" doubles as the
# General-chat pool and the fallback for unlisted criteria.
FALLBACK_QUESTIONS: dict[str, list[str]] = {
    "general": [
        "What data does this website collect about me?",
        "Who is my data shared with?",
        "What are the biggest privacy risks of using this site?",
    ],
    "data minimization": [
        "Is more data collected than needed for the service?",
        "Can I use the service while providing less personal data?",
        "Which collected data seems unnecessary for the stated purposes?",
    ],
    "transparency": [
        "Which parts of the policy are vague or unclear?",
        "Does the policy clearly say who processes my data?",
        "Are the purposes of data collection explained in plain language?",
    ],
    "purpose limitation": [
        "Is my data used for purposes beyond what I signed up for?",
        "Does the policy allow repurposing my data later?",
        "Are marketing uses of my data clearly separated from service uses?",
    ],
    "security": [
        "What security measures protect my stored data?",
        "Does the policy mention encryption or access controls?",
        "How would I be informed about a data breach?",
    ],
    "user rights": [
        "How can I request deletion of my data?",
        "How do I get a copy of the data stored about me?",
        "Can I object to specific uses of my data?",
    ],
    "consent": [
        "What am I consenting to by using this site?",
        "How can I withdraw my consent later?",
        "Is consent bundled with unrelated processing?",
    ],
    "data transfer": [
        "Is my data transferred to other countries?",
        "Which third parties receive my data?",
        "What safeguards apply when my data leaves the company?",
    ],
    "retention": [
        "How long is my data kept?",
        "When and how is my data deleted?",
        "Does the policy state retention periods for all data types?",
    ],
}

_LIST_MARKER = re.compile(r"(?:(?<=^)|(?<=\s))(\d{1,2})[.):]\s*")


def parse_suggestions(text: str) -> list[str]:
    """Extract the numbered questions from a suggestion response.

    Accepts "1." / "1)" / "1:" markers, inline or one per line; order is
    preserved and duplicates (after whitespace/case normalization) drop.
    """
    markers = list(_LIST_MARKER.finditer(text))
    items: list[str] = []
    for i, marker in enumerate(markers):
        end = markers[i + 1].start() if i + 1 < len(markers) else len(text)
        item = text[marker.end():end].strip().strip(";").strip()
        if item:
            items.append(item)
    seen: set[str] = set()
    unique = []
    for item in items:
        key = _norm(item)
        if key not in seen:
            seen.add(key)
            unique.append(item)
    return unique


def _norm(text: str) -> str:
    return " ".join(text.split()).casefold()


def rating_context(assessment: PolicyAssessment, scope: ChatScope) -> str:
    """Build the rating slot for the chat prompt.

    Criterion chats get that criterion's score and justification; the General
    chat gets the full criteria/score list.
    """
    if scope.kind == "criterion":
        criterion = assessment.criterion(scope.name)
        if criterion is None:
            raise UnknownCriterionError(
                f"criterion {scope.name!r} not in assessment for {assessment.domain}"
            )
        return f"{criterion.name}: {criterion.score}/5. {criterion.justification}"
    return "; ".join(f"{c.name}: {c.score}/5" for c in assessment.criteria)


class ConversationManager:
    """Owns ask/suggest/clear for every (domain, scope) thread."""

    def __init__(self, storage: ThreadStorage, gateway: LlmGateway):
        self.storage = storage
        self.gateway = gateway
        self._locks: dict[tuple[str, str], threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, domain: str, scope_key: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault((domain, scope_key), threading.Lock())

    def _require_assessment(self, domain: str, scope: ChatScope) -> PolicyAssessment:
        assessment = self.storage.get_assessment(domain)
        if assessment is None:
            raise DomainNotAssessedError(f"no assessment stored for {domain}")
        if scope.kind == "criterion" and assessment.criterion(scope.name) is None:
            raise UnknownCriterionError(
                f"criterion {scope.name!r} not in assessment for {domain}"
            )
        return assessment

    def _load_thread(self, domain: str, scope: ChatScope) -> ChatThread:
        data = self.storage.get_thread(domain, scope.key())
        if data is None:
            return ChatThread(domain=domain, scope=scope)
        return ChatThread.from_dict(data)

    def ask(
        self,
        domain: str,
        scope: ChatScope,
        question: str,
        settings: Optional[UserSettings] = None,
    ) -> str:
        """Answer one user question in the given thread.

        Atomic with respect to history: on provider failure the thread is
        left exactly as it was, so a retry appends the turn pair once.
        """
        if not question or not question.strip():
            raise ValueError("question must be nonempty")
        assessment = self._require_assessment(domain, scope)
        document = self.storage.get_document(domain)
        if document is None or not document.ok:
            raise DomainNotAssessedError(f"no stored policy text for {domain}")
        if settings is None:
            settings = self.storage.get_settings()
        with self._lock(domain, scope.key()):
            thread = self._load_thread(domain, scope)
            system = render_chat_prompt(
                document,
                rating_context(assessment, scope),
                settings,
                self.gateway.config.context_budget_tokens,
            ).text
            history = thread.transcript()
            user_prompt = (history + "\n" if history else "") + f"User: {question}"
            response = self.gateway.complete(
                self.gateway.request(PromptTier.ASSESSMENT, system, user_prompt)
            )
            now = datetime.now(timezone.utc)
            thread.messages.append(ChatMessage(role=Role.USER, text=question, at=now))
            thread.messages.append(ChatMessage(role=Role.ASSISTANT, text=response.text, at=now))
            self.storage.put_thread(domain, scope.key(), thread.as_dict())
        self.storage.put_carryover(scope.key(), question)
        return response.text

    def suggest(self, domain: str, scope: ChatScope) -> list[str]:
        """Produce exactly three distinct follow-up questions for a thread.

        Never returns a question already asked in this thread. On a fresh
        thread the scope's carried-over question (if any) takes slot one.
        One retry on a short or repeating model response, then the static
        fallback table pads the list.
        """
        self._require_assessment(domain, scope)
        thread = self._load_thread(domain, scope)
        asked = thread.asked_questions()
        asked_norm = {_norm(q) for q in asked}
        system, user = render_suggestion_prompt(
            scope.topic,
            thread.transcript(),
            asked,
            self.gateway.config.context_budget_tokens,
        )
        usable: list[str] = []
        for _ in range(2):
            response = self.gateway.complete(
                self.gateway.request(PromptTier.LIGHTWEIGHT, system, user)
            )
            usable = [
                q for q in parse_suggestions(response.text) if _norm(q) not in asked_norm
            ]
            if len(usable) >= SUGGESTION_COUNT:
                break
        suggestions = usable[:SUGGESTION_COUNT]

        carry = self.storage.get_carryover(scope.key())
        if carry and not thread.messages:
            suggestions = [carry] + [s for s in suggestions if _norm(s) != _norm(carry)]
            suggestions = suggestions[:SUGGESTION_COUNT]

        suggestions = self._pad(suggestions, scope, asked_norm)
        thread.suggestions = list(suggestions)
        self.storage.put_thread(domain, scope.key(), thread.as_dict())
        return suggestions

    def _pad(
        self, suggestions: list[str], scope: ChatScope, asked_norm: set[str]
    ) -> list[str]:
        chosen = {_norm(s) for s in suggestions}
        pool = list(FALLBACK_QUESTIONS.get(_norm(scope.topic), []))
        pool += FALLBACK_QUESTIONS["general"]
        counter = 0
        while len(suggestions) < SUGGESTION_COUNT:
            if pool:
                candidate = pool.pop(0)
            else:
                counter += 1
                candidate = f"What else should I know about {scope.topic.lower()} here? ({counter})"
            key = _norm(candidate)
            if key in chosen or key in asked_norm:
                continue
            suggestions.append(candidate)
            chosen.add(key)
        return suggestions

    def clear_history(self, domain: str) -> None:
        """Drop every thread for the domain; carryover memory stays intact."""
        self.storage.delete_threads(domain)
