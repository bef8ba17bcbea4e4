"""Turn raw model output into structured ratings and traffic-light colors.

Per-criterion colors: score 2 or below is red, 3 is yellow, 4 or above is
green. The overall color comes from the unweighted mean of the scores:
below 2.5 red, 2.5 to 3 yellow, above 3 green. Criteria rated red are the
"pressing issues" surfaced first in any client.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional, Sequence

from .acquisition import PolicyDocument
from .llm import LlmGateway, PromptTier
from .prompts import RETRY_FORMAT_REMINDER, render_assessment_prompt


class TrafficColor(str, Enum):
    GREEN = "green"
    YELLOW = "yellow"
    RED = "red"
    UNKNOWN = "unknown"  # acquisition failure only; never produced by scoring


class ParseFailureError(Exception):
    """No criterion ratings could be extracted from the model response."""

    def __init__(self, message: str, diagnostics: Sequence[str] = ()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class AssessmentUnavailableError(Exception):
    """Both parse attempts failed; the domain gets the question-mark state."""

    def __init__(self, message: str, diagnostics: Sequence[str] = ()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


def score_criterion(score: int) -> TrafficColor:
    """Map a single 1-5 Likert score to its traffic-light color."""
    if not isinstance(score, int) or isinstance(score, bool) or not 1 <= score <= 5:
        raise ValueError(f"score must be an integer in [1, 5], got {score!r}")
    if score <= 2:
        return TrafficColor.RED
    if score == 3:
        return TrafficColor.YELLOW
    return TrafficColor.GREEN


def score_overall(scores: Sequence[int]) -> tuple[float, TrafficColor]:
    """Average the criterion scores and map the mean to a color."""
    if not scores:
        raise ValueError("scores must be nonempty")
    for score in scores:
        if not isinstance(score, int) or isinstance(score, bool) or not 1 <= score <= 5:
            raise ValueError(f"score must be an integer in [1, 5], got {score!r}")
    average = sum(scores) / len(scores)
    if average < 2.5:
        return average, TrafficColor.RED
    if average <= 3.0:
        return average, TrafficColor.YELLOW
    return average, TrafficColor.GREEN


@dataclass(frozen=True)
class CriterionRating:
    name: str
    score: int
    justification: str
    color: TrafficColor

    def __post_init__(self):
        if not self.name:
            raise ValueError("criterion name must be nonempty")
        if self.color is not score_criterion(self.score):
            raise ValueError(f"color {self.color} inconsistent with score {self.score}")

    @classmethod
    def from_score(cls, name: str, score: int, justification: str) -> "CriterionRating":
        return cls(name=name, score=score, justification=justification,
                   color=score_criterion(score))

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "score": self.score,
            "justification": self.justification,
            "color": self.color.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CriterionRating":
        return cls(
            name=data["name"],
            score=data["score"],
            justification=data["justification"],
            color=TrafficColor(data["color"]),
        )


@dataclass(frozen=True)
class PolicyAssessment:
    domain: str
    criteria: tuple[CriterionRating, ...]
    average: float
    overall: TrafficColor
    raw_response: str
    created_at: datetime
    model_id: str
    truncated: bool = False

    def __post_init__(self):
        if not self.criteria:
            raise ValueError("assessment must carry at least one criterion")
        expected_avg, expected_color = score_overall([c.score for c in self.criteria])
        if abs(self.average - expected_avg) > 1e-9:
            raise ValueError("average must equal the mean of the criterion scores")
        if self.overall is not expected_color:
            raise ValueError("overall color inconsistent with average")

    @property
    def pressing_issues(self) -> list[CriterionRating]:
        return [c for c in self.criteria if c.color is TrafficColor.RED]

    def criterion(self, name: str) -> Optional[CriterionRating]:
        wanted = _normalize_name(name)
        for c in self.criteria:
            if _normalize_name(c.name) == wanted:
                return c
        return None

    def as_dict(self) -> dict:
        return {
            "domain": self.domain,
            "criteria": [c.as_dict() for c in self.criteria],
            "average": self.average,
            "overall": self.overall.value,
            "raw_response": self.raw_response,
            "created_at": self.created_at.isoformat(),
            "model_id": self.model_id,
            "truncated": self.truncated,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PolicyAssessment":
        return cls(
            domain=data["domain"],
            criteria=tuple(CriterionRating.from_dict(c) for c in data["criteria"]),
            average=data["average"],
            overall=TrafficColor(data["overall"]),
            raw_response=data["raw_response"],
            created_at=datetime.fromisoformat(data["created_at"]),
            model_id=data["model_id"],
            truncated=data.get("truncated", False),
        )


def _normalize_name(name: str) -> str:
    return " ".join(name.split()).casefold()


# ---------------------------------------------------------------------------
# Response parsing
# ---------------------------------------------------------------------------

@dataclass
class ParsedCriterion:
    name: str
    score: int
    justification: str


@dataclass
class ParseResult:
    criteria: list[ParsedCriterion] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


# A rating line: optional bullet/numbering, criterion name, colon, k/5 with
# optional emphasis, optional same-line justification tail. Non-integer
# scores are matched here so they can be rejected with a diagnostic.
_RATING_LINE = re.compile(
    r"^\s*"
    r"(?:(?:[-*•+‣]|\d{1,2}[.)])\s+)?"
    r"(?P<name>[^:\n]+?)"
    r"\s*[:：]\s*"
    r"(?:\*\*|__|[*_`])?\s*"
    r"(?P<score>\d+(?:\.\d+)?)\s*/\s*5(?!\d)"
    r"\s*(?:\*\*|__|[*_`])?"
    r"(?P<tail>.*)$"
)

# A step header ends justification collection; content on the same line
# (e.g. "Conclusion: looks complete") belongs to the header, not to the
# previous criterion. Rating lines are matched first, so a criterion whose
# line carries "k/5" is never mistaken for a header.
_SECTION_HEADER = re.compile(
    r"^\s*(?:#+\s*)?(?:[*_]{1,2})?(?:(?:step\s+)?\d{1,2}\s*[.):]\s*)?"
    r"(criteria|analysis|evaluation|conclusion)s?(?:[*_]{1,2})?\s*(?:$|[:.\-–—].*$)",
    re.IGNORECASE,
)

_MARKUP_EDGES = re.compile(r"^[\s*_`#>\-–—:]+|[\s*_`:]+$")


def _clean_name(raw: str) -> str:
    return " ".join(_MARKUP_EDGES.sub("", raw).split())


def _clean_fragment(raw: str) -> str:
    return " ".join(_MARKUP_EDGES.sub("", raw).split())


def parse_assessment(raw: str) -> ParseResult:
    """Extract (name, score, justification) triples from a model response.

    Tolerates emphasis markers, list bullets, and flexible whitespace around
    the "<name>: <k>/5" lines. Duplicate names keep the first occurrence with
    a warning; a recognized section header ends justification collection.
    Raises ParseFailureError when no rating line matches at all.
    """
    if not raw or not raw.strip():
        raise ParseFailureError("empty model response")
    result = ParseResult()
    seen: set[str] = set()
    current: Optional[ParsedCriterion] = None
    pending: list[str] = []

    def commit():
        nonlocal current, pending
        if current is not None:
            current.justification = " ".join(p for p in pending if p).strip()
            result.criteria.append(current)
        current, pending = None, []

    for line in raw.splitlines():
        match = _RATING_LINE.match(line)
        if match:
            score_text = match.group("score")
            name = _clean_name(match.group("name"))
            if "." in score_text or not 1 <= int(score_text) <= 5:
                result.warnings.append(
                    f"rejected rating line (score {score_text!r} not an integer in 1..5): "
                    f"{line.strip()!r}"
                )
                continue
            if not name:
                result.warnings.append(f"rejected rating line (empty name): {line.strip()!r}")
                continue
            key = _normalize_name(name)
            if key in seen:
                result.warnings.append(f"duplicate criterion {name!r}; keeping first occurrence")
                continue
            commit()
            seen.add(key)
            current = ParsedCriterion(name=name, score=int(score_text), justification="")
            tail = _clean_fragment(match.group("tail"))
            pending = [tail] if tail else []
            continue
        if _SECTION_HEADER.match(line):
            commit()
            continue
        if current is not None and line.strip():
            pending.append(" ".join(line.split()))
    commit()

    if not result.criteria:
        raise ParseFailureError(
            "no criterion ratings found in response", diagnostics=result.warnings
        )
    return result


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

MIN_CRITERIA = 3
MAX_CRITERIA = 12


def _parse_bounded(raw: str, min_criteria: int, max_criteria: int) -> ParseResult:
    parsed = parse_assessment(raw)
    count = len(parsed.criteria)
    if not min_criteria <= count <= max_criteria:
        raise ParseFailureError(
            f"criterion count {count} outside accepted range "
            f"[{min_criteria}, {max_criteria}]",
            diagnostics=parsed.warnings,
        )
    return parsed


def assess_domain(
    policy: PolicyDocument,
    gateway: LlmGateway,
    min_criteria: int = MIN_CRITERIA,
    max_criteria: int = MAX_CRITERIA,
    now: Optional[datetime] = None,
) -> PolicyAssessment:
    """Run the full assessment pipeline for an acquired policy.

    Renders the assessment prompt, calls the assessment-tier model, parses
    the ratings, and derives colors. One retry with a format reminder on
    parse failure; a second failure raises AssessmentUnavailableError.
    Provider errors propagate unchanged.
    """
    if not policy.ok:
        raise ValueError(f"cannot assess a policy with status {policy.status.value}")
    rendered = render_assessment_prompt(policy, gateway.config.context_budget_tokens)
    diagnostics: list[str] = []
    prompt_text = rendered.text
    parsed: Optional[ParseResult] = None
    raw = ""
    for attempt in (1, 2):
        response = gateway.complete(gateway.request(PromptTier.ASSESSMENT, prompt_text))
        raw = response.text
        try:
            parsed = _parse_bounded(raw, min_criteria, max_criteria)
            break
        except ParseFailureError as exc:
            diagnostics.append(f"attempt {attempt}: {exc}")
            diagnostics.extend(exc.diagnostics)
            prompt_text = rendered.text + RETRY_FORMAT_REMINDER
    if parsed is None:
        raise AssessmentUnavailableError(
            f"assessment unparsable after retry for {policy.domain}",
            diagnostics=diagnostics,
        )
    ratings = tuple(
        CriterionRating.from_score(c.name, c.score, c.justification)
        for c in parsed.criteria
    )
    average, overall = score_overall([r.score for r in ratings])
    return PolicyAssessment(
        domain=policy.domain,
        criteria=ratings,
        average=average,
        overall=overall,
        raw_response=raw,
        created_at=now or datetime.now(timezone.utc),
        model_id=gateway.model_id(PromptTier.ASSESSMENT),
        truncated=rendered.truncated,
    )
