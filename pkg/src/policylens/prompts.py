"""Prompt templates and rendering.

Three fixed templates drive the whole pipeline: the assessment prompt
(step-by-step criteria/analysis/evaluation/conclusion with a 600-word cap),
the chat-answer prompt, and the question-suggestion prompt. Rendering is
pure: identical inputs produce identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .acquisition import PolicyDocument


class LengthLevel(str, Enum):
    SHORT = "short"
    MEDIUM = "medium"
    LONG = "long"


class ComplexityLevel(str, Enum):
    NO_PRIOR = "no_prior"
    BASIC = "basic"
    EXPERT = "expert"


@dataclass(frozen=True)
class UserSettings:
    """Response length and complexity, injected into every chat prompt."""

    length: LengthLevel = LengthLevel.MEDIUM
    complexity: ComplexityLevel = ComplexityLevel.NO_PRIOR

    def as_dict(self) -> dict:
        return {"length": self.length.value, "complexity": self.complexity.value}

    @classmethod
    def from_dict(cls, data: dict) -> "UserSettings":
        return cls(
            length=LengthLevel(data.get("length", "medium")),
            complexity=ComplexityLevel(data.get("complexity", "no_prior")),
        )


# Fixed directive strings substituted into the two settings slots of the chat
# template. Chosen so no directive is a substring of another or of a template.
LENGTH_DIRECTIVES = {
    LengthLevel.SHORT: "Answer in at most 3 sentences.",
    LengthLevel.MEDIUM: "Answer in one paragraph of at most 8 sentences.",
    LengthLevel.LONG: "Answer thoroughly in up to 300 words.",
}

COMPLEXITY_DIRECTIVES = {
    ComplexityLevel.NO_PRIOR: "Explain for a reader with no technical or legal background.",
    ComplexityLevel.BASIC: "Explain for a reader with basic technical knowledge.",
    ComplexityLevel.EXPERT: "Explain for a privacy expert; technical and legal terminology is welcome.",
}


ASSESSMENT_TEMPLATE = """\
Your output must be a maximum of 600 words long! You are an expert in data \
protection and a member of an ethics council. You are given a privacy policy. \
Your task is to uncover aspects in data protection declarations that are \
ethically questionable from your perspective. Proceed step by step:

1. Criteria: From your perspective, identify relevant ethical test criteria \
for this privacy policy as criteria for a later evaluation. When naming the \
test criteria, stick to standardized terms and concepts that are common in \
the field of ethics. Keep it short!
2. Analysis: Based on this, check for ethical problems or ethically \
questionable circumstances in the privacy policy.
3. Evaluation: Only after you have completed step 2: Rate the privacy policy \
based on your analysis regarding each of your criteria on a 5-point Likert \
scale. Explain what this rating means. Explain what the ideal case with 5 \
points and the worst case with one point would look like. The output in this \
step should look like this:

[Insert rating criterion here]: [insert rating here]/5 [insert line break]

[insert justification here]

4. Conclusion: Reflect on your evaluation and check whether it is complete.

Important: Check for errors in your analysis and correct them if necessary \
before the evaluation. You must present your approach clearly and concisely \
and follow the steps mentioned. Your output must not exceed 600 words.

Privacy policy: {policy}"""

CHAT_TEMPLATE = (
    "Keep it short! Privacy policy: {policy} | Rating: {rating}. "
    "Users want to know more about how this rating is justified in the "
    "privacy policy. When answering the questions, focus on the given topic "
    "of the rating. Keep it short! {complexity} {length}"
)

SUGGESTION_SYSTEM_TEMPLATE = (
    "Your task is to ask questions about a privacy policy. Your output "
    "consists of three questions: 1. question 1; 2. question 2; 3. question 3. "
    "Please output the questions in a numbered list. Never repeat questions "
    "that have already been asked: {asked}"
)

SUGGESTION_USER_TEMPLATE = (
    "Specifically: Ask your questions about the privacy policy on the topic: "
    "{topic}.\n\nEmbrace the context of the previous chat: {history}"
)

# One fixed sentence appended to the assessment prompt when the first model
# response could not be parsed; restates the step-3 output shape.
RETRY_FORMAT_REMINDER = (
    "\n\nReminder: in step 3, format every rating on its own line exactly as "
    "'[Insert rating criterion here]: [insert rating here]/5' followed by its "
    "justification."
)

TRUNCATION_MARKER = "\n[... policy text truncated ...]\n"


class PromptTooLongError(Exception):
    """The rendered prompt cannot fit the model context budget."""


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    truncated: bool = False


def estimate_tokens(text: str) -> int:
    """Cheap deterministic token estimate (4 chars per token)."""
    return max(1, math.ceil(len(text) / 4))


def _fit_policy(template_without_policy: str, policy_text: str,
                budget_tokens: Optional[int]) -> tuple[str, bool]:
    """Trim the policy slice (and only it) to fit the context budget.

    Keeps head and tail halves around a marker. Raises PromptTooLongError
    when even an empty policy slice cannot fit.
    """
    if budget_tokens is None:
        return policy_text, False
    fixed = estimate_tokens(template_without_policy) + estimate_tokens(TRUNCATION_MARKER)
    if fixed >= budget_tokens:
        raise PromptTooLongError(
            f"prompt template needs ~{fixed} tokens, budget is {budget_tokens}"
        )
    if estimate_tokens(template_without_policy) + estimate_tokens(policy_text) <= budget_tokens:
        return policy_text, False
    room_chars = (budget_tokens - fixed) * 4
    head = policy_text[: room_chars // 2].rsplit(" ", 1)[0]
    tail = policy_text[len(policy_text) - (room_chars - len(head)):]
    tail = tail.split(" ", 1)[-1]
    return head + TRUNCATION_MARKER + tail, True


def render_assessment_prompt(
    policy: PolicyDocument,
    context_budget_tokens: Optional[int] = None,
) -> RenderedPrompt:
    """Render the assessment system prompt for an acquired policy.

    Rejects documents whose acquisition did not succeed.
    """
    if not policy.ok:
        raise ValueError(f"cannot render assessment prompt for status {policy.status.value}")
    shell = ASSESSMENT_TEMPLATE.replace("{policy}", "")
    text, truncated = _fit_policy(shell, policy.text, context_budget_tokens)
    return RenderedPrompt(ASSESSMENT_TEMPLATE.format(policy=text), truncated)


def render_chat_prompt(
    policy: PolicyDocument,
    rating_context: str,
    settings: UserSettings,
    context_budget_tokens: Optional[int] = None,
) -> RenderedPrompt:
    """Render the chat-answer system prompt.

    General and criterion chats share this template and differ only in
    rating_context. Changing settings changes exactly the two directive slots.
    """
    if not policy.ok:
        raise ValueError(f"cannot render chat prompt for status {policy.status.value}")
    complexity = COMPLEXITY_DIRECTIVES[settings.complexity]
    length = LENGTH_DIRECTIVES[settings.length]
    shell = CHAT_TEMPLATE.format(
        policy="", rating=rating_context, complexity=complexity, length=length
    )
    text, truncated = _fit_policy(shell, policy.text, context_budget_tokens)
    return RenderedPrompt(
        CHAT_TEMPLATE.format(
            policy=text, rating=rating_context, complexity=complexity, length=length
        ),
        truncated,
    )


def render_suggestion_prompt(
    topic: str,
    history: str,
    asked: Sequence[str],
    context_budget_tokens: Optional[int] = None,
) -> tuple[str, str]:
    """Render (system, user) prompts for follow-up question generation.

    topic is a criterion name or "General"; asked questions are embedded
    verbatim in the never-repeat list (empty list renders an empty slot).
    """
    system = SUGGESTION_SYSTEM_TEMPLATE.format(asked="; ".join(asked))
    user = SUGGESTION_USER_TEMPLATE.format(topic=topic, history=history)
    if context_budget_tokens is not None:
        total = estimate_tokens(system) + estimate_tokens(user)
        if total > context_budget_tokens:
            raise PromptTooLongError(
                f"suggestion prompt needs ~{total} tokens, budget is {context_budget_tokens}"
            )
    return system, user
