"""policylens: scrape, score, and chat about website privacy policies."""

from .acquisition import (
    AcquisitionConfig,
    AcquisitionStatus,
    FetchBlockedError,
    LinkNotFoundError,
    PolicyDocument,
    acquire_policy,
    discover_policy_url,
    extract_text,
    fetch_page,
    registrable_domain,
)
from .assessment import (
    AssessmentUnavailableError,
    CriterionRating,
    ParseFailureError,
    PolicyAssessment,
    TrafficColor,
    assess_domain,
    parse_assessment,
    score_criterion,
    score_overall,
)
from .comparison import rank_results, render_comparison_report
from .conversation import ChatMessage, ChatScope, ChatThread, ConversationManager, Role
from .llm import (
    GatewayConfig,
    LlmGateway,
    MockProvider,
    ModelResponse,
    OpenAICompatProvider,
    PromptRequest,
    PromptTier,
    ProviderUnavailableError,
    ResponseEmptyError,
    prompt_hash,
)
from .prompts import (
    ComplexityLevel,
    LengthLevel,
    UserSettings,
    render_assessment_prompt,
    render_chat_prompt,
    render_suggestion_prompt,
)
from .service import ServiceConfig, create_app
from .store import (
    ActivityEvent,
    AssessmentPipeline,
    DomainResult,
    EventKind,
    ResultStatus,
    Store,
)

__version__ = "0.1.0"
