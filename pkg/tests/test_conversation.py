"""Chat threads, suggestion generation, carryover, and history clearing."""

import random
from datetime import datetime, timezone

import pytest

from policylens.acquisition import AcquisitionStatus, PolicyDocument
from policylens.assessment import CriterionRating, PolicyAssessment, score_overall
from policylens.conversation import (
    ChatScope,
    ChatThread,
    ConversationManager,
    DomainNotAssessedError,
    Role,
    UnknownCriterionError,
    parse_suggestions,
)
from policylens.llm import GatewayConfig, LlmGateway, MockProvider, PromptTier
from policylens.prompts import ComplexityLevel, LengthLevel, UserSettings
from policylens.store import Store

from conftest import DEFAULT_CRITERIA, make_words, suggestion_text


def build_assessment(domain, criteria=DEFAULT_CRITERIA) -> PolicyAssessment:
    ratings = tuple(CriterionRating.from_score(n, s, f"Rated {s} for {n}.")
                    for n, s in criteria)
    average, overall = score_overall([r.score for r in ratings])
    return PolicyAssessment(
        domain=domain, criteria=ratings, average=average, overall=overall,
        raw_response="raw", created_at=datetime(2025, 6, 1, tzinfo=timezone.utc),
        model_id="mock",
    )


def seed_domain(store: Store, domain: str, criteria=DEFAULT_CRITERIA, seed=7):
    text = make_words(250, seed)
    store.put_document(PolicyDocument(
        domain=domain, source_url=f"https://{domain}/privacy", text=text,
        word_count=len(text.split()),
        fetched_at=datetime(2025, 6, 1, tzinfo=timezone.utc),
        status=AcquisitionStatus.OK,
    ))
    store.put_assessment(build_assessment(domain, criteria))


@pytest.fixture
def store(tmp_path):
    return Store(tmp_path / "conv.db")


@pytest.fixture
def manager(store, mock_provider):
    return ConversationManager(store, LlmGateway(mock_provider, GatewayConfig()))


GENERAL = ChatScope.general()
TRANSPARENCY = ChatScope.criterion("Transparency")


class TestParseSuggestions:
    def test_inline_numbered(self):
        assert parse_suggestions("1. A? 2. B? 3. C?") == ["A?", "B?", "C?"]

    def test_multiline_with_mixed_markers(self):
        assert parse_suggestions("1) A?\n2: B?\n3. C?") == ["A?", "B?", "C?"]

    def test_semicolon_separated(self):
        assert parse_suggestions("1. A?; 2. B?; 3. C?") == ["A?", "B?", "C?"]

    def test_duplicates_dropped(self):
        assert parse_suggestions("1. Same?\n2. same?\n3. Other?") == ["Same?", "Other?"]

    def test_no_markers(self):
        assert parse_suggestions("no list here") == []


class TestScope:
    def test_key_roundtrip(self):
        for scope in (GENERAL, TRANSPARENCY, ChatScope.criterion("Data Transfer")):
            assert ChatScope.from_key(scope.key()) == scope

    def test_invalid_scopes_rejected(self):
        with pytest.raises(ValueError):
            ChatScope(kind="criterion", name="")
        with pytest.raises(ValueError):
            ChatScope(kind="general", name="x")
        with pytest.raises(ValueError):
            ChatScope.from_key("weird")


class TestAsk:
    def test_first_question_sends_single_user_turn(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        mock_provider.script(PromptTier.ASSESSMENT, "The answer.")
        answer = manager.ask("a.example", TRANSPARENCY, "Who sees my data?")
        assert answer == "The answer."
        sent = mock_provider.calls[-1]
        assert sent.user_prompt == "User: Who sees my data?"
        assert sent.user_prompt.count("User:") == 1

    def test_criterion_context_in_system_prompt(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        mock_provider.script(PromptTier.ASSESSMENT, "ok")
        manager.ask("a.example", TRANSPARENCY, "Why 3?")
        system = mock_provider.calls[-1].system_prompt
        assert "Transparency: 3/5" in system
        assert "Rated 3 for Transparency." in system
        assert "Data minimization: 2/5" not in system

    def test_general_context_lists_all_criteria(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        mock_provider.script(PromptTier.ASSESSMENT, "ok")
        manager.ask("a.example", GENERAL, "Overview?")
        system = mock_provider.calls[-1].system_prompt
        for name, score in DEFAULT_CRITERIA:
            assert f"{name}: {score}/5" in system

    def test_history_grows_and_is_sent(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        mock_provider.script(PromptTier.ASSESSMENT, "First answer.", "Second answer.")
        manager.ask("a.example", GENERAL, "Q1?")
        manager.ask("a.example", GENERAL, "Q2?")
        sent = mock_provider.calls[-1].user_prompt
        assert sent == "User: Q1?\nAssistant: First answer.\nUser: Q2?"
        thread = ChatThread.from_dict(store.get_thread("a.example", GENERAL.key()))
        assert [m.role for m in thread.messages] == [
            Role.USER, Role.ASSISTANT, Role.USER, Role.ASSISTANT,
        ]

    def test_provider_failure_leaves_thread_unchanged(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        from policylens.llm import ProviderUnavailableError

        with pytest.raises(ProviderUnavailableError):
            manager.ask("a.example", GENERAL, "Doomed?")
        assert store.get_thread("a.example", GENERAL.key()) is None
        mock_provider.script(PromptTier.ASSESSMENT, "Recovered.")
        manager.ask("a.example", GENERAL, "Doomed?")
        thread = ChatThread.from_dict(store.get_thread("a.example", GENERAL.key()))
        assert len(thread.messages) == 2

    def test_updates_carryover(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        mock_provider.script(PromptTier.ASSESSMENT, "ok")
        manager.ask("a.example", TRANSPARENCY, "Who gets my data?")
        assert store.get_carryover(TRANSPARENCY.key()) == "Who gets my data?"

    def test_settings_fall_back_to_store(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        store.put_settings(UserSettings(LengthLevel.LONG, ComplexityLevel.EXPERT))
        mock_provider.script(PromptTier.ASSESSMENT, "ok")
        manager.ask("a.example", GENERAL, "Q?")
        system = mock_provider.calls[-1].system_prompt
        assert "Answer thoroughly in up to 300 words." in system
        assert "privacy expert" in system

    def test_unassessed_domain_rejected(self, manager):
        with pytest.raises(DomainNotAssessedError):
            manager.ask("ghost.example", GENERAL, "Q?")

    def test_unknown_criterion_rejected(self, store, manager):
        seed_domain(store, "a.example")
        with pytest.raises(UnknownCriterionError):
            manager.ask("a.example", ChatScope.criterion("Nonexistent"), "Q?")

    def test_empty_question_rejected(self, store, manager):
        seed_domain(store, "a.example")
        with pytest.raises(ValueError):
            manager.ask("a.example", GENERAL, "   ")

    def test_no_cross_scope_history_leak(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        mock_provider.script(PromptTier.ASSESSMENT, "g1", "c1")
        manager.ask("a.example", GENERAL, "General question?")
        manager.ask("a.example", TRANSPARENCY, "Criterion question?")
        sent = mock_provider.calls[-1].user_prompt
        assert sent == "User: Criterion question?"
        assert "General question?" not in sent

    def test_no_cross_domain_history_leak(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        seed_domain(store, "b.example", seed=8)
        mock_provider.script(PromptTier.ASSESSMENT, "a1", "b1")
        manager.ask("a.example", GENERAL, "About A?")
        manager.ask("b.example", GENERAL, "About B?")
        sent = mock_provider.calls[-1].user_prompt
        assert "About A?" not in sent


class TestSuggest:
    def test_parses_three(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        mock_provider.script(PromptTier.LIGHTWEIGHT, suggestion_text("A?", "B?", "C?", inline=True))
        assert manager.suggest("a.example", GENERAL) == ["A?", "B?", "C?"]

    def test_carryover_takes_slot_one_on_fresh_thread(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        seed_domain(store, "b.example", seed=8)
        mock_provider.script(PromptTier.ASSESSMENT, "answer")
        manager.ask("a.example", TRANSPARENCY, "Who gets my data?")
        mock_provider.script(PromptTier.LIGHTWEIGHT, suggestion_text("X?", "Y?", "Z?"))
        suggestions = manager.suggest("b.example", TRANSPARENCY)
        assert suggestions[0] == "Who gets my data?"
        assert len(suggestions) == 3
        assert len(set(suggestions)) == 3

    def test_no_carryover_once_thread_has_messages(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        store.put_carryover(GENERAL.key(), "Carried?")
        mock_provider.script(PromptTier.ASSESSMENT, "answer")
        manager.ask("a.example", GENERAL, "Fresh question?")
        mock_provider.script(PromptTier.LIGHTWEIGHT, suggestion_text("X?", "Y?", "Z?"))
        suggestions = manager.suggest("a.example", GENERAL)
        assert "Carried?" not in suggestions

    def test_repeat_of_asked_question_triggers_retry(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        mock_provider.script(PromptTier.ASSESSMENT, "answer")
        manager.ask("a.example", GENERAL, "A?")
        mock_provider.script(
            PromptTier.LIGHTWEIGHT,
            suggestion_text("A?", "B?", "C?"),   # repeats the asked question
            suggestion_text("D?", "B?", "C?"),
        )
        before = mock_provider.call_counts[PromptTier.LIGHTWEIGHT]
        suggestions = manager.suggest("a.example", GENERAL)
        assert mock_provider.call_counts[PromptTier.LIGHTWEIGHT] == before + 2
        assert "A?" not in suggestions
        assert len(suggestions) == 3

    def test_persistent_shortfall_pads_from_fallback(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        mock_provider.script(
            PromptTier.LIGHTWEIGHT,
            "1. Only one?",
            "1. Only one?",
        )
        suggestions = manager.suggest("a.example", TRANSPARENCY)
        assert len(suggestions) == 3
        assert len(set(suggestions)) == 3
        assert suggestions[0] == "Only one?"

    def test_carryover_deduplicated_against_model_output(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        store.put_carryover(GENERAL.key(), "Shared question?")
        mock_provider.script(
            PromptTier.LIGHTWEIGHT,
            suggestion_text("Shared question?", "B?", "C?"),
        )
        suggestions = manager.suggest("a.example", GENERAL)
        assert suggestions[0] == "Shared question?"
        assert len(suggestions) == 3
        assert len(set(s.casefold() for s in suggestions)) == 3

    def test_exclusion_list_rendered_into_prompt(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        mock_provider.script(PromptTier.ASSESSMENT, "answer")
        manager.ask("a.example", GENERAL, "Asked before?")
        mock_provider.script(PromptTier.LIGHTWEIGHT, suggestion_text("X?", "Y?", "Z?"))
        manager.suggest("a.example", GENERAL)
        sent = mock_provider.calls[-1]
        assert "Asked before?" in sent.system_prompt

    def test_suggestions_stored_on_thread(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        mock_provider.script(PromptTier.LIGHTWEIGHT, suggestion_text("X?", "Y?", "Z?"))
        manager.suggest("a.example", GENERAL)
        thread = ChatThread.from_dict(store.get_thread("a.example", GENERAL.key()))
        assert thread.suggestions == ["X?", "Y?", "Z?"]


class TestClearHistory:
    def test_clears_only_target_domain(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        seed_domain(store, "b.example", seed=8)
        mock_provider.script(PromptTier.ASSESSMENT, "a", "b")
        manager.ask("a.example", GENERAL, "QA?")
        manager.ask("b.example", GENERAL, "QB?")
        manager.clear_history("a.example")
        assert store.get_thread("a.example", GENERAL.key()) is None
        assert store.get_thread("b.example", GENERAL.key()) is not None
        # carryover survives, assessment survives
        assert store.get_carryover(GENERAL.key()) == "QB?"
        assert store.get_assessment("a.example") is not None

    def test_idempotent(self, store, manager):
        seed_domain(store, "a.example")
        manager.clear_history("a.example")
        manager.clear_history("a.example")
        assert store.get_thread("a.example", GENERAL.key()) is None


ADVERSARIAL_ANSWERS = [
    # Response-problem fixtures: the pipeline must pass these through
    # verbatim without crashing or rewriting them.
    ("incomplete_scrape", "[...] There are no clear details about the security measures."),
    ("context_limited", "The specific link for the online data protection request form "
                        "is not provided directly in the privacy policy."),
    ("euphemistic", "Your data is mainly shared within the platform and with trusted "
                    "partners to operate and improve the app."),
    ("omission", "This is explained in the privacy policy under the relevant sections."),
    ("generic", "Users can withdraw their consent at any time by changing certain "
                "settings in their account or by contacting customer service."),
    ("hallucination", "One of the worst I've seen was from a small social media app "
                      "that was very vague and unclear."),
    ("misunderstanding", "Of course, I will summarize the most important categories "
                         "and aspects of the privacy policy."),
    ("mixed_signals", "No, a variety of data categories is collected, including "
                      "sensitive data, although data minimization measures are taken."),
]


class TestAdversarialAnswers:
    def test_answers_pass_through_verbatim(self, store, manager, mock_provider):
        seed_domain(store, "a.example")
        mock_provider.script(PromptTier.ASSESSMENT, *[a for _, a in ADVERSARIAL_ANSWERS])
        for i, (label, expected) in enumerate(ADVERSARIAL_ANSWERS):
            answer = manager.ask("a.example", GENERAL, f"Probing question {i}?")
            assert answer == expected, label
        thread = ChatThread.from_dict(store.get_thread("a.example", GENERAL.key()))
        assert len(thread.messages) == 2 * len(ADVERSARIAL_ANSWERS)


class TestAlternationProperty:
    def test_random_operation_sequences_keep_alternation(self, store, mock_provider):
        seed_domain(store, "a.example")
        seed_domain(store, "b.example", seed=9)
        manager = ConversationManager(store, LlmGateway(mock_provider, GatewayConfig()))
        rng = random.Random(42)
        counter = [0]

        def responder(request):
            counter[0] += 1
            if request.tier is PromptTier.LIGHTWEIGHT:
                n = counter[0]
                return f"1. Q{n}a? 2. Q{n}b? 3. Q{n}c?"
            return f"Answer {counter[0]}."

        mock_provider.responder = responder
        domains = ["a.example", "b.example"]
        scopes = [GENERAL, TRANSPARENCY, ChatScope.criterion("Security")]
        for step in range(120):
            domain = rng.choice(domains)
            scope = rng.choice(scopes)
            op = rng.random()
            if op < 0.5:
                manager.ask(domain, scope, f"Question {step}?")
            elif op < 0.85:
                manager.suggest(domain, scope)
            else:
                manager.clear_history(domain)
            for d in domains:
                for s in scopes:
                    data = store.get_thread(d, s.key())
                    if data is None:
                        continue
                    thread = ChatThread.from_dict(data)
                    for i, message in enumerate(thread.messages):
                        expected = Role.USER if i % 2 == 0 else Role.ASSISTANT
                        assert message.role is expected
