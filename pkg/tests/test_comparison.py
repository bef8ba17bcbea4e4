"""Ranking-report rendering."""

from datetime import datetime, timezone

from policylens.assessment import CriterionRating, PolicyAssessment, score_overall
from policylens.comparison import rank_results, render_comparison_report
from policylens.store import DomainResult, ResultStatus


def result_for(domain, criteria):
    ratings = tuple(CriterionRating.from_score(n, s, "") for n, s in criteria)
    average, overall = score_overall([r.score for r in ratings])
    assessment = PolicyAssessment(
        domain=domain, criteria=ratings, average=average, overall=overall,
        raw_response="", created_at=datetime(2025, 6, 1, tzinfo=timezone.utc),
        model_id="mock",
    )
    return DomainResult(domain=domain, status=ResultStatus.OK, assessment=assessment)


def failed_result(domain, status=ResultStatus.LINK_NOT_FOUND):
    return DomainResult(domain=domain, status=status)


class TestRanking:
    def test_orders_by_average_descending(self):
        results = [
            result_for("low.example", [("A", 1), ("B", 2)]),
            result_for("high.example", [("A", 5), ("B", 4)]),
            result_for("mid.example", [("A", 3), ("B", 3)]),
        ]
        ranked = rank_results(results)
        assert [r.domain for r in ranked] == [
            "high.example", "mid.example", "low.example",
        ]

    def test_ties_break_on_domain_name(self):
        results = [
            result_for("zeta.example", [("A", 3)]),
            result_for("acme.example", [("A", 3)]),
        ]
        assert [r.domain for r in rank_results(results)] == [
            "acme.example", "zeta.example",
        ]

    def test_failures_listed_after_assessed(self):
        results = [failed_result("broken.example"), result_for("ok.example", [("A", 4)])]
        ranked = rank_results(results)
        assert ranked[0].domain == "ok.example"
        assert ranked[1].domain == "broken.example"


class TestReport:
    def test_report_contains_rank_color_average_and_issues(self):
        results = [
            result_for("good.example", [("A", 5), ("B", 4)]),
            result_for("bad.example", [("Consent", 1), ("Security", 2)]),
            failed_result("broken.example"),
        ]
        report = render_comparison_report(results)
        assert "1. good.example" in report
        assert "GREEN" in report and "RED" in report
        assert "average 4.50" in report and "average 1.50" in report
        assert "pressing issues: Consent, Security" in report
        assert "pressing issues: none" in report
        assert "- broken.example (link_not_found)" in report

    def test_deterministic_bytes(self):
        results = [result_for("a.example", [("A", 3), ("B", 4)])]
        assert render_comparison_report(results) == render_comparison_report(results)
