"""Deterministic cross-site comparison report.

Ranks assessed domains by average score (ties broken by domain name) and
renders a plain-text report with no timestamps, so identical inputs always
produce identical bytes.
"""

from __future__ import annotations

from typing import Sequence

from .store import DomainResult


def rank_results(results: Sequence[DomainResult]) -> list[DomainResult]:
    """Assessed domains ranked best-first; unassessable ones keep input order."""
    assessed = [r for r in results if r.ok and r.assessment is not None]
    failed = [r for r in results if not (r.ok and r.assessment is not None)]
    assessed.sort(key=lambda r: (-r.assessment.average, r.domain))
    return assessed + failed


def render_comparison_report(results: Sequence[DomainResult]) -> str:
    """Render the ranking of the given domain results as plain text."""
    ranked = rank_results(results)
    assessed = [r for r in ranked if r.ok and r.assessment is not None]
    failed = [r for r in ranked if not (r.ok and r.assessment is not None)]

    width = max((len(r.domain) for r in ranked), default=0)
    lines = [f"Privacy policy comparison ({len(ranked)} sites)"]
    lines.append("=" * len(lines[0]))
    lines.append("")
    for place, result in enumerate(assessed, start=1):
        a = result.assessment
        lines.append(
            f"{place}. {result.domain.ljust(width)}  {a.overall.value.upper():<7}"
            f"average {a.average:.2f}"
        )
        pressing = [c.name for c in a.pressing_issues]
        lines.append(
            "   pressing issues: " + (", ".join(pressing) if pressing else "none")
        )
    if failed:
        lines.append("")
        lines.append("not assessable:")
        for result in failed:
            lines.append(f"- {result.domain} ({result.status.value})")
    lines.append("")
    return "\n".join(lines)
