"""Permission-based category scoring and assignment.

A category's score is the fraction of its rule tokens matched by the
app's evidence set (declared permissions plus intent-filter actions),
kept as an exact rational. Ties are broken by matched-token count, then
rule size, then name, so assignment is total and deterministic. A
declared market category overrides the rule-based winner but the
disagreement is surfaced, never hidden.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

from .catalogs import CategoryRuleSet, TokenKind
from .errors import UnknownDeclaredCategory
from .manifest import ManifestInfo

UNCATEGORIZED = "Uncategorized"

DEFAULT_MIN_SCORE = Fraction(1, 2)


@dataclass(frozen=True)
class CategoryScore:
    name: str
    score: Fraction
    matched_tokens: frozenset[str]
    rule_size: int


@dataclass(frozen=True)
class Assignment:
    assigned: str
    score: Fraction
    declared: str | None
    declared_agreement: bool | None
    ranking: tuple[CategoryScore, ...]


def score_categories(manifest: ManifestInfo,
                     rules: CategoryRuleSet) -> list[CategoryScore]:
    """Score every rule against the app's permission/action evidence."""
    evidence = manifest.declared_permissions | manifest.intent_actions
    scores = []
    for rule in rules.rules:
        matched = set()
        for token in rule.tokens:
            if token.kind is TokenKind.PERMISSION_GROUP:
                if evidence & rules.group_map[token.value]:
                    matched.add(token.value)
            elif token.value in evidence:
                matched.add(token.value)
        scores.append(CategoryScore(
            name=rule.name,
            score=Fraction(len(matched), len(rule.tokens)),
            matched_tokens=frozenset(matched),
            rule_size=len(rule.tokens),
        ))
    scores.sort(key=lambda s: (-s.score, -len(s.matched_tokens),
                               -s.rule_size, s.name))
    return scores


def assign_category(scores: list[CategoryScore],
                    declared: str | None,
                    min_score: Fraction,
                    rules: CategoryRuleSet) -> Assignment:
    """Pick the app's category from sorted scores.

    The rule-based winner is the top score when it reaches min_score,
    else Uncategorized. A declared category naming a known rule wins the
    assignment; an unknown declared category emits an
    UnknownDeclaredCategory warning and the rule-based result stands.
    """
    if not Fraction(0) <= min_score <= Fraction(1):
        raise ValueError(f"min_score {min_score} outside [0, 1]")
    if scores and scores[0].score >= min_score:
        rule_winner = scores[0].name
        winner_score = scores[0].score
    else:
        rule_winner = UNCATEGORIZED
        winner_score = scores[0].score if scores else Fraction(0)

    assigned = rule_winner
    score = winner_score
    agreement: bool | None = None
    if declared is not None:
        agreement = declared == rule_winner
        known = {s.name for s in scores}
        if declared in known:
            assigned = declared
            score = next(s.score for s in scores if s.name == declared)
        else:
            warnings.warn(UnknownDeclaredCategory(
                f"declared category {declared!r} names no rule"
                f" (known: {sorted(rules.names)})"))

    return Assignment(assigned=assigned, score=score, declared=declared,
                      declared_agreement=agreement, ranking=tuple(scores))
