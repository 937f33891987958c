"""Category/feature mismatch flagging, permission-gap analysis, and the
triage verdict.

A feature is flagged when its relevant-category set is non-empty and
excludes the assigned category; Uncategorized apps flag nothing (no basis
to judge relevance). The permission gap compares map-derived required
permissions against the manifest; over-privilege is judged only within
the map's permission universe because the map is partial. Verdict
thresholds are policy, configurable via the rules file.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .catalogs import (
    ApiPermissionMap,
    FeatureCatalog,
    Severity,
    VerdictPolicy,
)
from .categorize import UNCATEGORIZED
from .dexfile import MethodSig
from .manifest import ManifestInfo
from .smali import FeatureReport


class GapStatus(enum.Enum):
    EXACT = "exact"
    OVER_PRIVILEGED = "over_privileged"
    UNDER_PRIVILEGED = "under_privileged"
    BOTH = "both"


class VerdictLevel(enum.Enum):
    BENIGN = "benign"
    SUSPICIOUS = "suspicious"
    MALICIOUS_SUSPECT = "malicious_suspect"

    @property
    def rank(self) -> int:
        return {"benign": 0, "suspicious": 1, "malicious_suspect": 2}[self.value]


@dataclass(frozen=True)
class FlaggedFeature:
    feature_id: str
    severity: Severity
    reason: str
    occurrence_count: int


@dataclass(frozen=True)
class PermissionGap:
    used: frozenset[str]
    over: frozenset[str]
    under: frozenset[str]
    unmapped_ref_count: int
    status: GapStatus


@dataclass(frozen=True)
class Verdict:
    level: VerdictLevel
    reasons: tuple[str, ...]


def flag_features(report: FeatureReport, catalog: FeatureCatalog,
                  assigned: str) -> list[FlaggedFeature]:
    """Flag hit features whose relevant categories exclude the assignment."""
    if assigned == UNCATEGORIZED:
        return []
    flags = []
    for spec in catalog.features:
        count = report.counts.get(spec.id, 0)
        if count < 1 or not spec.relevant_categories:
            continue
        if assigned in spec.relevant_categories:
            continue
        relevant = ", ".join(sorted(spec.relevant_categories))
        flags.append(FlaggedFeature(
            feature_id=spec.id,
            severity=spec.severity,
            reason=(f"{spec.dotted} is relevant to [{relevant}] but the app"
                    f" is assigned {assigned}"),
            occurrence_count=count,
        ))
    flags.sort(key=lambda f: (-f.severity.rank, f.feature_id))
    return flags


def permission_gap(api_refs: frozenset[MethodSig] | set[MethodSig],
                   manifest: ManifestInfo,
                   api_map: ApiPermissionMap) -> PermissionGap:
    """Compare map-required permissions against declared ones."""
    used: set[str] = set()
    unmapped = 0
    for ref in api_refs:
        matched = False
        for entry in api_map.entries:
            if entry.class_descriptor != ref.class_descriptor:
                continue
            if entry.method_name == "*" or entry.method_name == ref.name:
                used.update(entry.required_permissions)
                matched = True
        if not matched:
            unmapped += 1

    declared = manifest.declared_permissions
    mapped = api_map.mapped_permissions
    over = (declared & mapped) - used
    under = used - declared
    if over and under:
        status = GapStatus.BOTH
    elif over:
        status = GapStatus.OVER_PRIVILEGED
    elif under:
        status = GapStatus.UNDER_PRIVILEGED
    else:
        status = GapStatus.EXACT
    return PermissionGap(used=frozenset(used), over=frozenset(over),
                         under=frozenset(under), unmapped_ref_count=unmapped,
                         status=status)


def verdict(flags: list[FlaggedFeature], gap: PermissionGap,
            policy: VerdictPolicy | None = None) -> Verdict:
    """Apply the triage policy; every triggered condition adds a reason."""
    policy = policy or VerdictPolicy()
    triggered: list[tuple[VerdictLevel, str]] = []

    high = [f for f in flags if f.severity is Severity.HIGH]
    if high:
        ids = ", ".join(f.feature_id for f in high)
        triggered.append((VerdictLevel(policy.high_flag_level),
                          f"high-severity feature(s) flagged: {ids}"))
    if len(flags) >= policy.flag_count_threshold:
        triggered.append((VerdictLevel.MALICIOUS_SUSPECT,
                          f"{len(flags)} features flagged (threshold"
                          f" {policy.flag_count_threshold})"))
    if flags:
        triggered.append((VerdictLevel.SUSPICIOUS,
                          f"{len(flags)} category-inconsistent feature(s)"))
    if (gap.status in (GapStatus.OVER_PRIVILEGED, GapStatus.BOTH)
            and len(gap.over) >= policy.over_threshold):
        over = ", ".join(sorted(gap.over))
        triggered.append((VerdictLevel.SUSPICIOUS,
                          f"over-privileged: {len(gap.over)} declared but"
                          f" unused mapped permission(s) ({over})"))

    if not triggered:
        return Verdict(level=VerdictLevel.BENIGN, reasons=())
    level = max((lvl for lvl, _ in triggered), key=lambda lvl: lvl.rank)
    return Verdict(level=level, reasons=tuple(msg for _, msg in triggered))
