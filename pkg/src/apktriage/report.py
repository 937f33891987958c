"""Per-app report assembly and rendering.

JSON output is canonical: object keys sorted, arrays in schema-specified
order, no insignificant whitespace, UTF-8, trailing LF. Equal reports
serialize to identical bytes, which the golden tests and the corpus
determinism checks rely on. Scores are exact rationals rendered as
fraction strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .catalogs import CatalogSet
from .categorize import (
    DEFAULT_MIN_SCORE,
    Assignment,
    assign_category,
    score_categories,
)
from .ingest import AppBundle
from .mismatch import (
    FlaggedFeature,
    PermissionGap,
    Verdict,
    flag_features,
    permission_gap,
    verdict as compute_verdict,
)
from .smali import FeatureReport, scan_bundle

TOOL_VERSION = "0.1.0"


@dataclass(frozen=True)
class Report:
    tool_version: str
    catalog_versions: dict[str, str]
    app_id: str
    source: str
    assignment: Assignment
    features: tuple[dict, ...]
    flags: tuple[FlaggedFeature, ...]
    permissions: dict
    verdict: Verdict


def build_report(bundle: AppBundle, catalogs: CatalogSet,
                 feature_report: FeatureReport, assignment: Assignment,
                 flags: list[FlaggedFeature], gap: PermissionGap,
                 verdict: Verdict) -> Report:
    """Assemble the final report from the pipeline stage outputs."""
    flagged_ids = {f.feature_id for f in flags}
    features = []
    for spec in catalogs.features.features:
        count = feature_report.counts.get(spec.id, 0)
        if count == 0:
            continue
        locations = [
            {"file": h.file, "line": h.line, "kind": h.kind.value}
            for h in feature_report.hits if h.feature_id == spec.id
        ]
        locations.sort(key=lambda l: (l["file"], l["line"] or 0, l["kind"]))
        features.append({
            "feature_id": spec.id,
            "dotted": spec.dotted,
            "count": count,
            "locations": locations,
            "flagged": spec.id in flagged_ids,
            "severity": spec.severity.value,
        })
    features.sort(key=lambda f: f["feature_id"])

    permissions = {
        "declared": sorted(bundle.manifest.declared_permissions),
        "used": sorted(gap.used),
        "over": sorted(gap.over),
        "under": sorted(gap.under),
        "unmapped_ref_count": gap.unmapped_ref_count,
        "status": gap.status.value,
    }
    return Report(
        tool_version=TOOL_VERSION,
        catalog_versions={
            "features": catalogs.features.version,
            "categories": catalogs.categories.version,
            "api_map": catalogs.api_map.version,
        },
        app_id=bundle.app_id,
        source=bundle.source.value,
        assignment=assignment,
        features=tuple(features),
        flags=tuple(flags),
        permissions=permissions,
        verdict=verdict,
    )


def run_pipeline(bundle: AppBundle, catalogs: CatalogSet,
                 min_score: Fraction = DEFAULT_MIN_SCORE) -> Report:
    """Run extraction, categorization, flagging, and gap analysis."""
    feature_report = scan_bundle(bundle, catalogs.features)
    scores = score_categories(bundle.manifest, catalogs.categories)
    assignment = assign_category(scores, bundle.declared_market_category,
                                 min_score, catalogs.categories)
    flags = flag_features(feature_report, catalogs.features,
                          assignment.assigned)
    gap = permission_gap(feature_report.api_refs, bundle.manifest,
                         catalogs.api_map)
    final = compute_verdict(flags, gap,
                            catalogs.categories.verdict_policy)
    return build_report(bundle, catalogs, feature_report, assignment,
                        flags, gap, final)


def _assignment_dict(assignment: Assignment) -> dict:
    doc = {
        "assigned": assignment.assigned,
        "score": str(assignment.score),
        "ranking": [
            {
                "name": s.name,
                "score": str(s.score),
                "matched_tokens": sorted(s.matched_tokens),
                "rule_size": s.rule_size,
            }
            for s in assignment.ranking
        ],
    }
    if assignment.declared is not None:
        doc["declared"] = assignment.declared
        doc["declared_agreement"] = assignment.declared_agreement
    return doc


def report_to_dict(report: Report) -> dict:
    features = []
    for feature in report.features:
        locations = []
        for loc in feature["locations"]:
            entry = {"file": loc["file"], "kind": loc["kind"]}
            if loc["line"] is not None:
                entry["line"] = loc["line"]
            locations.append(entry)
        features.append({**feature, "locations": locations})
    return {
        "tool_version": report.tool_version,
        "catalog_versions": report.catalog_versions,
        "app_id": report.app_id,
        "source": report.source,
        "assignment": _assignment_dict(report.assignment),
        "features": features,
        "flags": [
            {
                "feature_id": f.feature_id,
                "severity": f.severity.value,
                "reason": f.reason,
                "occurrence_count": f.occurrence_count,
            }
            for f in report.flags
        ],
        "permissions": report.permissions,
        "verdict": {
            "level": report.verdict.level.value,
            "reasons": list(report.verdict.reasons),
        },
    }


def _render_json(report: Report) -> bytes:
    doc = report_to_dict(report)
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)
    return text.encode("utf-8") + b"\n"


def _fmt_set(values) -> str:
    return ", ".join(sorted(values)) if values else "none"


def _render_text(report: Report) -> bytes:
    a = report.assignment
    lines = [f"{report.app_id}  {a.assigned}({a.score})  "
             f"{report.verdict.level.value}"]
    if a.declared is not None:
        note = "agrees with rules" if a.declared_agreement \
            else "disagrees with rules"
        lines.append(f"Declared category: {a.declared} ({note})")

    if report.features:
        lines.append("Features:")
        for feature in report.features:
            flag_note = ", FLAGGED" if feature["flagged"] else ""
            lines.append(f"  {feature['feature_id']} ({feature['dotted']}):"
                         f" count {feature['count']},"
                         f" severity {feature['severity']}{flag_note}")
            for loc in feature["locations"]:
                where = loc["file"] if loc["line"] is None \
                    else f"{loc['file']}:{loc['line']}"
                lines.append(f"    {where} {loc['kind']}")
    else:
        lines.append("Features: none")

    if report.flags:
        lines.append("Flags:")
        for flag in report.flags:
            lines.append(f"  [{flag.severity.value}] {flag.feature_id}"
                         f" x{flag.occurrence_count}: {flag.reason}")
    else:
        lines.append("Flags: none")

    perms = report.permissions
    lines.append(f"Permission gap: {perms['status']}")
    lines.append(f"  used: {_fmt_set(perms['used'])}")
    lines.append(f"  over: {_fmt_set(perms['over'])}")
    lines.append(f"  under: {_fmt_set(perms['under'])}")
    lines.append(f"  unmapped API refs: {perms['unmapped_ref_count']}")

    lines.append(f"Verdict: {report.verdict.level.value}")
    for reason in report.verdict.reasons:
        lines.append(f"  - {reason}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def render(report: Report, format: str) -> bytes:
    """Render a report as canonical JSON or a human-readable summary."""
    if format == "json":
        return _render_json(report)
    if format == "text":
        return _render_text(report)
    raise ValueError(f"unknown format {format!r}")
