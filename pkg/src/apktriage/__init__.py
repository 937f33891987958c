"""apktriage: static triage for Android app packages.

Loads apktool output directories or raw APKs, tags targeted framework
features in the code with file/line/count, assigns a category from
permission-set rules, flags features inconsistent with that category,
and reports the declared-vs-required permission gap.
"""

from .catalogs import (
    ApiPermissionMap,
    CatalogSet,
    CategoryRuleSet,
    FeatureCatalog,
    load_api_map,
    load_category_rules,
    load_default_catalogs,
    load_feature_catalog,
)
from .categorize import Assignment, assign_category, score_categories
from .errors import ApkTriageError
from .ingest import AppBundle, InputKind, detect_layout, load_bundle
from .mismatch import (
    PermissionGap,
    Verdict,
    flag_features,
    permission_gap,
    verdict,
)
from .report import TOOL_VERSION, Report, build_report, render, run_pipeline
from .smali import FeatureReport, dotted_to_descriptor, scan_bundle, scan_file

__version__ = TOOL_VERSION

__all__ = [
    "ApiPermissionMap",
    "ApkTriageError",
    "AppBundle",
    "Assignment",
    "CatalogSet",
    "CategoryRuleSet",
    "FeatureCatalog",
    "FeatureReport",
    "InputKind",
    "PermissionGap",
    "Report",
    "TOOL_VERSION",
    "Verdict",
    "assign_category",
    "build_report",
    "detect_layout",
    "dotted_to_descriptor",
    "flag_features",
    "load_api_map",
    "load_bundle",
    "load_category_rules",
    "load_default_catalogs",
    "load_feature_catalog",
    "permission_gap",
    "render",
    "run_pipeline",
    "scan_bundle",
    "scan_file",
    "score_categories",
    "verdict",
]
