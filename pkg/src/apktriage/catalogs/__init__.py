"""Loaders for the three configurable knowledge bases: the targeted-feature
catalog, the category rule set, and the API-to-permission map.

Catalogs are data, not code: the shipped defaults live as JSON next to
this module and can be overridden per file via CLI flags or wholesale via
the APKTRIAGE_CATALOG_DIR environment variable. Loading is pure: the same
bytes always produce structurally equal catalogs.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..smali import dotted_to_descriptor
from ..errors import BadName, CatalogInvalid

DESCRIPTOR_RE = re.compile(r"L[^;]+;\Z")
GROUP_PREFIX = "android.permission-group."

FEATURES_FILENAME = "features.json"
CATEGORIES_FILENAME = "categories.json"
API_MAP_FILENAME = "api_map.json"

CATALOG_DIR_ENV = "APKTRIAGE_CATALOG_DIR"


class Severity(enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def rank(self) -> int:
        return {"low": 0, "medium": 1, "high": 2}[self.value]


class TokenKind(enum.Enum):
    PERMISSION = "permission"
    PERMISSION_GROUP = "permission_group"
    INTENT_ACTION = "intent_action"


@dataclass(frozen=True)
class FeatureSpec:
    id: str
    dotted: str
    descriptor: str
    severity: Severity
    # empty set means "relevant everywhere": the feature is never flagged
    relevant_categories: frozenset[str] = frozenset()


@dataclass(frozen=True)
class FeatureCatalog:
    version: str
    features: tuple[FeatureSpec, ...]

    def by_id(self, feature_id: str) -> FeatureSpec:
        for spec in self.features:
            if spec.id == feature_id:
                return spec
        raise KeyError(feature_id)


@dataclass(frozen=True)
class RuleToken:
    value: str
    kind: TokenKind


@dataclass(frozen=True)
class CategoryRule:
    name: str
    tokens: frozenset[RuleToken]


@dataclass(frozen=True)
class VerdictPolicy:
    high_flag_level: str = "malicious_suspect"
    flag_count_threshold: int = 3
    over_threshold: int = 2


@dataclass(frozen=True)
class CategoryRuleSet:
    version: str
    rules: tuple[CategoryRule, ...]
    group_map: dict[str, frozenset[str]]
    verdict_policy: VerdictPolicy = VerdictPolicy()

    @property
    def names(self) -> frozenset[str]:
        return frozenset(rule.name for rule in self.rules)


@dataclass(frozen=True)
class ApiMapEntry:
    class_descriptor: str
    method_name: str  # "*" matches any method of the class
    required_permissions: frozenset[str]


@dataclass(frozen=True)
class ApiPermissionMap:
    version: str
    entries: tuple[ApiMapEntry, ...]

    @property
    def mapped_permissions(self) -> frozenset[str]:
        out: set[str] = set()
        for entry in self.entries:
            out.update(entry.required_permissions)
        return frozenset(out)


@dataclass(frozen=True)
class CatalogSet:
    """The three catalogs an analysis run is parameterized by."""
    features: FeatureCatalog
    categories: CategoryRuleSet
    api_map: ApiPermissionMap


def _as_text(doc: bytes | str) -> str:
    if isinstance(doc, bytes):
        return doc.decode("utf-8")
    return doc


def _looks_like_json(text: str) -> bool:
    return text.lstrip()[:1] == "{"


def _load_json(text: str, what: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogInvalid(f"{what}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise CatalogInvalid(f"{what}: top level must be an object")
    return data


def _require_version(data: dict, what: str) -> str:
    version = data.get("version")
    if not isinstance(version, str) or not version:
        raise CatalogInvalid(f"{what}: missing mandatory 'version' field")
    return version


def _slug(dotted: str) -> str:
    return dotted.lower().replace(".", "_")


def _feature_from_obj(obj: object, where: str) -> FeatureSpec:
    if not isinstance(obj, dict):
        raise CatalogInvalid(f"{where}: feature entry must be an object")
    dotted = obj.get("dotted")
    if not isinstance(dotted, str) or not dotted:
        raise CatalogInvalid(f"{where}: missing 'dotted' name")
    feature_id = obj.get("id", _slug(dotted))
    if not isinstance(feature_id, str) or not feature_id:
        raise CatalogInvalid(f"{where}: invalid 'id'")
    descriptor = obj.get("descriptor")
    if descriptor is None:
        try:
            descriptor = dotted_to_descriptor(dotted)
        except BadName as exc:
            raise CatalogInvalid(f"{where}: {exc}") from exc
    if not isinstance(descriptor, str) or not DESCRIPTOR_RE.match(descriptor):
        raise CatalogInvalid(f"{where}: descriptor {descriptor!r} does not"
                             " match L...;")
    severity_name = obj.get("severity", "medium")
    try:
        severity = Severity(severity_name)
    except ValueError:
        raise CatalogInvalid(f"{where}: unknown severity {severity_name!r}")
    relevant = obj.get("relevant_categories", [])
    if (not isinstance(relevant, list)
            or any(not isinstance(c, str) or not c for c in relevant)):
        raise CatalogInvalid(f"{where}: relevant_categories must be a list"
                             " of non-empty strings")
    return FeatureSpec(id=feature_id, dotted=dotted, descriptor=descriptor,
                       severity=severity,
                       relevant_categories=frozenset(relevant))


def load_feature_catalog(doc: bytes | str) -> FeatureCatalog:
    """Load a feature catalog from JSON or a plain dotted-name list.

    Plain lists (one dotted name per line, '#' comments) synthesize
    medium-severity specs that are relevant everywhere, with ids derived
    from the lowercased dotted name.
    """
    text = _as_text(doc)
    if _looks_like_json(text):
        data = _load_json(text, "feature catalog")
        version = _require_version(data, "feature catalog")
        raw = data.get("features")
        if not isinstance(raw, list):
            raise CatalogInvalid("feature catalog: 'features' must be a list")
        features = [_feature_from_obj(obj, f"features[{i}]")
                    for i, obj in enumerate(raw)]
    else:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]
        version = f"sha256:{digest}"
        features = []
        for lineno, line in enumerate(text.split("\n"), start=1):
            dotted = line.split("#", 1)[0].strip()
            if not dotted:
                continue
            try:
                descriptor = dotted_to_descriptor(dotted)
            except BadName as exc:
                raise CatalogInvalid(f"line {lineno}: {exc}") from exc
            features.append(FeatureSpec(
                id=_slug(dotted), dotted=dotted, descriptor=descriptor,
                severity=Severity.MEDIUM))

    seen: set[str] = set()
    for spec in features:
        if spec.id in seen:
            raise CatalogInvalid(f"duplicate feature id {spec.id!r}")
        seen.add(spec.id)
    return FeatureCatalog(version=version, features=tuple(features))


def _tag_token(value: str, explicit_action: bool) -> RuleToken:
    if value.startswith(GROUP_PREFIX):
        return RuleToken(value=value, kind=TokenKind.PERMISSION_GROUP)
    if explicit_action or ".action." in value:
        return RuleToken(value=value, kind=TokenKind.INTENT_ACTION)
    return RuleToken(value=value, kind=TokenKind.PERMISSION)


def load_category_rules(doc: bytes | str) -> CategoryRuleSet:
    """Load and validate the category rule set.

    Token strings are auto-tagged: the android.permission-group. prefix
    marks a group, '.action.' substrings or membership in the entry's
    'actions' array mark intent actions, anything else is a permission.
    """
    data = _load_json(_as_text(doc), "category rules")
    version = _require_version(data, "category rules")

    raw_groups = data.get("group_map", {})
    if not isinstance(raw_groups, dict):
        raise CatalogInvalid("category rules: 'group_map' must be an object")
    group_map: dict[str, frozenset[str]] = {}
    for group, members in raw_groups.items():
        if (not isinstance(members, list) or not members
                or any(not isinstance(m, str) or not m for m in members)):
            raise CatalogInvalid(
                f"group_map[{group!r}]: must be a non-empty list of strings")
        group_map[group] = frozenset(members)

    raw_rules = data.get("categories")
    if not isinstance(raw_rules, list) or not raw_rules:
        raise CatalogInvalid("category rules: 'categories' must be a"
                             " non-empty list")
    rules = []
    names: set[str] = set()
    for i, obj in enumerate(raw_rules):
        where = f"categories[{i}]"
        if not isinstance(obj, dict):
            raise CatalogInvalid(f"{where}: must be an object")
        name = obj.get("name")
        if not isinstance(name, str) or not name:
            raise CatalogInvalid(f"{where}: missing 'name'")
        if name in names:
            raise CatalogInvalid(f"{where}: duplicate category name {name!r}")
        names.add(name)
        plain = obj.get("tokens", [])
        actions = obj.get("actions", [])
        for label, seq in (("tokens", plain), ("actions", actions)):
            if (not isinstance(seq, list)
                    or any(not isinstance(t, str) or not t for t in seq)):
                raise CatalogInvalid(f"{where}: '{label}' must be a list of"
                                     " non-empty strings")
        tokens = {_tag_token(t, explicit_action=False) for t in plain}
        tokens |= {_tag_token(t, explicit_action=True) for t in actions}
        if not tokens:
            raise CatalogInvalid(f"{where} ({name}): token set is empty")
        for token in tokens:
            if (token.kind is TokenKind.PERMISSION_GROUP
                    and token.value not in group_map):
                raise CatalogInvalid(
                    f"{where} ({name}): group token {token.value!r} missing"
                    " from group_map")
        rules.append(CategoryRule(name=name, tokens=frozenset(tokens)))

    policy = _parse_verdict_policy(data.get("verdict_policy"))
    return CategoryRuleSet(version=version, rules=tuple(rules),
                           group_map=group_map, verdict_policy=policy)


_LEVEL_NAMES = {"benign", "suspicious", "malicious_suspect"}


def _parse_verdict_policy(obj: object) -> VerdictPolicy:
    if obj is None:
        return VerdictPolicy()
    if not isinstance(obj, dict):
        raise CatalogInvalid("verdict_policy: must be an object")
    level = obj.get("high_flag", "malicious_suspect")
    if level not in _LEVEL_NAMES:
        raise CatalogInvalid(f"verdict_policy: unknown level {level!r}")
    flag_count = obj.get("flag_count_threshold", 3)
    over = obj.get("over_threshold", 2)
    for label, value in (("flag_count_threshold", flag_count),
                         ("over_threshold", over)):
        if not isinstance(value, int) or value < 1:
            raise CatalogInvalid(f"verdict_policy: {label} must be a"
                                 " positive integer")
    return VerdictPolicy(high_flag_level=level,
                         flag_count_threshold=flag_count,
                         over_threshold=over)


def load_api_map(doc: bytes | str) -> ApiPermissionMap:
    """Load the map from API methods to the permissions they require."""
    data = _load_json(_as_text(doc), "api map")
    version = _require_version(data, "api map")
    raw = data.get("entries")
    if not isinstance(raw, list):
        raise CatalogInvalid("api map: 'entries' must be a list")
    entries = []
    seen: set[tuple[str, str]] = set()
    for i, obj in enumerate(raw):
        where = f"entries[{i}]"
        if not isinstance(obj, dict):
            raise CatalogInvalid(f"{where}: must be an object")
        cls = obj.get("class")
        if not isinstance(cls, str) or not cls:
            raise CatalogInvalid(f"{where}: missing 'class'")
        if DESCRIPTOR_RE.match(cls):
            descriptor = cls
        else:
            try:
                descriptor = dotted_to_descriptor(cls)
            except BadName as exc:
                raise CatalogInvalid(f"{where}: {exc}") from exc
        method = obj.get("method")
        if not isinstance(method, str) or not method:
            raise CatalogInvalid(f"{where}: missing 'method'")
        perms = obj.get("permissions")
        if (not isinstance(perms, list) or not perms
                or any(not isinstance(p, str) or not p for p in perms)):
            raise CatalogInvalid(f"{where}: 'permissions' must be a"
                                 " non-empty list of strings")
        key = (descriptor, method)
        if key in seen:
            raise CatalogInvalid(f"{where}: duplicate entry for"
                                 f" {descriptor} {method}")
        seen.add(key)
        entries.append(ApiMapEntry(class_descriptor=descriptor,
                                   method_name=method,
                                   required_permissions=frozenset(perms)))
    return ApiPermissionMap(version=version, entries=tuple(entries))


def check_cross_references(catalog: FeatureCatalog,
                           rules: CategoryRuleSet) -> None:
    """Validate that feature relevant_categories name real rules."""
    known = rules.names
    for spec in catalog.features:
        unknown = spec.relevant_categories - known
        if unknown:
            raise CatalogInvalid(
                f"feature {spec.id!r}: relevant_categories name unknown"
                f" categories {sorted(unknown)}")


def default_catalog_dir() -> Path:
    """Directory holding the shipped catalogs, or the env override."""
    override = os.environ.get(CATALOG_DIR_ENV)
    if override:
        return Path(override)
    return Path(str(resources.files(__package__)))


def load_default_catalogs(features_path: Path | None = None,
                          categories_path: Path | None = None,
                          api_map_path: Path | None = None) -> CatalogSet:
    """Load the catalog set, with per-file overrides taking precedence."""
    base = default_catalog_dir()
    features = load_feature_catalog(
        (features_path or base / FEATURES_FILENAME).read_bytes())
    categories = load_category_rules(
        (categories_path or base / CATEGORIES_FILENAME).read_bytes())
    api_map = load_api_map(
        (api_map_path or base / API_MAP_FILENAME).read_bytes())
    check_cross_references(features, categories)
    return CatalogSet(features=features, categories=categories,
                      api_map=api_map)
