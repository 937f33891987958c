"""Line-oriented smali tagging and API-reference collection.

Matching is deliberately substring-based on raw lines rather than a full
smali grammar: it keeps the scanner equivalent to a plain text search, so
hits can be verified with grep. Per line, a catalog feature yields at most
one hit per kind; every invoke line contributes the callee method
signature regardless of the catalog.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from .dexfile import MethodSig
from .errors import BadName
from .ingest import AppBundle, CodeKind

if TYPE_CHECKING:
    from .catalogs import FeatureCatalog, FeatureSpec

# Callee of an invoke line: `Lpkg/Cls;->name(`; also used to harvest api refs
_CALLEE_RE = re.compile(r"(L[^;\s]+;)->([^\s(]+)\(")
_QUOTED_RE = re.compile(r'"([^"]*)"')


class HitKind(enum.Enum):
    TYPE_REF = "type_ref"
    INVOKE = "invoke"
    STRING_LITERAL = "string_literal"
    DEX_REF = "dex_ref"


@dataclass(frozen=True)
class FeatureHit:
    feature_id: str
    file: str
    line: int | None  # absent for DEX-derived hits
    kind: HitKind


@dataclass
class FeatureReport:
    hits: list[FeatureHit] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)
    api_refs: frozenset[MethodSig] = frozenset()


def _hit_sort_key(hit: FeatureHit) -> tuple:
    return (hit.feature_id, hit.file, hit.line or 0, hit.kind.value)


def dotted_to_descriptor(dotted: str) -> str:
    """Convert a dotted Java name to a smali type descriptor.

    The first segment starting with an uppercase letter is the outer
    class; later segments are nested classes joined with '$'.

    >>> dotted_to_descriptor("android.telephony.SmsManager")
    'Landroid/telephony/SmsManager;'
    >>> dotted_to_descriptor("android.hardware.Camera.PictureCallback")
    'Landroid/hardware/Camera$PictureCallback;'
    """
    segments = dotted.split(".")
    if any(not seg for seg in segments):
        raise BadName(f"empty segment in {dotted!r}")
    for i, segment in enumerate(segments):
        if segment[0].isupper():
            packages = segments[:i]
            classes = "$".join(segments[i:])
            prefix = "/".join(packages)
            joined = f"{prefix}/{classes}" if prefix else classes
            return f"L{joined};"
    raise BadName(f"no class segment (uppercase initial) in {dotted!r}")


def scan_file(path: str, text: str,
              catalog: "FeatureCatalog") -> tuple[list[FeatureHit], set[MethodSig]]:
    """Scan one smali file; returns (hits, invoked method signatures).

    Unparsable lines are skipped: scanning is best-effort by design.
    """
    hits: list[FeatureHit] = []
    refs: set[MethodSig] = set()
    features = catalog.features
    for lineno, line in enumerate(text.split("\n"), start=1):
        is_invoke = line.lstrip().startswith("invoke-")
        callee = _CALLEE_RE.search(line) if is_invoke else None
        if callee:
            refs.add(MethodSig(class_descriptor=callee.group(1),
                               name=callee.group(2)))
        literals = (_QUOTED_RE.findall(line)
                    if "const-string" in line else ())
        for spec in features:
            if spec.descriptor in line:
                kind = (HitKind.INVOKE
                        if callee and callee.group(1) == spec.descriptor
                        else HitKind.TYPE_REF)
                hits.append(FeatureHit(feature_id=spec.id, file=path,
                                       line=lineno, kind=kind))
            if literals and spec.dotted in literals:
                hits.append(FeatureHit(feature_id=spec.id, file=path,
                                       line=lineno,
                                       kind=HitKind.STRING_LITERAL))
    return hits, refs


def scan_bundle(bundle: AppBundle, catalog: "FeatureCatalog") -> FeatureReport:
    """Scan all code in a bundle and aggregate a deterministic report."""
    hits: list[FeatureHit] = []
    refs: set[MethodSig] = set()

    if bundle.code.kind is CodeKind.SMALI:
        for path, text in bundle.code.smali_files:
            file_hits, file_refs = scan_file(path, text, catalog)
            hits.extend(file_hits)
            refs.update(file_refs)
    else:
        for name, pool in bundle.code.dex_pools:
            types = set(pool.type_descriptors)
            strings = set(pool.strings)
            for spec in catalog.features:
                # one hit per pool per evidence kind
                if spec.descriptor in types:
                    hits.append(FeatureHit(feature_id=spec.id, file=name,
                                           line=None, kind=HitKind.DEX_REF))
                if spec.dotted in strings:
                    hits.append(FeatureHit(feature_id=spec.id, file=name,
                                           line=None, kind=HitKind.DEX_REF))
            refs.update(pool.method_refs)

    hits.sort(key=_hit_sort_key)
    counts: dict[str, int] = {}
    for hit in hits:
        counts[hit.feature_id] = counts.get(hit.feature_id, 0) + 1
    return FeatureReport(hits=hits, counts=counts, api_refs=frozenset(refs))
