"""Input detection and bundle loading.

Two layouts are accepted: an apktool output directory (AndroidManifest.xml
at the root plus .smali files under smali*/ subdirectories, merged across
multidex roots) and a raw APK file (ZIP magic). Loading is a pure function
of the file bytes; smali files are ordered lexicographically regardless of
filesystem enumeration order, and DEX pools by their classesN.dex number.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path

from .axml import decode_axml
from .dexfile import DexPool, extract_dex_pool
from .errors import (
    AxmlCorrupt,
    DexCorrupt,
    ManifestMissing,
    ManifestUnparsable,
    NotAnApp,
)
from .manifest import ManifestInfo, manifest_from_axml, parse_manifest_xml
from .zipreader import read_zip_entries

ZIP_MAGIC = b"PK\x03\x04"

_DEX_NAME_RE = re.compile(r"classes(\d*)\.dex\Z")


class InputKind(enum.Enum):
    APKTOOL_DIR = "apktool-dir"
    RAW_APK = "raw-apk"


class CodeKind(enum.Enum):
    SMALI = "smali"
    DEX = "dex"


@dataclass(frozen=True)
class CodeIndex:
    kind: CodeKind
    smali_files: tuple[tuple[str, str], ...] = ()  # (relative path, text)
    dex_pools: tuple[tuple[str, DexPool], ...] = ()  # (entry name, pool)


@dataclass(frozen=True)
class AppBundle:
    app_id: str
    source: InputKind
    manifest: ManifestInfo
    code: CodeIndex
    declared_market_category: str | None = None


def _smali_roots(path: Path) -> list[Path]:
    return sorted(p for p in path.iterdir()
                  if p.is_dir() and p.name.startswith("smali"))


def _has_smali(path: Path) -> bool:
    return any(next(root.rglob("*.smali"), None) is not None
               for root in _smali_roots(path))


def detect_layout(path: Path | str) -> InputKind:
    """Classify an input path as apktool output or a raw APK.

    Raises NotAnApp when neither layout matches; the message names both
    failed checks. Missing paths raise FileNotFoundError.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such path: {path}")
    if path.is_dir():
        problems = []
        if not (path / "AndroidManifest.xml").is_file():
            problems.append("no AndroidManifest.xml at directory root")
        if not _has_smali(path):
            problems.append("no .smali files under any smali*/ subdirectory")
        if not problems:
            return InputKind.APKTOOL_DIR
        raise NotAnApp(
            f"{path}: not an apktool directory ({'; '.join(problems)})"
            f" and not a raw APK (path is a directory, no ZIP magic)")
    with open(path, "rb") as handle:
        magic = handle.read(4)
    if magic == ZIP_MAGIC:
        return InputKind.RAW_APK
    raise NotAnApp(
        f"{path}: not a raw APK (first bytes {magic!r}, expected PK\\x03\\x04)"
        f" and not an apktool directory (path is a file)")


def _load_apktool_dir(path: Path) -> tuple[ManifestInfo, CodeIndex]:
    manifest_text = (path / "AndroidManifest.xml").read_text(
        encoding="utf-8", errors="replace")
    manifest = parse_manifest_xml(manifest_text)
    files = []
    for root in _smali_roots(path):
        for smali_path in root.rglob("*.smali"):
            rel = smali_path.relative_to(path).as_posix()
            files.append((rel, smali_path.read_text(encoding="utf-8",
                                                    errors="replace")))
    files.sort(key=lambda item: item[0])
    return manifest, CodeIndex(kind=CodeKind.SMALI, smali_files=tuple(files))


def _dex_order(name: str) -> int:
    match = _DEX_NAME_RE.match(name)
    assert match is not None
    return int(match.group(1)) if match.group(1) else 1


def _load_raw_apk(path: Path) -> tuple[ManifestInfo, CodeIndex]:
    entries = read_zip_entries(path.read_bytes())
    by_name = {entry.name: entry for entry in entries}
    manifest_entry = by_name.get("AndroidManifest.xml")
    if manifest_entry is None:
        raise ManifestMissing(f"{path}: no AndroidManifest.xml entry")
    try:
        tree = decode_axml(manifest_entry.data)
    except AxmlCorrupt as exc:
        raise ManifestUnparsable(f"AndroidManifest.xml: {exc}") from exc
    manifest = manifest_from_axml(tree)

    dex_names = []
    for name in by_name:
        match = _DEX_NAME_RE.match(name)
        if match is None:
            continue
        # classes.dex, then classesN.dex for N >= 2
        if match.group(1) == "" or int(match.group(1)) >= 2:
            dex_names.append(name)
    pools = []
    for name in sorted(dex_names, key=_dex_order):
        try:
            pools.append((name, extract_dex_pool(by_name[name].data)))
        except DexCorrupt as exc:
            raise DexCorrupt(f"{name}: {exc}") from exc
    return manifest, CodeIndex(kind=CodeKind.DEX, dex_pools=tuple(pools))


def load_bundle(path: Path | str,
                declared_category: str | None = None) -> AppBundle:
    """Load a normalized AppBundle from either supported layout.

    Two runs over the same bytes produce structurally identical bundles.
    """
    path = Path(path)
    kind = detect_layout(path)
    if kind is InputKind.APKTOOL_DIR:
        manifest, code = _load_apktool_dir(path)
    else:
        manifest, code = _load_raw_apk(path)
    return AppBundle(
        app_id=manifest.package or path.name,
        source=kind,
        manifest=manifest,
        code=code,
        declared_market_category=declared_category,
    )
