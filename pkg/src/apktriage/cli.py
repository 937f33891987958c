"""Command-line front end.

Exit codes separate "analysis found something" from "analysis failed":
0 benign / validation clean, 10 suspicious, 11 malicious suspect (corpus
runs return the worst per-app code), 1 usage or I/O error, 2 parse error
(zip/axml/dex/manifest/catalog). Corpus output is buffered per app and
emitted in sorted order, so it is independent of --jobs and of filesystem
enumeration order.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from .catalogs import (
    CatalogInvalid,
    CatalogSet,
    load_api_map,
    load_category_rules,
    load_default_catalogs,
    load_feature_catalog,
)
from .categorize import DEFAULT_MIN_SCORE
from .errors import (
    ApkTriageError,
    AxmlCorrupt,
    DexCorrupt,
    ManifestMissing,
    ManifestUnparsable,
    ZipCorrupt,
)
from .ingest import load_bundle
from .report import TOOL_VERSION, render, run_pipeline

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_SUSPICIOUS = 10
EXIT_MALICIOUS = 11

_VERDICT_EXIT = {
    "benign": EXIT_OK,
    "suspicious": EXIT_SUSPICIOUS,
    "malicious_suspect": EXIT_MALICIOUS,
}

_PARSE_ERRORS = (ZipCorrupt, AxmlCorrupt, DexCorrupt, ManifestMissing,
                 ManifestUnparsable, CatalogInvalid)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our contract reserves 2 for
    parse failures, so remap to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fraction(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"min score {text} outside [0, 1]")
    return value


def _add_catalog_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--catalog", type=Path, metavar="F",
                        help="feature catalog file (JSON or plain list)")
    parser.add_argument("--categories", type=Path, metavar="F",
                        help="category rule set file (JSON)")
    parser.add_argument("--api-map", type=Path, metavar="F",
                        help="API-to-permission map file (JSON)")
    parser.add_argument("--declared-category", metavar="NAME",
                        help="store-declared category for this app")
    parser.add_argument("--min-score", type=_fraction, metavar="R",
                        default=DEFAULT_MIN_SCORE,
                        help="assignment threshold, rational in [0,1]"
                             " (default 1/2)")
    parser.add_argument("--format", choices=("json", "text"),
                        default="json", help="report format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="apktriage",
                     description="Static triage for Android app packages")
    parser.add_argument("--version", action="version", version=TOOL_VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="analyze one app input")
    analyze.add_argument("path", type=Path,
                         help="apktool output directory or raw .apk file")
    _add_catalog_flags(analyze)
    analyze.add_argument("--out", type=Path, metavar="FILE",
                         help="write the report here instead of stdout")

    corpus = sub.add_parser("corpus", help="analyze every app in a directory")
    corpus.add_argument("dir", type=Path,
                        help="directory whose children are app inputs")
    _add_catalog_flags(corpus)
    corpus.add_argument("--out", type=Path, metavar="DIR",
                        help="write per-app reports into this directory")
    corpus.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="parallel workers (output is identical for"
                             " any value)")
    corpus.add_argument("--summary", choices=("json", "csv"),
                        default="json", help="summary format on stdout")

    catalog = sub.add_parser("catalog", help="catalog utilities")
    catalog_sub = catalog.add_subparsers(dest="catalog_command",
                                         required=True)
    validate = catalog_sub.add_parser("validate",
                                      help="load and validate catalog files")
    validate.add_argument("files", type=Path, nargs="+")
    return parser


def _load_catalogs(args) -> CatalogSet:
    return load_default_catalogs(features_path=args.catalog,
                                 categories_path=args.categories,
                                 api_map_path=args.api_map)


def _analyze_one(path: Path, catalogs: CatalogSet, declared: str | None,
                 min_score: Fraction, fmt: str) -> tuple[int, bytes, dict]:
    """Returns (exit code, rendered report, summary row)."""
    bundle = load_bundle(path, declared_category=declared)
    report = run_pipeline(bundle, catalogs, min_score=min_score)
    row = {
        "app_id": report.app_id,
        "category": report.assignment.assigned,
        "score": str(report.assignment.score),
        "flags": len(report.flags),
        "verdict": report.verdict.level.value,
    }
    return (_VERDICT_EXIT[report.verdict.level.value],
            render(report, fmt), row)


def _error_exit(exc: Exception) -> int:
    return EXIT_PARSE if isinstance(exc, _PARSE_ERRORS) else EXIT_USAGE


def _cmd_analyze(args) -> int:
    catalogs = _load_catalogs(args)
    code, rendered, _ = _analyze_one(args.path, catalogs,
                                     args.declared_category,
                                     args.min_score, args.format)
    if args.out:
        args.out.write_bytes(rendered)
    else:
        sys.stdout.buffer.write(rendered)
        sys.stdout.buffer.flush()
    return code


def _corpus_inputs(root: Path) -> list[Path]:
    if not root.is_dir():
        raise NotADirectoryError(f"not a directory: {root}")
    return sorted(
        (child for child in root.iterdir()
         if child.is_dir() or child.suffix == ".apk"),
        key=lambda p: p.name)


def _cmd_corpus(args) -> int:
    catalogs = _load_catalogs(args)
    inputs = _corpus_inputs(args.dir)

    def work(path: Path):
        try:
            return path, _analyze_one(path, catalogs, args.declared_category,
                                      args.min_score, args.format), None
        except Exception as exc:  # per-app isolation
            return path, None, exc

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(work, inputs))
    else:
        outcomes = [work(path) for path in inputs]

    rows = []
    rendered_reports: list[tuple[Path, bytes]] = []
    worst = EXIT_OK
    for path, result, exc in outcomes:
        if exc is not None:
            print(f"apktriage: {path.name}: {exc}", file=sys.stderr)
            worst = max(worst, _error_exit(exc))
            rows.append({"app_id": path.name, "category": "", "score": "",
                         "flags": 0, "verdict": "error"})
            continue
        code, rendered, row = result
        worst = max(worst, code)
        row["_input"] = path.name
        rows.append(row)
        rendered_reports.append((path, rendered))

    rows.sort(key=lambda r: (r["app_id"], r.get("_input", r["app_id"])))
    for row in rows:
        row.pop("_input", None)

    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        suffix = ".json" if args.format == "json" else ".txt"
        for path, rendered in sorted(rendered_reports,
                                     key=lambda item: item[0].name):
            (args.out / (path.name + suffix)).write_bytes(rendered)

    sys.stdout.buffer.write(_summarize(rows, args.summary))
    sys.stdout.buffer.flush()
    return worst


def _summarize(rows: list[dict], fmt: str) -> bytes:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(
            buf, fieldnames=["app_id", "category", "score", "flags",
                             "verdict"],
            lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue().encode("utf-8")
    by_category: dict[str, int] = {}
    by_verdict: dict[str, int] = {}
    for row in rows:
        if row["category"]:
            by_category[row["category"]] = \
                by_category.get(row["category"], 0) + 1
        by_verdict[row["verdict"]] = by_verdict.get(row["verdict"], 0) + 1
    doc = {"apps": rows, "by_category": by_category,
           "by_verdict": by_verdict, "total": len(rows)}
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)
    return text.encode("utf-8") + b"\n"


_SNIFF_LOADERS = (
    ("features", "feature catalog", load_feature_catalog,
     lambda c: f"{len(c.features)} features"),
    ("categories", "category rules", load_category_rules,
     lambda c: f"{len(c.rules)} categories"),
    ("entries", "api map", load_api_map,
     lambda c: f"{len(c.entries)} entries"),
)


def _validate_catalog_file(path: Path) -> str | None:
    """Returns an error message, or None when the file validates."""
    data = path.read_bytes()
    text = data.decode("utf-8", errors="replace")
    if text.lstrip().startswith("{"):
        try:
            keys = json.loads(text).keys()
        except (json.JSONDecodeError, AttributeError) as exc:
            return f"not valid JSON: {exc}"
        for key, kind, loader, describe in _SNIFF_LOADERS:
            if key in keys:
                catalog = loader(data)
                print(f"{path}: OK ({kind}, version {catalog.version},"
                      f" {describe(catalog)})")
                return None
        return ("unrecognized catalog document (expected a 'features',"
                " 'categories', or 'entries' key)")
    catalog = load_feature_catalog(data)
    print(f"{path}: OK (feature list, version {catalog.version},"
          f" {len(catalog.features)} features)")
    return None


def _cmd_catalog_validate(args) -> int:
    worst = EXIT_OK
    for path in args.files:
        try:
            error = _validate_catalog_file(path)
        except CatalogInvalid as exc:
            error = str(exc)
        except OSError as exc:
            print(f"{path}: INVALID: {exc}", file=sys.stderr)
            worst = max(worst, EXIT_USAGE)
            continue
        if error is not None:
            print(f"{path}: INVALID: {error}", file=sys.stderr)
            worst = max(worst, EXIT_PARSE)
    return worst


def run_cli(argv: list[str] | None = None) -> int:
    """Parse argv and run one command, returning the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "corpus":
            return _cmd_corpus(args)
        return _cmd_catalog_validate(args)
    except _PARSE_ERRORS as exc:
        print(f"apktriage: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ApkTriageError as exc:
        print(f"apktriage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"apktriage: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> int:
    return run_cli()


if __name__ == "__main__":
    sys.exit(main())
