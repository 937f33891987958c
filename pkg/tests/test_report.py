import json
from fractions import Fraction

import pytest

from binfixtures import write_apktool_app, write_sms_in_games_app

from apktriage.ingest import load_bundle
from apktriage.report import TOOL_VERSION, render, report_to_dict, run_pipeline


@pytest.fixture()
def golden_report(catalogs, tmp_path):
    app = write_sms_in_games_app(tmp_path / "sms_in_games")
    return run_pipeline(load_bundle(app), catalogs)


def test_end_to_end_sms_in_games(golden_report):
    report = golden_report
    assert report.app_id == "com.puzzlebox.game"
    assert report.assignment.assigned == "Games"
    assert report.assignment.score == 1
    assert len(report.flags) == 1
    flag = report.flags[0]
    assert flag.feature_id == "android_telephony_smsmanager"
    assert flag.occurrence_count == 4
    assert report.verdict.level.value == "malicious_suspect"
    assert report.permissions["status"] == "exact"
    assert report.permissions["unmapped_ref_count"] == 1


def test_feature_rows_match_flags(golden_report):
    rows = {f["feature_id"]: f for f in golden_report.features}
    assert rows["android_telephony_smsmanager"]["flagged"] is True
    assert rows["android_telephony_smsmanager"]["count"] == 4
    locations = rows["android_telephony_smsmanager"]["locations"]
    assert len(locations) == 4
    keys = [(l["file"], l["line"], l["kind"]) for l in locations]
    assert keys == sorted(keys)


def test_versions_embedded(golden_report, catalogs):
    assert golden_report.tool_version == TOOL_VERSION
    assert golden_report.catalog_versions == {
        "features": catalogs.features.version,
        "categories": catalogs.categories.version,
        "api_map": catalogs.api_map.version,
    }


def test_json_rendering_is_deterministic(catalogs, tmp_path):
    app = write_sms_in_games_app(tmp_path / "app")
    first = render(run_pipeline(load_bundle(app), catalogs), "json")
    second = render(run_pipeline(load_bundle(app), catalogs), "json")
    assert first == second


def test_json_round_trip_stable(golden_report):
    rendered = render(golden_report, "json")
    reparsed = json.loads(rendered.decode("utf-8"))
    again = json.dumps(reparsed, sort_keys=True, separators=(",", ":"),
                       ensure_ascii=False).encode("utf-8") + b"\n"
    assert again == rendered


def test_json_has_trailing_lf_and_sorted_keys(golden_report):
    rendered = render(golden_report, "json")
    assert rendered.endswith(b"\n")
    doc = json.loads(rendered)
    assert list(doc) == sorted(doc)
    assert doc["assignment"]["score"] == "1"
    assert doc["permissions"]["declared"] == \
        sorted(doc["permissions"]["declared"])


def test_dex_locations_omit_line(catalogs, tmp_path):
    import io
    import zipfile

    from binfixtures import build_axml, manifest_elem, simple_dex

    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        zf.writestr("AndroidManifest.xml", build_axml(manifest_elem(
            "com.example.dexloc",
            permissions=["android.permission.RECORD_AUDIO"])))
        zf.writestr("classes.dex",
                    simple_dex(["Landroid/media/AudioRecord;"]))
    apk = tmp_path / "a.apk"
    apk.write_bytes(buf.getvalue())
    report = run_pipeline(load_bundle(apk), catalogs)
    doc = report_to_dict(report)
    (feature,) = doc["features"]
    assert feature["locations"] == [{"file": "classes.dex",
                                     "kind": "dex_ref"}]


def test_text_rendering_sections(golden_report):
    text = render(golden_report, "text").decode("utf-8")
    assert text.splitlines()[0] == \
        "com.puzzlebox.game  Games(1)  malicious_suspect"
    assert "Features:" in text
    assert "Flags:" in text
    assert "Permission gap: exact" in text
    assert "Verdict: malicious_suspect" in text


def test_text_flags_none_line(catalogs, tmp_path):
    app = write_apktool_app(
        tmp_path / "plain", "com.example.plain",
        permissions=["android.permission.INTERNET",
                     "android.permission.READ_PHONE_STATE"],
        smali_files={"smali/A.smali": "    return-void"})
    report = run_pipeline(load_bundle(app), catalogs)
    text = render(report, "text").decode("utf-8")
    assert "Flags: none" in text
    assert "Features: none" in text


def test_manifest_only_app_is_benign(catalogs, tmp_path):
    app = write_apktool_app(
        tmp_path / "empty", "com.example.empty",
        smali_files={"smali/A.smali": "    return-void"})
    report = run_pipeline(load_bundle(app), catalogs)
    assert report.features == ()
    assert report.flags == ()
    assert report.verdict.level.value == "benign"
    assert report.assignment.assigned == "Uncategorized"


def test_min_score_threading(catalogs, tmp_path):
    app = write_apktool_app(
        tmp_path / "net", "com.example.net",
        permissions=["android.permission.INTERNET"],
        smali_files={"smali/A.smali": "    return-void"})
    bundle = load_bundle(app)
    low = run_pipeline(bundle, catalogs, min_score=Fraction(1, 2))
    high = run_pipeline(bundle, catalogs, min_score=Fraction(3, 5))
    assert low.assignment.assigned == "Games"
    assert high.assignment.assigned == "Uncategorized"


def test_declared_category_in_report(catalogs, tmp_path):
    app = write_apktool_app(
        tmp_path / "decl", "com.example.decl",
        permissions=["android.permission.CAMERA",
                     "android.permission.RECORD_AUDIO",
                     "android.permission.MODIFY_AUDIO_SETTINGS",
                     "android.permission.INTERNET"],
        smali_files={"smali/A.smali": "    return-void"})
    bundle = load_bundle(app, declared_category="Games")
    doc = report_to_dict(run_pipeline(bundle, catalogs))
    assert doc["assignment"]["assigned"] == "Games"
    assert doc["assignment"]["declared"] == "Games"
    assert doc["assignment"]["declared_agreement"] is False


def test_unknown_format_rejected(golden_report):
    with pytest.raises(ValueError):
        render(golden_report, "yaml")
