import io
import zipfile

import pytest

from binfixtures import build_axml, manifest_elem, simple_dex, write_apktool_app

from apktriage.errors import (
    DexCorrupt,
    ManifestMissing,
    ManifestUnparsable,
    NotAnApp,
    ZipCorrupt,
)
from apktriage.ingest import CodeKind, InputKind, detect_layout, load_bundle

SMALI_STUB = ".class public La/B;\n.super Ljava/lang/Object;\n"


def make_apk(path, entries):
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        for name, data in entries:
            zf.writestr(name, data)
    path.write_bytes(buf.getvalue())
    return path


def axml_manifest(package="com.example.apk", permissions=()):
    return build_axml(manifest_elem(package, permissions=permissions))


class TestDetectLayout:
    def test_apktool_dir(self, tmp_path):
        app = write_apktool_app(tmp_path / "app", "com.example.a",
                                smali_files={"smali/a/B.smali": SMALI_STUB})
        assert detect_layout(app) is InputKind.APKTOOL_DIR

    def test_raw_apk_magic(self, tmp_path):
        apk = make_apk(tmp_path / "app.apk",
                       [("AndroidManifest.xml", axml_manifest())])
        assert detect_layout(apk) is InputKind.RAW_APK

    def test_dir_without_smali_is_not_an_app(self, tmp_path):
        app = write_apktool_app(tmp_path / "app", "com.example.nosmali")
        with pytest.raises(NotAnApp, match="smali"):
            detect_layout(app)

    def test_dir_without_manifest_names_both_checks(self, tmp_path):
        bare = tmp_path / "bare"
        (bare / "smali").mkdir(parents=True)
        (bare / "smali" / "A.smali").write_text(SMALI_STUB)
        bare2 = tmp_path / "empty"
        bare2.mkdir()
        with pytest.raises(NotAnApp, match="AndroidManifest.xml"):
            detect_layout(bare2)
        with pytest.raises(NotAnApp) as err:
            detect_layout(bare2)
        # both failed checks are named
        assert "apktool" in str(err.value) and "raw APK" in str(err.value)

    def test_non_zip_file(self, tmp_path):
        other = tmp_path / "notes.txt"
        other.write_bytes(b"hello")
        with pytest.raises(NotAnApp, match="PK"):
            detect_layout(other)

    def test_missing_path(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            detect_layout(tmp_path / "gone")

    def test_smali_in_nested_multidex_root(self, tmp_path):
        app = tmp_path / "app"
        (app / "smali_classes2" / "x").mkdir(parents=True)
        (app / "AndroidManifest.xml").write_text(
            '<manifest package="com.example.md"/>')
        (app / "smali_classes2" / "x" / "Y.smali").write_text(SMALI_STUB)
        assert detect_layout(app) is InputKind.APKTOOL_DIR


class TestLoadApktoolDir:
    def test_loads_manifest_and_files(self, tmp_path):
        app = write_apktool_app(
            tmp_path / "app", "com.example.sms",
            permissions=["android.permission.SEND_SMS"],
            smali_files={
                "smali/com/example/Main.smali": SMALI_STUB,
                "smali/com/example/Util.smali": SMALI_STUB,
                "smali_classes2/com/aux/K.smali": SMALI_STUB,
            })
        bundle = load_bundle(app)
        assert bundle.app_id == "com.example.sms"
        assert bundle.source is InputKind.APKTOOL_DIR
        assert bundle.code.kind is CodeKind.SMALI
        assert len(bundle.code.smali_files) == 3
        assert "android.permission.SEND_SMS" in \
            bundle.manifest.declared_permissions

    def test_paths_sorted_unique_posix(self, tmp_path):
        app = write_apktool_app(
            tmp_path / "app", "com.example.paths",
            smali_files={
                "smali/z/Z.smali": SMALI_STUB,
                "smali/a/A.smali": SMALI_STUB,
                "smali_classes2/m/M.smali": SMALI_STUB,
            })
        paths = [p for p, _ in load_bundle(app).code.smali_files]
        assert paths == sorted(paths)
        assert len(set(paths)) == len(paths)
        assert all("\\" not in p for p in paths)

    def test_load_is_deterministic(self, tmp_path):
        app = write_apktool_app(
            tmp_path / "app", "com.example.det",
            permissions=["android.permission.INTERNET"],
            smali_files={"smali/a/B.smali": SMALI_STUB})
        assert load_bundle(app) == load_bundle(app)

    def test_unparsable_manifest_propagates(self, tmp_path):
        app = tmp_path / "app"
        (app / "smali").mkdir(parents=True)
        (app / "AndroidManifest.xml").write_text("<manifest package='x'")
        (app / "smali" / "A.smali").write_text(SMALI_STUB)
        with pytest.raises(ManifestUnparsable):
            load_bundle(app)

    def test_declared_category_recorded(self, tmp_path):
        app = write_apktool_app(tmp_path / "app", "com.example.decl",
                                smali_files={"smali/A.smali": SMALI_STUB})
        bundle = load_bundle(app, declared_category="Games")
        assert bundle.declared_market_category == "Games"


class TestLoadRawApk:
    def test_multidex_pools_in_order(self, tmp_path):
        dex1 = simple_dex(["Landroid/telephony/SmsManager;"])
        dex2 = simple_dex(["Landroid/media/AudioRecord;"])
        apk = make_apk(tmp_path / "app.apk", [
            ("classes2.dex", dex2),  # archive order reversed on purpose
            ("AndroidManifest.xml",
             axml_manifest(permissions=["android.permission.SEND_SMS"])),
            ("classes.dex", dex1),
        ])
        bundle = load_bundle(apk)
        assert bundle.app_id == "com.example.apk"
        assert bundle.code.kind is CodeKind.DEX
        names = [name for name, _ in bundle.code.dex_pools]
        assert names == ["classes.dex", "classes2.dex"]
        assert bundle.code.dex_pools[0][1].type_descriptors == \
            ["Landroid/telephony/SmsManager;"]

    def test_apk_without_dex_is_manifest_only(self, tmp_path):
        apk = make_apk(tmp_path / "app.apk",
                       [("AndroidManifest.xml", axml_manifest()),
                        ("res/layout/main.xml", b"ignored")])
        bundle = load_bundle(apk)
        assert bundle.code.dex_pools == ()

    def test_classes1_and_classes0_not_dex_entries(self, tmp_path):
        apk = make_apk(tmp_path / "app.apk", [
            ("AndroidManifest.xml", axml_manifest()),
            ("classes0.dex", b"junk"),
            ("classes1.dex", b"junk"),
        ])
        assert load_bundle(apk).code.dex_pools == ()

    def test_manifest_missing(self, tmp_path):
        apk = make_apk(tmp_path / "app.apk", [("classes.dex", b"x")])
        with pytest.raises(ManifestMissing):
            load_bundle(apk)

    def test_corrupt_axml_is_manifest_unparsable(self, tmp_path):
        apk = make_apk(tmp_path / "app.apk",
                       [("AndroidManifest.xml", b"\x00" * 32)])
        with pytest.raises(ManifestUnparsable):
            load_bundle(apk)

    def test_corrupt_dex_names_entry(self, tmp_path):
        apk = make_apk(tmp_path / "app.apk", [
            ("AndroidManifest.xml", axml_manifest()),
            ("classes.dex", simple_dex(["V"])),
            ("classes2.dex", b"not a dex file at all"),
        ])
        with pytest.raises(DexCorrupt, match="classes2.dex"):
            load_bundle(apk)

    def test_corrupt_zip_propagates(self, tmp_path):
        bad = tmp_path / "bad.apk"
        bad.write_bytes(b"PK\x03\x04" + b"\x00" * 64)
        with pytest.raises(ZipCorrupt):
            load_bundle(bad)

    def test_load_is_deterministic(self, tmp_path):
        apk = make_apk(tmp_path / "app.apk", [
            ("AndroidManifest.xml", axml_manifest()),
            ("classes.dex", simple_dex(["V"])),
        ])
        assert load_bundle(apk) == load_bundle(apk)
