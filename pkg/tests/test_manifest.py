"""Run manifests and content digests."""

import hashlib
import json

from roadrisk.manifest import describe_file, file_digest, write_run_manifest


def test_file_digest_is_sha256(tmp_path):
    path = tmp_path / "blob.bin"
    payload = b"roadrisk" * 1000
    path.write_bytes(payload)
    assert file_digest(path) == hashlib.sha256(payload).hexdigest()


def test_describe_file_uses_basename(tmp_path):
    path = tmp_path / "deep" / "nested"
    path.mkdir(parents=True)
    target = path / "model.json"
    target.write_text("{}")
    desc = describe_file(target)
    assert desc["file"] == "model.json"
    assert "/" not in desc["file"]
    assert len(desc["sha256"]) == 64


def test_manifest_content(tmp_path):
    out = tmp_path / "data.csv"
    out.write_text("a,b\n1,2\n")
    path = write_run_manifest(
        tmp_path / "manifest.json",
        command="generate",
        seed=7,
        inputs={"config": "gen.json"},
        parameters={"n_events": 4000},
        outputs=[out],
    )
    doc = json.loads(path.read_text())
    assert doc["format"] == "roadrisk-run"
    assert doc["format_version"] == 1
    assert doc["command"] == "generate"
    assert doc["seed"] == 7
    assert doc["parameters"]["n_events"] == 4000
    assert doc["outputs"][0]["file"] == "data.csv"
    assert doc["outputs"][0]["sha256"] == file_digest(out)
    assert "package_version" in doc


def test_manifest_is_reproducible(tmp_path):
    # no timestamps and no absolute paths: identical runs produce identical bytes
    out = tmp_path / "x.txt"
    out.write_text("payload")
    a = write_run_manifest(tmp_path / "a.json", command="match", seed=None, outputs=[out])
    b = write_run_manifest(tmp_path / "b.json", command="match", seed=None, outputs=[out])
    assert a.read_bytes() == b.read_bytes()
    assert str(tmp_path) not in a.read_text()


def test_manifest_creates_parent_dirs(tmp_path):
    path = write_run_manifest(tmp_path / "runs" / "m.json", command="train", seed=0)
    assert path.exists()
    assert json.loads(path.read_text())["outputs"] == []
