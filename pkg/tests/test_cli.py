"""End-to-end command-line pipeline on a small synthetic world."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from roadrisk.cli import main
from roadrisk.datagen import config_to_dict
from roadrisk.dataset import read_dataset
from roadrisk.manifest import file_digest

from conftest import SMALL_CONFIG

RAW_FILES = ("events.jsonl", "weather.jsonl", "roads.jsonl", "traffic.jsonl", "manifest.json")


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    """One generate -> match -> train chain shared by the read-only tests."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "gen.json"
    cfg.write_text(json.dumps(config_to_dict(SMALL_CONFIG)))

    raw = root / "raw"
    assert main(["generate", "--config", str(cfg), "--out", str(raw)]) == 0

    data = root / "data.csv"
    assert main(["match", "--raw", str(raw), "--out", str(data)]) == 0

    model = root / "model.json"
    assert main(["train", "--data", str(data), "--family", "lr",
                 "--sampling", "under", "--out", str(model)]) == 0
    return {"root": root, "cfg": cfg, "raw": raw, "data": data, "model": model}


def test_generate_writes_stores_and_manifest(work):
    for name in RAW_FILES:
        assert (work["raw"] / name).exists()
    manifest = json.loads((work["raw"] / "run_manifest.json").read_text())
    assert manifest["command"] == "generate"
    assert manifest["seed"] == SMALL_CONFIG.seed
    assert (work["raw"] / "generator_config.json").exists()


def test_generate_is_reproducible(work, tmp_path):
    again = tmp_path / "again"
    assert main(["generate", "--config", str(work["cfg"]), "--out", str(again)]) == 0
    for name in RAW_FILES:
        assert file_digest(again / name) == file_digest(work["raw"] / name)


def test_generate_seed_override_changes_output(work, tmp_path):
    other = tmp_path / "other"
    assert main(["generate", "--config", str(work["cfg"]), "--seed", "999",
                 "--out", str(other)]) == 0
    assert file_digest(other / "events.jsonl") != file_digest(work["raw"] / "events.jsonl")


def test_match_writes_dataset_and_drop_report(work):
    records = read_dataset(work["data"])
    assert len(records) > 1000
    drops = json.loads(Path(f"{work['data']}.drops.json").read_text())
    assert drops["matched"] == len(records)
    assert drops["total_events"] >= drops["matched"]
    # the planted concentration is filtered out
    assert drops["hotspot_cells_flagged"] >= 1
    assert drops["dropped"].get("hotspot", 0) >= SMALL_CONFIG.hotspots[0].extra_event_count


def test_explore_writes_correlations_and_heatmap(work):
    out = work["root"] / "explore"
    assert main(["explore", "--data", str(work["data"]), "--raw", str(work["raw"]),
                 "--out", str(out)]) == 0
    corr = (out / "correlations.csv").read_text().splitlines()
    assert corr[0] == "feature,pearson_r"
    assert len(corr) == 15  # header + 14 measurement columns
    heat = (out / "heatmap.csv").read_text().splitlines()
    assert heat[0] == "cell_lat,cell_lon,count"
    assert len(heat) > 1


def test_train_writes_model_and_validation_report(work):
    assert work["model"].exists()
    report = json.loads(Path(f"{work['model']}.validation.json").read_text())
    assert report["split"] == "validation"
    assert report["family"] == "logistic"
    assert report["sampling"] == "undersample"
    assert 0.0 <= report["auc"] <= 1.0
    assert report["n"] > 0
    assert report["confusion"]["tp"] + report["confusion"]["fn"] == report["n_positive"]


def test_train_accepts_hyperparam_file(work, tmp_path):
    hp = tmp_path / "hp.json"
    hp.write_text(json.dumps({"max_depth": 3, "n_trees": 4}))
    out = tmp_path / "rf.json"
    assert main(["train", "--data", str(work["data"]), "--family", "rf",
                 "--hp", str(hp), "--out", str(out)]) == 0
    saved = json.loads(out.read_text())
    assert saved["hyperparams"]["max_depth"] == 3
    assert saved["hyperparams"]["n_trees"] == 4


def test_evaluate_writes_metrics_and_roc(work):
    out = work["root"] / "eval.json"
    assert main(["evaluate", "--data", str(work["data"]), "--model", str(work["model"]),
                 "--split", "test", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["split"] == "test"
    assert 0.0 <= payload["auc"] <= 1.0
    roc = Path(f"{out}.roc.csv").read_text().splitlines()
    assert roc[0] == "false_positive_rate,true_positive_rate"
    assert len(roc) > 2


def test_sweep_writes_threshold_table(work):
    out = work["root"] / "sweep.csv"
    assert main(["sweep", "--data", str(work["data"]), "--model", str(work["model"]),
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "threshold,accuracy,precision,recall"
    assert len(lines) == 18  # header + 17 grid thresholds
    assert lines[1].startswith("0.10,")
    assert lines[-1].startswith("0.90,")


def test_plot_renders_roc_and_sweep(work):
    out = work["root"] / "plots"
    roc_csv = f"{work['root'] / 'eval.json'}.roc.csv"
    sweep_csv = work["root"] / "sweep.csv"
    assert main(["plot", "--roc", roc_csv, "--sweep", str(sweep_csv),
                 "--out", str(out)]) == 0
    assert (out / "roc.svg").read_text().startswith("<svg")
    assert (out / "sweep.svg").read_text().startswith("<svg")


def test_tune_writes_candidate_table(work):
    out = work["root"] / "tune.csv"
    assert main(["tune", "--family", "dt", "--data", str(work["data"]),
                 "--n", "2", "--folds", "2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("candidate,mean_auc")
    assert len(lines) == 3
    best = json.loads(Path(f"{out}.best.json").read_text())
    assert "max_depth" in best


def test_every_artifact_carries_a_manifest(work):
    for artifact in ("raw/run_manifest.json", "data.csv.manifest.json",
                     "model.json.manifest.json", "eval.json.manifest.json",
                     "sweep.csv.manifest.json", "tune.csv.manifest.json",
                     "explore/run_manifest.json", "plots/run_manifest.json"):
        doc = json.loads((work["root"] / artifact).read_text())
        assert doc["format"] == "roadrisk-run"


def test_errors_exit_nonzero(work, tmp_path, capsys):
    assert main(["match", "--raw", str(tmp_path / "nope"), "--out",
                 str(tmp_path / "d.csv")]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["train", "--data", str(work["data"]), "--family", "svm",
                 "--out", str(tmp_path / "m.json")]) == 1
    assert main(["evaluate", "--data", str(work["data"]),
                 "--model", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "e.json")]) == 1
    assert main(["plot", "--out", str(tmp_path / "plots")]) == 1


def test_serve_requires_model_and_raw(capsys, monkeypatch):
    monkeypatch.delenv("ROADRISK_MODEL", raising=False)
    monkeypatch.delenv("ROADRISK_RAW", raising=False)
    with pytest.raises(SystemExit):
        main(["serve"])


def test_console_entry_point(work, tmp_path):
    # the installed script must behave like the in-process main()
    result = subprocess.run(
        [sys.executable, "-m", "roadrisk.cli", "explore",
         "--data", str(work["data"]), "--out", str(tmp_path / "x")],
        capture_output=True, text=True, timeout=120,
    )
    assert result.returncode == 0
    assert "correlation report" in result.stdout
