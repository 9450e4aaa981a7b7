"""Command-line pipeline: generate, match, explore, train, evaluate, tune, sweep, serve, plot."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from .dataset import DatasetFormatError, read_dataset, write_dataset
from .datagen import (
    DatagenError,
    GeneratorConfig,
    config_digest,
    config_to_dict,
    emit_raw_files,
    generate,
    ingest_raw_files,
    load_config,
)
from .domain import DEFAULT_SCHEMA, encode_dataset
from .evaluation import (
    accuracy,
    confusion,
    feature_correlation_report,
    precision,
    recall,
    roc_auc,
    threshold_sweep,
)
from .geomatch import (
    DEFAULT_HOTSPOT_CELL_DEG,
    DEFAULT_HOTSPOT_Z,
    GeomatchError,
    assemble,
    detect_hotspots,
    heatmap_rows,
    split,
)
from .manifest import describe_file, file_digest, write_run_manifest
from .models import (
    ModelFileError,
    canonical_family,
    fit,
    hyperparams_class,
    load_model,
    save_model,
)
from .models.tree import DecisionTreeModel
from .sampling import CLI_ALIASES, SamplingError, SamplingStrategy, resample
from .tuning import TuningError, default_space, random_search

_SPLIT_NAMES = ("train", "validation", "test")
_UNDEFINED = "undefined"


def _fmt_metric(v: float | None) -> str:
    return _UNDEFINED if v is None else f"{v:.4f}"


def _pick_split(records, name: str, seed: int):
    parts = split(records, seed=seed)
    return {
        "train": list(parts.train.records),
        "validation": list(parts.validation),
        "test": list(parts.test),
    }[name]


def _metrics_payload(model, records, threshold: float) -> dict:
    X, y, _ = encode_dataset(records, DEFAULT_SCHEMA)
    scores = np.atleast_1d(model.predict_proba(X, schema=DEFAULT_SCHEMA))
    c = confusion(y, scores >= threshold)
    try:
        curve = roc_auc(y, scores)
        auc = curve.auc
        roc_points = curve.points
    except ValueError:
        auc = None
        roc_points = ()
    return {
        "n": int(y.size),
        "n_positive": int(y.sum()),
        "threshold": threshold,
        "accuracy": accuracy(c),
        "precision": precision(c),
        "recall": recall(c),
        "auc": auc,
        "confusion": {"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn},
        "_roc_points": roc_points,
    }


def _write_json(path: Path, payload: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _print_metrics(tag: str, payload: dict):
    print(f"{tag}: n={payload['n']} positives={payload['n_positive']}")
    for key in ("accuracy", "precision", "recall", "auc"):
        print(f"  {key}: {_fmt_metric(payload[key])}")


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(args) -> int:
    config = load_config(args.config) if args.config else GeneratorConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    out = Path(args.out)
    stores = generate(config)
    paths = emit_raw_files(stores, out)
    config_path = _write_json(out / "generator_config.json", config_to_dict(config))
    positives = sum(e.is_emergency_braking for e in stores.events)
    write_run_manifest(
        out / "run_manifest.json",
        command="generate",
        seed=config.seed,
        inputs={"config_digest": config_digest(config)},
        parameters={"n_events": config.n_events,
                    "positive_fraction": config.positive_fraction},
        outputs=[*paths.values(), config_path],
    )
    print(f"generated {len(stores.events)} events "
          f"({positives / len(stores.events):.4f} positive), "
          f"{len(stores.weather)} weather records, {len(stores.roads)} road segments, "
          f"{len(stores.traffic)} traffic records -> {out}")
    return 0


def cmd_match(args) -> int:
    raw = Path(args.raw)
    stores = ingest_raw_files(raw)
    hotspots = detect_hotspots(stores.events, cell_size_deg=args.hotspot_cell,
                               z_threshold=args.hotspot_z)
    result = assemble(stores.events, stores.weather, stores.roads, stores.traffic,
                      hotspots=hotspots)
    out = Path(args.out)
    write_dataset(result.records, out)
    drops_path = _write_json(Path(f"{out}.drops.json"), {
        "total_events": result.total_events,
        "matched": len(result.records),
        "survival_rate": result.survival_rate,
        "dropped": dict(sorted(result.dropped.items())),
        "hotspot_cells_flagged": len(hotspots.cells),
    })
    write_run_manifest(
        Path(f"{out}.manifest.json"),
        command="match",
        seed=None,
        inputs={"raw_manifest": describe_file(raw / "manifest.json")},
        parameters={"hotspot_z": args.hotspot_z, "hotspot_cell": args.hotspot_cell},
        outputs=[out, drops_path],
    )
    print(f"matched {len(result.records)}/{result.total_events} events "
          f"({result.survival_rate:.4f} survival) -> {out}")
    for reason, count in sorted(result.dropped.items()):
        print(f"  dropped {count}: {reason}")
    return 0


def cmd_explore(args) -> int:
    records = read_dataset(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = feature_correlation_report(records)
    corr_path = out / "correlations.csv"
    with corr_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "pearson_r"])
        for name, rho in report:
            writer.writerow([name, _UNDEFINED if rho is None else repr(rho)])
    outputs = [corr_path]
    if args.raw:
        stores = ingest_raw_files(Path(args.raw))
        hotspots = detect_hotspots(stores.events, cell_size_deg=args.hotspot_cell,
                                   z_threshold=args.hotspot_z)
        heat_path = out / "heatmap.csv"
        with heat_path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cell_lat", "cell_lon", "count"])
            for lat, lon, count in heatmap_rows(hotspots):
                writer.writerow([repr(lat), repr(lon), count])
        outputs.append(heat_path)
    write_run_manifest(
        out / "run_manifest.json",
        command="explore",
        seed=None,
        inputs={"dataset": describe_file(args.data)},
        parameters={},
        outputs=outputs,
    )
    print(f"correlation report ({len(records)} records) -> {corr_path}")
    for name, rho in report[:5]:
        print(f"  {name}: {_UNDEFINED if rho is None else f'{rho:+.4f}'}")
    return 0


def _resolve_hyperparams(family: str, hp_path: str | None):
    if hp_path is None:
        return None
    with open(hp_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return hyperparams_class(family)(**doc)


def cmd_train(args) -> int:
    family = canonical_family(args.family)
    records = read_dataset(args.data)
    parts = split(records, seed=args.seed)
    strategy = SamplingStrategy(kind=CLI_ALIASES[args.sampling], seed=args.seed)
    train_records = resample(parts.train, strategy).records
    X, y, _ = encode_dataset(train_records, DEFAULT_SCHEMA)
    hp = _resolve_hyperparams(family, args.hp)
    model = fit(family, X, y, hp, seed=args.seed, schema=DEFAULT_SCHEMA)
    out = Path(args.out)
    save_model(model, out)
    payload = _metrics_payload(model, list(parts.validation), args.threshold)
    payload.pop("_roc_points")
    payload.update({"split": "validation", "family": family, "sampling": strategy.kind})
    report_path = _write_json(Path(f"{out}.validation.json"), payload)
    write_run_manifest(
        Path(f"{out}.manifest.json"),
        command="train",
        seed=args.seed,
        inputs={"dataset": describe_file(args.data)},
        parameters={"family": family, "sampling": strategy.kind,
                    "threshold": args.threshold,
                    "hyperparams": dataclasses.asdict(model.hyperparams)},
        outputs=[out, report_path],
    )
    print(f"trained {family} on {len(train_records)} records "
          f"(sampling={strategy.kind}) -> {out}")
    _print_metrics("validation", payload)
    return 0


def cmd_evaluate(args) -> int:
    records = read_dataset(args.data)
    subset = _pick_split(records, args.split, args.seed)
    model = load_model(args.model)
    payload = _metrics_payload(model, subset, args.threshold)
    roc_points = payload.pop("_roc_points")
    payload.update({"split": args.split, "family": model.family})
    out = Path(args.out)
    _write_json(out, payload)
    roc_path = Path(f"{out}.roc.csv")
    with roc_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["false_positive_rate", "true_positive_rate"])
        for fpr, tpr in roc_points:
            writer.writerow([repr(fpr), repr(tpr)])
    write_run_manifest(
        Path(f"{out}.manifest.json"),
        command="evaluate",
        seed=args.seed,
        inputs={"dataset": describe_file(args.data), "model": describe_file(args.model)},
        parameters={"split": args.split, "threshold": args.threshold},
        outputs=[out, roc_path],
    )
    _print_metrics(f"{args.split} (threshold {args.threshold})", payload)
    return 0


def cmd_tune(args) -> int:
    family = canonical_family(args.family)
    records = read_dataset(args.data)
    parts = split(records, seed=args.seed)
    strategy = SamplingStrategy(kind=CLI_ALIASES[args.sampling], seed=args.seed)
    train_records = resample(parts.train, strategy).records
    X, y, _ = encode_dataset(train_records, DEFAULT_SCHEMA)
    space = default_space(family)
    report = random_search(family, space, X, y, n_candidates=args.n,
                           k=args.folds, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["candidate", "mean_auc", "mean_accuracy", "mean_precision",
                         "mean_recall", "error", "hyperparams"])
        for cand in report.candidates:
            writer.writerow([
                cand.index,
                _fmt_metric(cand.mean_auc),
                _fmt_metric(cand.mean_accuracy),
                _fmt_metric(cand.mean_precision),
                _fmt_metric(cand.mean_recall),
                cand.error or "",
                json.dumps(dataclasses.asdict(cand.hyperparams), sort_keys=True),
            ])
    best = report.best
    best_path = _write_json(Path(f"{out}.best.json"),
                            dataclasses.asdict(best.hyperparams))
    write_run_manifest(
        Path(f"{out}.manifest.json"),
        command="tune",
        seed=args.seed,
        inputs={"dataset": describe_file(args.data)},
        parameters={"family": family, "n_candidates": args.n, "folds": args.folds,
                    "sampling": strategy.kind},
        outputs=[out, best_path],
    )
    print(f"searched {len(report.candidates)} candidates ({family}, {args.folds}-fold)")
    print(f"  best: candidate {best.index}, mean AUC {_fmt_metric(best.mean_auc)}")
    print(f"  hyperparams: {json.dumps(dataclasses.asdict(best.hyperparams), sort_keys=True)}")
    return 0


def cmd_sweep(args) -> int:
    records = read_dataset(args.data)
    subset = _pick_split(records, args.split, args.seed)
    model = load_model(args.model)
    X, y, _ = encode_dataset(subset, DEFAULT_SCHEMA)
    rows = threshold_sweep(model, X, y, schema=DEFAULT_SCHEMA)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "accuracy", "precision", "recall"])
        for row in rows:
            writer.writerow([f"{row.threshold:.2f}", _fmt_metric(row.accuracy),
                             _fmt_metric(row.precision), _fmt_metric(row.recall)])
    write_run_manifest(
        Path(f"{out}.manifest.json"),
        command="sweep",
        seed=args.seed,
        inputs={"dataset": describe_file(args.data), "model": describe_file(args.model)},
        parameters={"split": args.split},
        outputs=[out],
    )
    print(f"threshold sweep on {args.split} ({len(rows)} thresholds) -> {out}")
    for row in rows:
        print(f"  {row.threshold:.2f}: accuracy={_fmt_metric(row.accuracy)} "
              f"precision={_fmt_metric(row.precision)} recall={_fmt_metric(row.recall)}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import SnapshotConditionProvider, create_app

    model_path = Path(args.model)
    model = load_model(model_path)
    tree = None
    if args.tree:
        tree = load_model(args.tree)
        if not isinstance(tree, DecisionTreeModel):
            raise ModelFileError(f"--tree expects a tree-family model, got {tree.family}")
    stores = ingest_raw_files(Path(args.raw))
    provider = SnapshotConditionProvider(stores.weather, stores.roads, stores.traffic)
    version = f"{model.family}-{file_digest(model_path)[:12]}"
    app = create_app(model, provider, tree=tree, threshold=args.threshold,
                     model_version=version)
    print(f"serving {version} on {args.host}:{args.port} (threshold {args.threshold})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_plot(args) -> int:
    from .plotting import svg_line_chart

    if not args.roc and not args.sweep:
        raise ValueError("plot needs --roc and/or --sweep input files")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    inputs = {}
    if args.roc:
        with open(args.roc, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            points = [(float(r["false_positive_rate"]), float(r["true_positive_rate"]))
                      for r in reader]
        outputs.append(svg_line_chart(
            out / "roc.svg", [("ROC", points)],
            title="Receiver operating characteristic",
            x_label="false positive rate", y_label="true positive rate",
            diagonal=True,
        ))
        inputs["roc"] = describe_file(args.roc)
    if args.sweep:
        with open(args.sweep, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            series = {"accuracy": [], "precision": [], "recall": []}
            for r in reader:
                t = float(r["threshold"])
                for key in series:
                    v = r[key]
                    series[key].append((t, None if v == _UNDEFINED else float(v)))
        outputs.append(svg_line_chart(
            out / "sweep.svg",
            [(k, v) for k, v in series.items()],
            title="Metrics across classification thresholds",
            x_label="classification threshold", y_label="score",
        ))
        inputs["sweep"] = describe_file(args.sweep)
    write_run_manifest(out / "run_manifest.json", command="plot", seed=None,
                       inputs=inputs, parameters={}, outputs=outputs)
    for p in outputs:
        print(f"wrote {p}")
    return 0


def cmd_predict(args) -> int:
    import httpx

    body = {"latitude": args.lat, "longitude": args.lon}
    if args.timestamp is not None:
        body["timestamp"] = args.timestamp
    url = args.url.rstrip("/") + "/v1/predict"
    response = httpx.post(url, json=body, timeout=30.0)
    print(json.dumps(response.json(), indent=2, sort_keys=True))
    return 0 if response.status_code == 200 else 1


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roadrisk",
        description="Traffic incident risk pipeline: synthetic feeds, matching, "
                    "models, and a prediction service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="produce the four synthetic raw stores")
    p.add_argument("--config", help="generator config JSON; defaults used when omitted")
    p.add_argument("--out", required=True, help="output directory for the raw stores")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("match", help="join events to conditions and write the dataset")
    p.add_argument("--raw", required=True, help="directory holding the raw stores")
    p.add_argument("--out", required=True, help="matched dataset CSV path")
    p.add_argument("--hotspot-z", type=float, default=DEFAULT_HOTSPOT_Z)
    p.add_argument("--hotspot-cell", type=float, default=DEFAULT_HOTSPOT_CELL_DEG)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("explore", help="correlation report and event heatmap")
    p.add_argument("--data", required=True, help="matched dataset CSV")
    p.add_argument("--raw", help="raw store directory (enables the heatmap)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--hotspot-z", type=float, default=DEFAULT_HOTSPOT_Z)
    p.add_argument("--hotspot-cell", type=float, default=DEFAULT_HOTSPOT_CELL_DEG)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("train", help="fit one model family and report validation metrics")
    p.add_argument("--data", required=True)
    p.add_argument("--family", required=True,
                   help="logistic|tree|forest|network (aliases lr/dt/rf/nn)")
    p.add_argument("--sampling", choices=sorted(CLI_ALIASES), default="none")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--hp", help="JSON file with hyperparameter overrides")
    p.add_argument("--out", required=True, help="model file path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a saved model on one split")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--split", choices=_SPLIT_NAMES, default="test")
    p.add_argument("--seed", type=int, default=0, help="split seed used at train time")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True, help="metrics report JSON path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tune", help="randomized hyperparameter search with k-fold CV")
    p.add_argument("--family", required=True, help="tree|forest (aliases dt/rf)")
    p.add_argument("--data", required=True)
    p.add_argument("--n", type=int, default=50, help="number of candidates")
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--sampling", choices=sorted(CLI_ALIASES), default="under")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="candidate report CSV path")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("sweep", help="accuracy/precision/recall across thresholds")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--split", choices=_SPLIT_NAMES, default="test")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="sweep table CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="run the prediction service")
    p.add_argument("--model", default=os.environ.get("ROADRISK_MODEL"),
                   help="main model file (env ROADRISK_MODEL)")
    p.add_argument("--tree", default=os.environ.get("ROADRISK_TREE"),
                   help="second-opinion tree model file (env ROADRISK_TREE)")
    p.add_argument("--raw", default=os.environ.get("ROADRISK_RAW"),
                   help="raw store directory for condition lookups (env ROADRISK_RAW)")
    p.add_argument("--threshold", type=float,
                   default=float(os.environ.get("ROADRISK_THRESHOLD", "0.65")))
    p.add_argument("--host", default=os.environ.get("ROADRISK_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("ROADRISK_PORT", "8321")))
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("plot", help="render ROC/sweep tables to SVG charts")
    p.add_argument("--roc", help="ROC points CSV from evaluate")
    p.add_argument("--sweep", help="sweep table CSV from sweep")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("predict", help="send one request to a running service")
    p.add_argument("--url", default="http://127.0.0.1:8321")
    p.add_argument("--lat", type=float, required=True)
    p.add_argument("--lon", type=float, required=True)
    p.add_argument("--timestamp", type=int, default=None)
    p.set_defaults(func=cmd_predict)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "serve" and (not args.model or not args.raw):
        parser.error("serve requires --model and --raw (or ROADRISK_MODEL/ROADRISK_RAW)")
    try:
        return args.func(args)
    except (DatagenError, DatasetFormatError, GeomatchError, ModelFileError,
            SamplingError, TuningError, ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
