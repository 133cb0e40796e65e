"""Command-line entry point.

Subcommands: pairs, features, train, crossval, lodo, evaluate,
predict-stream, bench, synth. Machine-readable output goes to stdout or
--out paths; diagnostics go to stderr. Exit codes: 0 success, 1 runtime
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import bench_feature_creation, bench_grid, grid_json, grid_markdown
from .errors import FacexprError
from .features import sequence_features
from .harness import (
    ExperimentConfig,
    label_vocabulary,
    compute_feature_tensors,
    confusion_matrix,
    leave_one_dataset_out,
    merge_records,
    run_experiment,
    save_report,
)
from .landmarks import (
    SIX_BASIC_EMOTIONS,
    key_frame_records,
    load_manifest_sequences,
)
from .nn.model import ModelConfig
from .nn.training import ModelArtifact, load_model, predict, save_model, train
from .scaling import save_scaler
from .stream import (
    DEFAULT_ACTIVITY_THRESHOLD_PX,
    DEFAULT_DERIVATIVE_WINDOW,
    StreamEngine,
    replay,
)
from .synth import SynthSpec, synth_generate
from .topology import GroupingMode, builtin_subset, enumerate_pairs


def _add_topology_flags(p: argparse.ArgumentParser):
    p.add_argument("--preset", choices=["61", "122", "250"], default="61",
                   help="landmark subset size")
    p.add_argument("--mode", choices=["full", "au"], default="au",
                   help="pair enumeration: all pairs or FACS-grouped")


def _topology(args):
    return enumerate_pairs(builtin_subset(f"P{args.preset}"), GroupingMode(args.mode))


def _model_overrides(args) -> dict:
    overrides = {}
    if getattr(args, "epochs", None) is not None:
        overrides["epochs"] = args.epochs
    if getattr(args, "batch", None) is not None:
        overrides["batch_size"] = args.batch
    if getattr(args, "filters", None) is not None:
        overrides["filters"] = args.filters
    if getattr(args, "dense", None):
        overrides["dense_sizes"] = tuple(int(s) for s in args.dense.split(","))
    return overrides


def cmd_pairs(args) -> int:
    topo = _topology(args)
    print(topo.pair_count)
    return 0


def cmd_features(args) -> int:
    topo = _topology(args)
    records = load_manifest_sequences(args.manifest)
    out = Path(args.out) if args.out else None
    fh = open(out, "w", encoding="utf-8") if out else sys.stdout
    try:
        for rec in records:
            tensor = sequence_features(key_frame_records(rec, 5), topo)
            fh.write(json.dumps({
                "seq_id": rec.seq_id,
                "label": rec.label,
                "dataset": rec.dataset,
                "topology_fingerprint": tensor.topology_fingerprint,
                "shape": list(tensor.values.shape),
                "values": tensor.values.tolist(),
            }))
            fh.write("\n")
    finally:
        if out:
            fh.close()
    return 0


def cmd_train(args) -> int:
    topo = _topology(args)
    records = load_manifest_sequences(args.manifest)
    labels = label_vocabulary(records)
    label_idx = {name: i for i, name in enumerate(labels)}
    tensors = compute_feature_tensors(records, topo)
    samples = [(t, label_idx[r.label]) for t, r in zip(tensors, records)]
    config = ModelConfig(
        feature_count=topo.feature_count,
        class_count=len(labels),
        seed=args.seed,
        **_model_overrides(args),
    )
    params, scaler, history = train(samples, [], config)
    artifact = ModelArtifact(params=params, scaler=scaler, labels=labels)
    save_model(artifact, args.model)
    if args.scaler:
        save_scaler(scaler, args.scaler)
    if args.out:
        Path(args.out).write_text(history.to_csv(), encoding="utf-8")
    print(json.dumps({
        "model": args.model,
        "labels": list(labels),
        "epochs": len(history),
        "final_train_accuracy": history.train_accuracy[-1] if len(history) else None,
    }))
    return 0


def cmd_crossval(args) -> int:
    records = load_manifest_sequences(args.manifest)
    config = ExperimentConfig(
        preset=f"P{args.preset}",
        mode=GroupingMode(args.mode),
        k=args.k,
        seed=args.seed,
        model_overrides=_model_overrides(args),
        emotion_whitelist=tuple(args.emotions.split(",")) if args.emotions else None,
    )
    report = run_experiment(records, config)
    if args.out:
        save_report(report, args.out)
    print(json.dumps({
        "mean_accuracy": report.mean_accuracy,
        "min_accuracy": report.min_accuracy,
        "max_accuracy": report.max_accuracy,
        "folds": [f.accuracy for f in report.folds],
    }))
    return 0


def cmd_lodo(args) -> int:
    record_sets = [load_manifest_sequences(m) for m in args.manifest]
    records = merge_records(record_sets, whitelist=SIX_BASIC_EMOTIONS)
    config = ExperimentConfig(
        preset=f"P{args.preset}",
        mode=GroupingMode(args.mode),
        seed=args.seed,
        model_overrides=_model_overrides(args),
    )
    accuracy, confusion, labels = leave_one_dataset_out(records, args.holdout, config)
    result = {
        "holdout": args.holdout,
        "accuracy": accuracy,
        "labels": list(labels),
        "confusion": confusion.tolist(),
    }
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(result))
    return 0


def cmd_evaluate(args) -> int:
    artifact = load_model(args.model)
    topo = _topology(args)
    if artifact.scaler.topology_fingerprint != topo.fingerprint():
        print("error: model was trained on a different preset/mode", file=sys.stderr)
        return 1
    records = load_manifest_sequences(args.manifest)
    label_idx = {name: i for i, name in enumerate(artifact.labels)}
    unknown = sorted({r.label for r in records} - set(artifact.labels))
    if unknown:
        print(f"error: manifest labels not known to the model: {unknown}", file=sys.stderr)
        return 1
    tensors = compute_feature_tensors(records, topo)
    preds = [predict(artifact.params, artifact.scaler, t)[0] for t in tensors]
    truth = [label_idx[r.label] for r in records]
    confusion = confusion_matrix(preds, truth, len(artifact.labels))
    result = {
        "accuracy": float(np.trace(confusion) / confusion.sum()),
        "labels": list(artifact.labels),
        "confusion": confusion.tolist(),
    }
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(result))
    return 0


def cmd_predict_stream(args) -> int:
    artifact = load_model(args.model)
    topo = _topology(args)
    engine = StreamEngine(
        artifact,
        topo,
        activity_threshold=args.apex_threshold,
        window=args.window,
    )
    source = open(args.input, encoding="utf-8") if args.input != "-" else sys.stdin
    try:
        for prediction in replay(source, engine, rate=args.rate):
            print(prediction.to_json(), flush=True)
    finally:
        if source is not sys.stdin:
            source.close()
    return 0


def cmd_bench(args) -> int:
    if args.preset_single:
        report = bench_feature_creation(
            f"P{args.preset_single}", GroupingMode(args.mode), args.iterations, args.warmup
        )
        print(json.dumps(report.to_json_obj()))
        return 0
    reports = bench_grid(args.iterations, args.warmup)
    sys.stderr.write(grid_markdown(reports))
    out = grid_json(reports)
    if args.out:
        Path(args.out).write_text(out, encoding="utf-8")
    print(out, end="")
    return 0


def cmd_synth(args) -> int:
    spec = SynthSpec(
        class_count=args.classes,
        sequences_per_class=args.per_class,
        frame_count=args.frames,
        preset=f"P{args.preset}",
        magnitude_px=args.magnitude,
        noise_sigma_px=args.noise,
        profile=args.profile,
        seed=args.seed,
        dataset_name=args.name,
    )
    manifest = synth_generate(spec, args.out)
    print(json.dumps({
        "out": args.out,
        "sequences": len(manifest.entries),
        "emotions": list(manifest.emotion_set),
    }))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facexpr",
        description="Geometric facial-expression analysis pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pairs", help="print the pair count for a preset/mode")
    _add_topology_flags(p)
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("features", help="compute feature tensors for a manifest")
    _add_topology_flags(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="output NDJSON path (default stdout)")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a model on a full manifest")
    _add_topology_flags(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True, help="output model artifact (.npz)")
    p.add_argument("--scaler", help="also write the scaler as JSON")
    p.add_argument("--out", help="write per-epoch metrics CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--filters", type=int)
    p.add_argument("--dense", help="comma-separated dense layer sizes")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("crossval", help="stratified k-fold cross-validation")
    _add_topology_flags(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--filters", type=int)
    p.add_argument("--dense", help="comma-separated dense layer sizes")
    p.add_argument("--emotions", help="comma-separated emotion whitelist")
    p.add_argument("--out", help="report directory (JSON + CSVs)")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("lodo", help="leave-one-dataset-out evaluation")
    _add_topology_flags(p)
    p.add_argument("--manifest", action="append", required=True,
                   help="repeatable; one per source dataset")
    p.add_argument("--holdout", required=True, help="dataset name to hold out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--filters", type=int)
    p.add_argument("--dense", help="comma-separated dense layer sizes")
    p.add_argument("--out", help="result JSON path")
    p.set_defaults(func=cmd_lodo)

    p = sub.add_parser("evaluate", help="evaluate a saved model on a manifest")
    _add_topology_flags(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="result JSON path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict-stream", help="sliding-window prediction over NDJSON frames")
    _add_topology_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--input", default="-", help="NDJSON file or - for stdin")
    p.add_argument("--rate", choices=["realtime", "max"], default="max")
    p.add_argument("--apex-threshold", type=float, default=DEFAULT_ACTIVITY_THRESHOLD_PX,
                   help="activity threshold in pixels for phase detection")
    p.add_argument("--window", type=int, default=DEFAULT_DERIVATIVE_WINDOW,
                   help="derivative window for phase detection")
    p.set_defaults(func=cmd_predict_stream)

    p = sub.add_parser("bench", help="feature-creation throughput grid")
    p.add_argument("--preset", dest="preset_single", choices=["61", "122", "250"],
                   help="bench a single preset instead of the full grid")
    p.add_argument("--mode", choices=["full", "au"], default="au")
    p.add_argument("--iterations", type=int, default=300)
    p.add_argument("--warmup", type=int, default=30)
    p.add_argument("--out", help="JSON report path (grid mode)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate a synthetic landmark corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--per-class", type=int, default=20)
    p.add_argument("--frames", type=int, default=12)
    p.add_argument("--preset", choices=["61", "122", "250"], default="61",
                   help="regions are drawn from this subset")
    p.add_argument("--magnitude", type=float, default=8.0)
    p.add_argument("--noise", type=float, default=0.5)
    p.add_argument("--profile", choices=["onset", "onset-offset"], default="onset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default="synthetic")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FacexprError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
