"""Cross-validation experiments, dataset merging, and leave-one-dataset-out.

Folds are stratified: records are grouped by label, shuffled with the
experiment seed, and split into k near-equal chunks per class, so per-class
validation counts across folds never differ by more than one. Each fold
fits its own scaler on the training split only and trains a fresh model
seeded by (experiment seed + fold index).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, SchemaError
from .features import FeatureTensor, sequence_features
from .landmarks import (
    SIX_BASIC_EMOTIONS,
    DatasetManifest,
    ManifestEntry,
    SequenceRecord,
    key_frame_records,
)
from .nn.model import ModelConfig
from .nn.training import TrainHistory, predict, train
from .topology import GroupingMode, PairTopology, builtin_subset, enumerate_pairs


@dataclass
class ExperimentConfig:
    preset: str = "P61"
    mode: GroupingMode = GroupingMode.AU_GROUPED
    k: int = 5
    seed: int = 0
    key_frame_count: int = 5
    emotion_whitelist: tuple[str, ...] | None = None
    model_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mode = GroupingMode(self.mode)
        if self.k < 2:
            raise ConfigError("k must be >= 2")


@dataclass
class FoldReport:
    fold: int
    accuracy: float
    confusion: np.ndarray
    history: TrainHistory
    scaler_fingerprint: str

    def validate(self):
        total = int(self.confusion.sum())
        if total and abs(self.accuracy - np.trace(self.confusion) / total) > 1e-12:
            raise SchemaError("fold accuracy does not match confusion trace")


@dataclass
class ExperimentReport:
    labels: tuple[str, ...]
    preset: str
    mode: GroupingMode
    seed: int
    folds: list[FoldReport]
    topology_fingerprint: str

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean([f.accuracy for f in self.folds]))

    @property
    def min_accuracy(self) -> float:
        return float(np.min([f.accuracy for f in self.folds]))

    @property
    def max_accuracy(self) -> float:
        return float(np.max([f.accuracy for f in self.folds]))

    @property
    def merged_confusion(self) -> np.ndarray:
        return np.sum([f.confusion for f in self.folds], axis=0)

    def to_json_obj(self) -> dict:
        return {
            "labels": list(self.labels),
            "preset": self.preset,
            "mode": self.mode.value,
            "seed": self.seed,
            "topology_fingerprint": self.topology_fingerprint,
            "mean_accuracy": self.mean_accuracy,
            "min_accuracy": self.min_accuracy,
            "max_accuracy": self.max_accuracy,
            "merged_confusion": self.merged_confusion.tolist(),
            "folds": [
                {
                    "fold": f.fold,
                    "accuracy": f.accuracy,
                    "confusion": f.confusion.tolist(),
                    "scaler_fingerprint": f.scaler_fingerprint,
                    "best_val_epoch": f.history.best_val_epoch,
                    "final_val_accuracy": (
                        f.history.val_accuracy[-1] if f.history.val_accuracy else None
                    ),
                    "best_val_accuracy": (
                        max(f.history.val_accuracy) if f.history.val_accuracy else None
                    ),
                }
                for f in self.folds
            ],
        }


def stratified_kfold(
    labels: Sequence[str], k: int, seed: int
) -> list[tuple[list[int], list[int]]]:
    """Deterministic stratified folds; returns (train_idx, val_idx) per fold."""
    if k < 2:
        raise ConfigError("k must be >= 2")
    by_class: dict[str, list[int]] = {}
    for idx, label in enumerate(labels):
        by_class.setdefault(label, []).append(idx)
    rng = np.random.default_rng(seed)
    chunks_per_class = {}
    for label in sorted(by_class):
        members = by_class[label]
        if len(members) < k:
            raise ConfigError(f"class {label!r} has {len(members)} members; k={k} needs >= k")
        order = rng.permutation(len(members))
        shuffled = [members[i] for i in order]
        chunks_per_class[label] = np.array_split(shuffled, k)
    folds = []
    for fold in range(k):
        val = sorted(int(i) for label in sorted(by_class) for i in chunks_per_class[label][fold])
        val_set = set(val)
        trn = [i for i in range(len(labels)) if i not in val_set]
        folds.append((trn, val))
    return folds


def confusion_matrix(
    predictions: Sequence[int], labels: Sequence[int], class_count: int
) -> np.ndarray:
    """Counts indexed [true, predicted]."""
    if len(predictions) != len(labels):
        raise ConfigError("predictions and labels differ in length")
    out = np.zeros((class_count, class_count), dtype=np.int64)
    for truth, pred in zip(labels, predictions):
        out[truth, pred] += 1
    return out


def compute_feature_tensors(
    records: Sequence[SequenceRecord], topo: PairTopology, key_frame_count: int = 5
) -> list[FeatureTensor]:
    return [
        sequence_features(key_frame_records(rec, key_frame_count), topo) for rec in records
    ]


def label_vocabulary(records: Sequence[SequenceRecord]) -> tuple[str, ...]:
    return tuple(sorted({r.label for r in records}))


def _model_config(
    config: ExperimentConfig, feature_count: int, class_count: int, seed: int
) -> ModelConfig:
    base = ModelConfig(
        feature_count=feature_count,
        class_count=class_count,
        time_steps=config.key_frame_count - 1,
        seed=seed,
    )
    return base.with_overrides(**config.model_overrides) if config.model_overrides else base


def run_experiment(records: Sequence[SequenceRecord], config: ExperimentConfig) -> ExperimentReport:
    """Stratified k-fold train/evaluate over one record collection."""
    if config.emotion_whitelist is not None:
        records = [r for r in records if r.label in config.emotion_whitelist]
    if not records:
        raise ConfigError("no records to run on (empty set or whitelist filtered everything)")
    labels = label_vocabulary(records)
    label_idx = {name: i for i, name in enumerate(labels)}

    subset = builtin_subset(config.preset)
    topo = enumerate_pairs(subset, config.mode)
    tensors = compute_feature_tensors(records, topo, config.key_frame_count)
    y = [label_idx[r.label] for r in records]

    folds = []
    for fold, (train_idx, val_idx) in enumerate(
        stratified_kfold([r.label for r in records], config.k, config.seed)
    ):
        model_cfg = _model_config(config, topo.feature_count, len(labels), config.seed + fold)
        train_set = [(tensors[i], y[i]) for i in train_idx]
        val_set = [(tensors[i], y[i]) for i in val_idx]
        params, scaler, history = train(train_set, val_set, model_cfg)
        preds = [predict(params, scaler, tensors[i])[0] for i in val_idx]
        truth = [y[i] for i in val_idx]
        confusion = confusion_matrix(preds, truth, len(labels))
        report = FoldReport(
            fold=fold,
            accuracy=float(np.trace(confusion) / max(confusion.sum(), 1)),
            confusion=confusion,
            history=history,
            scaler_fingerprint=_scaler_digest(scaler.mean, scaler.std),
        )
        report.validate()
        folds.append(report)
    return ExperimentReport(
        labels=labels,
        preset=config.preset,
        mode=config.mode,
        seed=config.seed,
        folds=folds,
        topology_fingerprint=topo.fingerprint(),
    )


def _scaler_digest(mean: np.ndarray, std: np.ndarray) -> str:
    import hashlib

    h = hashlib.sha256()
    h.update(np.ascontiguousarray(mean).tobytes())
    h.update(np.ascontiguousarray(std).tobytes())
    return h.hexdigest()[:16]


def merge_datasets(
    manifests: Sequence[DatasetManifest],
    whitelist: Sequence[str] = SIX_BASIC_EMOTIONS,
    name: str = "composite",
) -> DatasetManifest:
    """Concatenate manifests, keeping only whitelisted emotions.

    seq_ids must be disjoint across sources; entries retain their source
    dataset name as provenance.
    """
    entries: list[ManifestEntry] = []
    for m in manifests:
        for e in m.entries:
            if e.label in whitelist:
                entries.append(
                    ManifestEntry(
                        seq_id=e.seq_id,
                        path=e.path,
                        label=e.label,
                        apex_idx=e.apex_idx,
                        dataset=e.dataset or m.name,
                    )
                )
    if not entries:
        raise ConfigError("merged dataset is empty after whitelist filtering")
    return DatasetManifest(name=name, entries=entries, emotion_set=tuple(whitelist))


def merge_records(
    record_sets: Sequence[Sequence[SequenceRecord]],
    whitelist: Sequence[str] = SIX_BASIC_EMOTIONS,
) -> list[SequenceRecord]:
    merged = [r for rs in record_sets for r in rs if r.label in whitelist]
    if not merged:
        raise ConfigError("merged record set is empty after whitelist filtering")
    ids = [r.seq_id for r in merged]
    if len(ids) != len(set(ids)):
        raise SchemaError("seq_ids collide across merged datasets; namespace them first")
    return merged


def leave_one_dataset_out(
    records: Sequence[SequenceRecord],
    holdout: str,
    config: ExperimentConfig,
) -> tuple[float, np.ndarray, tuple[str, ...]]:
    """Train on every dataset except `holdout`, evaluate on the holdout."""
    datasets = {r.dataset for r in records}
    if holdout not in datasets:
        raise ConfigError(f"unknown holdout dataset {holdout!r}; have {sorted(datasets)}")
    whitelist = config.emotion_whitelist or SIX_BASIC_EMOTIONS
    kept = [r for r in records if r.label in whitelist]
    train_records = [r for r in kept if r.dataset != holdout]
    val_records = [r for r in kept if r.dataset == holdout]
    if not train_records:
        raise ConfigError("holdout leaves an empty training set")
    if not val_records:
        raise ConfigError(f"holdout dataset {holdout!r} has no whitelisted records")

    labels = label_vocabulary(kept)
    label_idx = {name: i for i, name in enumerate(labels)}
    subset = builtin_subset(config.preset)
    topo = enumerate_pairs(subset, config.mode)

    train_tensors = compute_feature_tensors(train_records, topo, config.key_frame_count)
    val_tensors = compute_feature_tensors(val_records, topo, config.key_frame_count)
    model_cfg = _model_config(config, topo.feature_count, len(labels), config.seed)
    train_set = [(t, label_idx[r.label]) for t, r in zip(train_tensors, train_records)]
    val_set = [(t, label_idx[r.label]) for t, r in zip(val_tensors, val_records)]
    params, scaler, _ = train(train_set, val_set, model_cfg)
    preds = [predict(params, scaler, t)[0] for t in val_tensors]
    truth = [label_idx[r.label] for r in val_records]
    confusion = confusion_matrix(preds, truth, len(labels))
    accuracy = float(np.trace(confusion) / confusion.sum())
    return accuracy, confusion, labels


def save_report(report: ExperimentReport, out_dir: str | Path) -> None:
    """Write report.json plus per-fold epoch-metric CSVs and a confusion CSV."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_json_obj(), fh, indent=2)
        fh.write("\n")
    for fold in report.folds:
        with open(out_dir / f"fold{fold.fold}_epochs.csv", "w", encoding="utf-8") as fh:
            fh.write(fold.history.to_csv())
    header = "," + ",".join(report.labels)
    rows = [header]
    merged = report.merged_confusion
    for i, label in enumerate(report.labels):
        rows.append(label + "," + ",".join(str(int(v)) for v in merged[i]))
    (out_dir / "confusion.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
