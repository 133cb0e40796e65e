"""Mini-batch training loop, prediction, and the model artifact format.

Training fits the standard scaler on the training tensors only, then runs
shuffled mini-batch Adam. Everything is deterministic for a fixed config
seed: initialization, shuffling, and gradient reduction all use fixed
ordering.

Artifact: a single .npz holding every parameter tensor plus a JSON metadata
entry (format version, config, label vocabulary, scaler fingerprint, seed).
The fitted scaler is saved beside it as JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ConfigError, FingerprintMismatchError, SchemaError
from ..features import FeatureTensor
from ..scaling import ScalerParams, fit_scaler, transform
from .adam import AdamState, adam_step
from .model import ModelConfig, ModelParams, backward, batch_cross_entropy, forward, init_model

ARTIFACT_VERSION = 1


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_loss)

    @property
    def best_val_epoch(self) -> int | None:
        if not self.val_accuracy:
            return None
        return int(np.argmax(self.val_accuracy))

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,train_accuracy,val_accuracy"]
        for e, (l, a, v) in enumerate(
            zip(self.train_loss, self.train_accuracy, self.val_accuracy)
        ):
            lines.append(f"{e},{l:.6f},{a:.6f},{'' if np.isnan(v) else f'{v:.6f}'}")
        return "\n".join(lines) + "\n"


def _stack(samples: Sequence[tuple[FeatureTensor, int]], scaler: ScalerParams):
    xs = np.stack([transform(t, scaler).values for t, _ in samples])
    ys = np.asarray([label for _, label in samples], dtype=np.intp)
    return xs, ys


def _check_samples(samples, config: ModelConfig, name: str):
    for tensor, label in samples:
        if tensor.values.shape != (config.time_steps, config.feature_count):
            raise SchemaError(
                f"{name} tensor shape {tensor.values.shape} != "
                f"({config.time_steps}, {config.feature_count})"
            )
        if not 0 <= label < config.class_count:
            raise SchemaError(f"{name} label {label} outside {config.class_count} classes")


def train(
    train_samples: Sequence[tuple[FeatureTensor, int]],
    val_samples: Sequence[tuple[FeatureTensor, int]],
    config: ModelConfig,
) -> tuple[ModelParams, ScalerParams, TrainHistory]:
    """Fit scaler on train only, then run mini-batch Adam for config.epochs."""
    if not train_samples:
        raise ConfigError("training set is empty")
    _check_samples(train_samples, config, "train")
    _check_samples(val_samples, config, "val")

    scaler = fit_scaler([t for t, _ in train_samples])
    params = init_model(config)
    history = TrainHistory()
    if config.epochs == 0:
        return params, scaler, history

    xs, ys = _stack(train_samples, scaler)
    if val_samples:
        val_xs, val_ys = _stack(val_samples, scaler)
    opt = AdamState.for_params(params)
    grad_buffers = {k: np.empty_like(v) for k, v in params.tensors.items()}
    rng = np.random.default_rng(config.seed)

    n = len(train_samples)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        epoch_correct = 0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            xb, yb = xs[batch], ys[batch]
            probs, cache = forward(params, xb)
            epoch_loss += batch_cross_entropy(probs, yb) * len(batch)
            epoch_correct += int((probs.argmax(axis=1) == yb).sum())
            grads = backward(params, cache, yb, out_grads=grad_buffers)
            adam_step(params, grads, opt, config)
        history.train_loss.append(epoch_loss / n)
        history.train_accuracy.append(epoch_correct / n)
        if val_samples:
            val_probs, _ = forward(params, val_xs)
            history.val_accuracy.append(float((val_probs.argmax(axis=1) == val_ys).mean()))
        else:
            history.val_accuracy.append(float("nan"))
    return params, scaler, history


def predict_scaled(params: ModelParams, x_scaled: np.ndarray) -> tuple[int, np.ndarray]:
    probs, _ = forward(params, x_scaled)
    # ties break to the lowest class index (argmax returns the first maximum)
    return int(np.argmax(probs)), probs


def predict(
    params: ModelParams, scaler: ScalerParams, tensor: FeatureTensor
) -> tuple[int, np.ndarray]:
    """Scale a raw feature tensor and classify it."""
    if tensor.topology_fingerprint != scaler.topology_fingerprint:
        raise FingerprintMismatchError("feature tensor topology does not match the scaler")
    return predict_scaled(params, transform(tensor, scaler).values)


@dataclass
class ModelArtifact:
    params: ModelParams
    scaler: ScalerParams
    labels: tuple[str, ...]

    @property
    def config(self) -> ModelConfig:
        return self.params.config


def save_model(artifact: ModelArtifact, path: str | Path) -> None:
    cfg = artifact.config
    meta = {
        "format_version": ARTIFACT_VERSION,
        "labels": list(artifact.labels),
        "scaler_fingerprint": artifact.scaler.topology_fingerprint,
        "seed": cfg.seed,
        "config": {
            "feature_count": cfg.feature_count,
            "class_count": cfg.class_count,
            "time_steps": cfg.time_steps,
            "filters": cfg.filters,
            "kernel_size": cfg.kernel_size,
            "dense_sizes": list(cfg.dense_sizes),
            "seed": cfg.seed,
            "learning_rate": cfg.learning_rate,
            "beta1": cfg.beta1,
            "beta2": cfg.beta2,
            "epsilon": cfg.epsilon,
            "batch_size": cfg.batch_size,
            "epochs": cfg.epochs,
        },
    }
    arrays = {f"param/{k}": v for k, v in artifact.params.tensors.items()}
    arrays["scaler/mean"] = artifact.scaler.mean
    arrays["scaler/std"] = artifact.scaler.std
    arrays["__meta__"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path: str | Path) -> ModelArtifact:
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode("utf-8"))
        if meta["format_version"] != ARTIFACT_VERSION:
            raise SchemaError(f"unsupported model format version {meta['format_version']}")
        raw_cfg = meta["config"]
        raw_cfg["dense_sizes"] = tuple(raw_cfg["dense_sizes"])
        config = ModelConfig(**raw_cfg)
        tensors = {
            k.removeprefix("param/"): data[k] for k in data.files if k.startswith("param/")
        }
        scaler = ScalerParams(
            mean=data["scaler/mean"],
            std=data["scaler/std"],
            feature_count=config.feature_count,
            topology_fingerprint=meta["scaler_fingerprint"],
        )
    return ModelArtifact(
        params=ModelParams(config=config, tensors=tensors),
        scaler=scaler,
        labels=tuple(meta["labels"]),
    )
