"""Per-feature standard scaling fitted on training tensors only.

Statistics pool every row of every training tensor (all time steps of all
samples count as observations). Population standard deviation; zero-variance
columns are floored so transforms stay finite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, FingerprintMismatchError
from .features import FeatureTensor

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray
    feature_count: int
    topology_fingerprint: str


def fit_scaler(tensors: Sequence[FeatureTensor]) -> ScalerParams:
    """Column mean and population std over the pooled rows of all tensors."""
    if not tensors:
        raise ConfigError("cannot fit a scaler on an empty tensor list")
    fp = tensors[0].topology_fingerprint
    width = tensors[0].feature_count
    for t in tensors[1:]:
        if t.topology_fingerprint != fp:
            raise FingerprintMismatchError("tensors span multiple topologies")
        if t.feature_count != width:
            raise FingerprintMismatchError("tensors have differing feature counts")
    pooled = np.concatenate([t.values for t in tensors], axis=0)
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)  # population (ddof=0)
    std = np.maximum(std, STD_FLOOR)
    mean.setflags(write=False)
    std.setflags(write=False)
    return ScalerParams(mean=mean, std=std, feature_count=width, topology_fingerprint=fp)


def transform(tensor: FeatureTensor, params: ScalerParams) -> FeatureTensor:
    """Elementwise (x - mean) / std."""
    if tensor.topology_fingerprint != params.topology_fingerprint:
        raise FingerprintMismatchError("tensor topology does not match scaler")
    if tensor.feature_count != params.feature_count:
        raise FingerprintMismatchError(
            f"tensor has {tensor.feature_count} features, scaler expects {params.feature_count}"
        )
    values = (tensor.values - params.mean) / params.std
    values.setflags(write=False)
    return FeatureTensor(values=values, topology_fingerprint=tensor.topology_fingerprint)


def save_scaler(params: ScalerParams, path: str | Path) -> None:
    obj = {
        "version": 1,
        "feature_count": params.feature_count,
        "topology_fingerprint": params.topology_fingerprint,
        "mean": params.mean.tolist(),
        "std": params.std.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def load_scaler(path: str | Path) -> ScalerParams:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return ScalerParams(
        mean=np.asarray(obj["mean"], dtype=np.float64),
        std=np.asarray(obj["std"], dtype=np.float64),
        feature_count=int(obj["feature_count"]),
        topology_fingerprint=str(obj["topology_fingerprint"]),
    )
