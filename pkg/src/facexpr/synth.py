"""Synthetic landmark-sequence corpora for tests, demos, and benchmarks.

Each class deforms a distinct set of face regions on a canonical frontal
layout: landmarks in the class's regions expand radially about the region
centroid and drift in a class-specific direction, following a neutral->apex
ramp (optionally ramping back down), plus Gaussian pixel jitter. Frame 0 is
always the shared neutral template plus jitter. Fully deterministic per
seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .landmarks import (
    EMOTIONS,
    DatasetManifest,
    LandmarkFrame,
    ManifestEntry,
    SequenceRecord,
    save_manifest,
    write_sequence,
)
from .topology import FaceRegion, builtin_subset

# region sets cycled over classes; distinct sets keep classes geometrically apart
_REGION_PALETTE = (
    (FaceRegion.MOUTH,),
    (FaceRegion.LEFT_EYEBROW, FaceRegion.RIGHT_EYEBROW),
    (FaceRegion.LEFT_EYE, FaceRegion.RIGHT_EYE),
    (FaceRegion.MOUTH, FaceRegion.LOWER_JAW),
    (FaceRegion.NOSE,),
    (FaceRegion.LEFT_EYEBROW, FaceRegion.LEFT_EYE),
    (FaceRegion.MOUTH, FaceRegion.NOSE),
)


@dataclass(frozen=True)
class SynthSpec:
    class_count: int = 5
    sequences_per_class: int = 20
    frame_count: int = 12
    preset: str = "P61"
    magnitude_px: float = 8.0
    noise_sigma_px: float = 0.5
    profile: str = "onset"  # "onset" or "onset-offset"
    labels: tuple[str, ...] = ()
    seed: int = 0
    dataset_name: str = "synthetic"

    def __post_init__(self):
        if not 1 <= self.class_count <= len(EMOTIONS):
            raise ConfigError(f"class_count must be in 1..{len(EMOTIONS)}")
        if self.frame_count < 5:
            raise ConfigError("frame_count must be >= 5")
        if self.profile not in ("onset", "onset-offset"):
            raise ConfigError(f"unknown profile {self.profile!r}")
        if self.noise_sigma_px < 0 or self.magnitude_px <= 0:
            raise ConfigError("magnitude must be positive and noise non-negative")
        if self.labels and len(self.labels) != self.class_count:
            raise ConfigError("labels must match class_count when given")

    @property
    def class_labels(self) -> tuple[str, ...]:
        return self.labels if self.labels else EMOTIONS[: self.class_count]


_CANONICAL_CACHE: dict[str, np.ndarray] = {}


def canonical_face() -> tuple[np.ndarray, int, int]:
    """The shared neutral 478-point template (pixels) and its image size."""
    if "pts" not in _CANONICAL_CACHE:
        with resources.files("facexpr.data").joinpath("canonical_face.json").open() as fh:
            obj = json.load(fh)
        pts = np.asarray(obj["points"], dtype=np.float64)
        pts.setflags(write=False)
        _CANONICAL_CACHE["pts"] = pts
        _CANONICAL_CACHE["wh"] = (obj["img_w"], obj["img_h"])
    return _CANONICAL_CACHE["pts"], *_CANONICAL_CACHE["wh"]


def _profile_values(spec: SynthSpec) -> tuple[np.ndarray, int | None]:
    n = spec.frame_count
    if spec.profile == "onset":
        return np.linspace(0.0, 1.0, n), None
    apex = (n - 1) // 2
    up = np.linspace(0.0, 1.0, apex + 1)
    down = np.linspace(1.0, 0.0, n - apex)
    return np.concatenate([up, down[1:]]), apex


@dataclass
class _ClassPattern:
    member_idx: np.ndarray  # mesh indices deformed by this class
    radial: np.ndarray      # unit vectors away from the region centroid
    drift: np.ndarray       # shared class drift direction


def _class_patterns(spec: SynthSpec) -> list[_ClassPattern]:
    template, _, _ = canonical_face()
    subset = builtin_subset(spec.preset)
    patterns = []
    for k in range(spec.class_count):
        regions = _REGION_PALETTE[k % len(_REGION_PALETTE)]
        members = np.asarray(
            [i for i in subset.indices if subset.region_of[i] in regions], dtype=np.intp
        )
        pts = template[members]
        centroid = pts.mean(axis=0)
        rel = pts - centroid
        norms = np.linalg.norm(rel, axis=1, keepdims=True)
        radial = np.where(norms > 1e-9, rel / np.maximum(norms, 1e-9), 0.0)
        theta = 2.0 * np.pi * k / max(spec.class_count, 1)
        drift = np.array([np.cos(theta), np.sin(theta)])
        patterns.append(_ClassPattern(member_idx=members, radial=radial, drift=drift))
    return patterns


def generate_records(spec: SynthSpec) -> list[SequenceRecord]:
    """Build the corpus in memory as validated SequenceRecords."""
    template, img_w, img_h = canonical_face()
    patterns = _class_patterns(spec)
    profile, apex_idx = _profile_values(spec)
    rng = np.random.default_rng(spec.seed)
    labels = spec.class_labels

    records = []
    for k in range(spec.class_count):
        pat = patterns[k]
        for s in range(spec.sequences_per_class):
            seq_id = f"{spec.dataset_name}-{labels[k]}-{s:03d}"
            frames = []
            for t in range(spec.frame_count):
                pts = template.copy()
                amount = spec.magnitude_px * profile[t]
                pts[pat.member_idx] += amount * (0.7 * pat.radial + 0.3 * pat.drift)
                if spec.noise_sigma_px > 0:
                    pts += rng.normal(0.0, spec.noise_sigma_px, size=pts.shape)
                frames.append(
                    LandmarkFrame(
                        seq_id=seq_id,
                        frame_idx=t,
                        t_ms=t * 400,
                        points=pts,
                        img_w=img_w,
                        img_h=img_h,
                    )
                )
            records.append(
                SequenceRecord(
                    seq_id=seq_id,
                    frames=tuple(frames),
                    label=labels[k],
                    dataset=spec.dataset_name,
                    apex_idx=apex_idx,
                )
            )
    return records


def shuffle_labels(records: list[SequenceRecord], seed: int) -> list[SequenceRecord]:
    """Permute labels across records; the chance-level control corpus."""
    import dataclasses

    rng = np.random.default_rng(seed)
    labels = [r.label for r in records]
    perm = rng.permutation(len(labels))
    return [dataclasses.replace(r, label=labels[perm[i]]) for i, r in enumerate(records)]


def synth_generate(spec: SynthSpec, out_dir: str | Path) -> DatasetManifest:
    """Write one NDJSON file per sequence plus a manifest.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = generate_records(spec)
    entries = []
    for rec in records:
        rel = f"{rec.seq_id}.ndjson"
        with open(out_dir / rel, "w", encoding="utf-8") as fh:
            write_sequence(rec, fh)
        entries.append(
            ManifestEntry(seq_id=rec.seq_id, path=rel, label=rec.label, apex_idx=rec.apex_idx)
        )
    manifest = DatasetManifest(
        name=spec.dataset_name,
        entries=entries,
        emotion_set=tuple(sorted(set(spec.class_labels))),
    )
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest
