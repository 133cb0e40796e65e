"""Landmark stream loading, validation, and key-frame selection.

Wire format (NDJSON, one frame per line):

    {"seq_id": str, "frame_idx": int, "t_ms": int, "img_w": int,
     "img_h": int, "points": [[x, y, z?], ...]}

The optional z coordinate is parsed and dropped; all downstream geometry is
2-D pixel space. See docs/wire_formats.md for the full schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .errors import InsufficientFramesError, ParseError, SchemaError

EMOTIONS = ("anger", "contempt", "disgust", "fear", "happiness", "sadness", "surprise")

# Composite experiments drop contempt; the remaining six are shared by all sources.
SIX_BASIC_EMOTIONS = ("anger", "disgust", "fear", "happiness", "sadness", "surprise")

MIN_SEQUENCE_FRAMES = 5


@dataclass(frozen=True)
class LandmarkFrame:
    """One timestamped frame of 2-D landmark coordinates in pixels."""

    seq_id: str
    frame_idx: int
    t_ms: int
    points: np.ndarray  # (n_points, 2) float64
    img_w: int
    img_h: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise SchemaError(f"points must be (n, 2), got {pts.shape}")
        if not np.isfinite(pts).all():
            raise SchemaError(f"non-finite coordinate in frame {self.frame_idx} of {self.seq_id!r}")
        if self.frame_idx < 0 or self.t_ms < 0:
            raise SchemaError("frame_idx and t_ms must be non-negative")
        if self.img_w <= 0 or self.img_h <= 0:
            raise SchemaError("img_w and img_h must be positive")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def point_count(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class SequenceRecord:
    """A labeled landmark sequence; frames sorted by frame_idx."""

    seq_id: str
    frames: tuple[LandmarkFrame, ...]
    label: str
    dataset: str = ""
    apex_idx: int | None = None

    def __post_init__(self):
        if len(self.frames) < MIN_SEQUENCE_FRAMES:
            raise InsufficientFramesError(
                f"sequence {self.seq_id!r} has {len(self.frames)} frames; minimum is {MIN_SEQUENCE_FRAMES}"
            )
        if self.label not in EMOTIONS:
            raise SchemaError(f"unknown emotion label {self.label!r}")
        counts = {f.point_count for f in self.frames}
        if len(counts) != 1:
            raise SchemaError(f"sequence {self.seq_id!r} has varying point counts {sorted(counts)}")
        idxs = [f.frame_idx for f in self.frames]
        if any(b <= a for a, b in zip(idxs, idxs[1:])):
            raise SchemaError(f"frame_idx not strictly increasing in sequence {self.seq_id!r}")
        if self.apex_idx is not None and not (0 <= self.apex_idx < len(self.frames)):
            raise SchemaError(f"apex_idx {self.apex_idx} out of range for {len(self.frames)} frames")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def point_count(self) -> int:
        return self.frames[0].point_count


@dataclass
class ManifestEntry:
    seq_id: str
    path: str
    label: str
    apex_idx: int | None = None
    dataset: str | None = None  # provenance; defaults to the manifest name


@dataclass
class DatasetManifest:
    """Index of sequence files for one dataset."""

    name: str
    entries: list[ManifestEntry] = field(default_factory=list)
    emotion_set: tuple[str, ...] = EMOTIONS

    def __post_init__(self):
        ids = [e.seq_id for e in self.entries]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise SchemaError(f"duplicate seq_ids in manifest {self.name!r}: {dupes}")
        bad = [e.label for e in self.entries if e.label not in self.emotion_set]
        if bad:
            raise SchemaError(f"labels outside manifest emotion set: {sorted(set(bad))}")


def parse_frame_line(line: str, line_no: int | None = None) -> LandmarkFrame:
    """Parse one NDJSON frame record. z coordinates are accepted and dropped."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
    if not isinstance(obj, dict):
        raise ParseError("frame record must be a JSON object", line_no)
    try:
        raw_points = obj["points"]
        frame = LandmarkFrame(
            seq_id=str(obj["seq_id"]),
            frame_idx=int(obj["frame_idx"]),
            t_ms=int(obj["t_ms"]),
            img_w=int(obj["img_w"]),
            img_h=int(obj["img_h"]),
            points=_points_xy(raw_points, line_no),
        )
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}", line_no) from exc
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad field value: {exc}", line_no) from exc
    except SchemaError as exc:
        raise SchemaError(f"line {line_no}: {exc}" if line_no else str(exc)) from exc
    return frame


def _points_xy(raw, line_no):
    if not isinstance(raw, list) or not raw:
        raise ParseError("points must be a non-empty list", line_no)
    out = np.empty((len(raw), 2), dtype=np.float64)
    for i, p in enumerate(raw):
        if not isinstance(p, (list, tuple)) or len(p) not in (2, 3):
            raise ParseError(f"point {i} must be [x, y] or [x, y, z]", line_no)
        x, y = float(p[0]), float(p[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ParseError(f"point {i} has non-finite coordinate", line_no)
        out[i, 0] = x
        out[i, 1] = y
    return out


def load_sequence(
    reader: IO[str] | IO[bytes] | Iterable[str],
    label: str = "happiness",
    dataset: str = "",
    apex_idx: int | None = None,
) -> SequenceRecord:
    """Load and validate an NDJSON landmark stream into a SequenceRecord.

    Frames are sorted by frame_idx. Raises ParseError with the offending line
    number, SchemaError on inconsistent point counts or duplicate indices, and
    InsufficientFramesError below the five-frame minimum.
    """
    frames: list[LandmarkFrame] = []
    seq_id = None
    point_count = None
    for line_no, line in enumerate(reader, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.strip()
        if not line:
            continue
        frame = parse_frame_line(line, line_no)
        if seq_id is None:
            seq_id = frame.seq_id
            point_count = frame.point_count
        elif frame.seq_id != seq_id:
            raise SchemaError(f"line {line_no}: seq_id {frame.seq_id!r} differs from {seq_id!r}")
        elif frame.point_count != point_count:
            raise SchemaError(
                f"line {line_no}: expected {point_count} points, got {frame.point_count}"
            )
        frames.append(frame)
    if not frames:
        raise InsufficientFramesError("empty landmark stream")
    frames.sort(key=lambda f: f.frame_idx)
    return SequenceRecord(
        seq_id=seq_id, frames=tuple(frames), label=label, dataset=dataset, apex_idx=apex_idx
    )


def frame_to_json(frame: LandmarkFrame, z: float = 0.0) -> str:
    """Serialize one frame back to the wire format (z padded as a constant)."""
    return json.dumps(
        {
            "seq_id": frame.seq_id,
            "frame_idx": frame.frame_idx,
            "t_ms": frame.t_ms,
            "img_w": frame.img_w,
            "img_h": frame.img_h,
            "points": [[float(x), float(y), z] for x, y in frame.points],
        }
    )


def write_sequence(seq: SequenceRecord, writer: IO[str]) -> None:
    for frame in seq.frames:
        writer.write(frame_to_json(frame))
        writer.write("\n")


def select_key_frames(seq: SequenceRecord, count: int = 5) -> list[int]:
    """Uniformly sample `count` frame indices spanning the sequence.

    First index is 0 and last is L-1; interior indices are round-half-up of
    i*(L-1)/(count-1). When the sequence carries an apex_idx, sampling spans
    [0, apex_idx] so trailing offset frames are excluded.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    last = len(seq.frames) - 1 if seq.apex_idx is None else seq.apex_idx
    length = last + 1
    if length < count:
        raise InsufficientFramesError(
            f"sequence {seq.seq_id!r} spans {length} frames; need at least {count}"
        )
    step = last / (count - 1)
    # round half up, not banker's rounding
    return [int(math.floor(i * step + 0.5)) for i in range(count)]


def key_frame_records(seq: SequenceRecord, count: int = 5) -> list[LandmarkFrame]:
    return [seq.frames[i] for i in select_key_frames(seq, count)]


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load a dataset manifest and verify every referenced file exists."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    entries = []
    for raw in obj.get("entries", []):
        entry = ManifestEntry(
            seq_id=str(raw["seq_id"]),
            path=str(raw["path"]),
            label=str(raw["label"]),
            apex_idx=raw.get("apex_idx"),
            dataset=raw.get("dataset"),
        )
        entries.append(entry)
    manifest = DatasetManifest(
        name=str(obj.get("name", path.stem)),
        entries=entries,
        emotion_set=tuple(obj.get("emotion_set", EMOTIONS)),
    )
    base = path.parent
    missing = [e.path for e in manifest.entries if not (base / e.path).exists()]
    if missing:
        raise SchemaError(f"manifest {manifest.name!r} references missing files: {missing[:5]}")
    return manifest


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    obj = {
        "name": manifest.name,
        "emotion_set": list(manifest.emotion_set),
        "entries": [
            {
                "seq_id": e.seq_id,
                "path": e.path,
                "label": e.label,
                **({"apex_idx": e.apex_idx} if e.apex_idx is not None else {}),
                **({"dataset": e.dataset} if e.dataset is not None else {}),
            }
            for e in manifest.entries
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_manifest_sequences(path: str | Path) -> list[SequenceRecord]:
    """Load every sequence referenced by a manifest, resolving relative paths."""
    path = Path(path)
    manifest = load_manifest(path)
    base = path.parent
    records = []
    for entry in manifest.entries:
        with open(base / entry.path, encoding="utf-8") as fh:
            records.append(
                load_sequence(
                    fh,
                    label=entry.label,
                    dataset=entry.dataset or manifest.name,
                    apex_idx=entry.apex_idx,
                )
            )
    return records
