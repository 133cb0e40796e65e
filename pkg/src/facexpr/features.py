"""Pairwise geometric features and the temporal-difference tensor.

For every landmark pair the engine computes the Euclidean distance and the
angle arctan(dx/dy) of the connecting segment, then differences consecutive
key frames: row t of the tensor is features(frame t+1) - features(frame t),
distances in columns 0..P-1 and angles in columns P..2P-1. All math is
float64; angle differences are raw subtraction with no branch-cut wrapping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import FingerprintMismatchError, InsufficientFramesError, SchemaError
from .landmarks import LandmarkFrame
from .topology import PairTopology

HALF_PI = np.pi / 2.0


@dataclass(frozen=True)
class FrameFeatures:
    """Per-frame pair features: distances in pixels, angles in radians."""

    distances: np.ndarray
    angles: np.ndarray
    topology_fingerprint: str


@dataclass(frozen=True)
class FeatureTensor:
    """(N-1, 2P) frame-to-frame feature differences for one sequence."""

    values: np.ndarray
    topology_fingerprint: str

    @property
    def time_steps(self) -> int:
        return self.values.shape[0]

    @property
    def feature_count(self) -> int:
        return self.values.shape[1]


def pair_distance(p_i, p_j) -> float:
    """Euclidean distance between two 2-D points."""
    dx = float(p_i[0]) - float(p_j[0])
    dy = float(p_i[1]) - float(p_j[1])
    return float(np.hypot(dx, dy))


def pair_angle(p_i, p_j) -> float:
    """arctan(dx/dy) of the segment, principal value in [-pi/2, pi/2].

    dy == 0 takes the limit sign(dx)*pi/2; coincident points return 0.
    """
    dx = float(p_i[0]) - float(p_j[0])
    dy = float(p_i[1]) - float(p_j[1])
    if dy == 0.0:
        if dx == 0.0:
            return 0.0
        return HALF_PI if dx > 0 else -HALF_PI
    return float(np.arctan(dx / dy))


def _pair_deltas(points: np.ndarray, topo: PairTopology):
    sub = points[np.asarray(topo.subset.indices, dtype=np.intp)]
    pairs = np.asarray(topo.pairs, dtype=np.intp)
    a = sub[pairs[:, 0]]
    b = sub[pairs[:, 1]]
    return a[:, 0] - b[:, 0], a[:, 1] - b[:, 1]


def frame_features(frame: LandmarkFrame, topo: PairTopology) -> FrameFeatures:
    """Distances and angles for every pair in topology order (vectorized)."""
    if frame.point_count <= max(topo.subset.indices):
        raise SchemaError(
            f"frame has {frame.point_count} points; subset needs index {max(topo.subset.indices)}"
        )
    dx, dy = _pair_deltas(frame.points, topo)
    dist = np.hypot(dx, dy)
    with np.errstate(divide="ignore", invalid="ignore"):
        ang = np.arctan(dx / dy)
    degenerate = dy == 0.0
    if degenerate.any():
        ang = np.where(degenerate, np.where(dx == 0.0, 0.0, np.copysign(HALF_PI, dx)), ang)
    dist.setflags(write=False)
    ang.setflags(write=False)
    return FrameFeatures(distances=dist, angles=ang, topology_fingerprint=topo.fingerprint())


def sequence_features(key_frames: Sequence[LandmarkFrame], topo: PairTopology) -> FeatureTensor:
    """Difference consecutive frames' features into the (N-1, 2P) tensor."""
    n = len(key_frames)
    if n < 2:
        raise InsufficientFramesError(f"need at least 2 frames to difference, got {n}")
    per_frame = [frame_features(f, topo) for f in key_frames]
    p = topo.pair_count
    out = np.empty((n - 1, 2 * p), dtype=np.float64)
    for t in range(n - 1):
        out[t, :p] = per_frame[t + 1].distances - per_frame[t].distances
        out[t, p:] = per_frame[t + 1].angles - per_frame[t].angles
    out.setflags(write=False)
    return FeatureTensor(values=out, topology_fingerprint=topo.fingerprint())


def mean_distance_diff(first: FrameFeatures, last: FrameFeatures) -> float:
    """Mean over pairs of (last distance - first distance), in pixels."""
    if first.topology_fingerprint != last.topology_fingerprint:
        raise FingerprintMismatchError("frame features come from different topologies")
    return float(np.mean(last.distances - first.distances))
