"""Sliding five-frame prediction over a landmark stream with phase tracking.

The engine buffers frames; once five are held it builds the (4, 2P) tensor,
scales it with the saved scaler, classifies, updates the expression-phase
detector from the mean distance difference between the first and last
buffered frames, then drops the oldest frame (stride 1).

Phase detection walks the Neutral -> Onset -> Apex -> Offset -> Neutral
cycle on the mean-distance trace: rising above the activity threshold
starts Onset; a derivative sign change within the detection window marks
Apex (the interval is anchored at the observed turning point); a clear fall
from the apex level starts Offset; a quiet window returns to Neutral.
"""

from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import FingerprintMismatchError, ParseError, SchemaError
from .features import FrameFeatures, frame_features, mean_distance_diff
from .landmarks import LandmarkFrame, parse_frame_line
from .nn.training import ModelArtifact, predict_scaled
from .scaling import transform
from .features import FeatureTensor
from .topology import PairTopology

BUFFER_FRAMES = 5
DEFAULT_CADENCE_MS = 400
DEFAULT_ACTIVITY_THRESHOLD_PX = 1.0
DEFAULT_DERIVATIVE_WINDOW = 3
OFFSET_FALL_FRACTION = 0.35  # leave Apex once the trace drops this far off its peak


class Phase(str, Enum):
    NEUTRAL = "neutral"
    ONSET = "onset"
    APEX = "apex"
    OFFSET = "offset"


_NEXT_PHASE = {
    Phase.NEUTRAL: Phase.ONSET,
    Phase.ONSET: Phase.APEX,
    Phase.APEX: Phase.OFFSET,
    Phase.OFFSET: Phase.NEUTRAL,
}


@dataclass
class PhaseState:
    phase: Phase
    mean_diff: float
    apex_span: tuple[int, int] | None  # trace indices, inclusive


class PhaseDetector:
    """Streaming state machine over the mean-distance-difference trace."""

    def __init__(
        self,
        activity_threshold: float = DEFAULT_ACTIVITY_THRESHOLD_PX,
        window: int = DEFAULT_DERIVATIVE_WINDOW,
        trace_capacity: int = 512,
    ):
        if activity_threshold <= 0 or window < 1:
            raise SchemaError("activity threshold must be > 0 and window >= 1")
        self.t_active = activity_threshold
        self.window = window
        self.phase = Phase.NEUTRAL
        self.trace: deque[float] = deque(maxlen=trace_capacity)
        self._idx = -1
        self._onset_start = None
        self._onset_peak = -np.inf
        self._onset_peak_idx = None
        self._apex_peak = -np.inf
        self._apex_start = None
        self._apex_last = None
        self._quiet_run = 0

    def _derivative(self) -> float:
        if len(self.trace) < 2:
            return 0.0
        return self.trace[-1] - self.trace[-2]

    def _mean_derivative(self) -> float:
        pts = list(self.trace)[-(self.window + 1):]
        if len(pts) < 2:
            return 0.0
        return (pts[-1] - pts[0]) / (len(pts) - 1)

    def push(self, diff: float) -> PhaseState:
        if not np.isfinite(diff):
            raise SchemaError("mean distance difference must be finite")
        self._idx += 1
        self.trace.append(float(diff))
        self._quiet_run = self._quiet_run + 1 if abs(diff) < self.t_active else 0

        if self.phase is Phase.NEUTRAL:
            if diff >= self.t_active:
                self.phase = Phase.ONSET
                self._onset_start = self._idx
                self._onset_peak = diff
                self._onset_peak_idx = self._idx
        elif self.phase is Phase.ONSET:
            if diff > self._onset_peak:
                self._onset_peak = diff
                self._onset_peak_idx = self._idx
            # turning point: the trace stopped rising inside the window
            if self._derivative() <= 0.0 or self._mean_derivative() <= 0.0:
                self.phase = Phase.APEX
                self._apex_start = self._onset_peak_idx
                self._apex_last = self._idx
                self._apex_peak = self._onset_peak
        elif self.phase is Phase.APEX:
            self._apex_peak = max(self._apex_peak, diff)
            fallen = diff < self._apex_peak - max(
                self.t_active, OFFSET_FALL_FRACTION * abs(self._apex_peak)
            )
            if fallen and self._mean_derivative() < 0.0:
                self.phase = Phase.OFFSET
            else:
                self._apex_last = self._idx
        elif self.phase is Phase.OFFSET:
            if self._quiet_run >= self.window:
                self.phase = Phase.NEUTRAL
        return PhaseState(phase=self.phase, mean_diff=float(diff), apex_span=self.apex_span())

    def apex_span(self) -> tuple[int, int] | None:
        if self._apex_start is None:
            return None
        return (self._apex_start, self._apex_last)


@dataclass
class StreamPrediction:
    label: str
    probabilities: np.ndarray
    phase: Phase
    mean_distance_diff: float
    frame_idx: int
    latency_ms: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "label": self.label,
                "probabilities": [float(p) for p in self.probabilities],
                "phase": self.phase.value,
                "mean_distance_diff": self.mean_distance_diff,
                "frame_idx": self.frame_idx,
                "latency_ms": round(self.latency_ms, 3),
            }
        )


class StreamEngine:
    """Single-owner sliding-buffer predictor over landmark frames."""

    def __init__(
        self,
        artifact: ModelArtifact,
        topology: PairTopology,
        activity_threshold: float = DEFAULT_ACTIVITY_THRESHOLD_PX,
        window: int = DEFAULT_DERIVATIVE_WINDOW,
        cadence_ms: int = DEFAULT_CADENCE_MS,
    ):
        if artifact.scaler.topology_fingerprint != topology.fingerprint():
            raise FingerprintMismatchError(
                "model/scaler were trained on a different pair topology"
            )
        expected_steps = BUFFER_FRAMES - 1
        if artifact.config.time_steps != expected_steps:
            raise SchemaError(
                f"model expects {artifact.config.time_steps} time steps; "
                f"the five-frame buffer produces {expected_steps}"
            )
        self.artifact = artifact
        self.topology = topology
        self.cadence_ms = cadence_ms
        self.detector = PhaseDetector(activity_threshold, window)
        self._buffer: deque[tuple[LandmarkFrame, FrameFeatures]] = deque()

    def push_frame(self, frame: LandmarkFrame) -> StreamPrediction | None:
        """Append a frame; emit a prediction once the buffer holds five."""
        start = time.perf_counter()
        feats = frame_features(frame, self.topology)
        self._buffer.append((frame, feats))
        if len(self._buffer) < BUFFER_FRAMES:
            return None

        p = self.topology.pair_count
        rows = np.empty((BUFFER_FRAMES - 1, 2 * p))
        entries = list(self._buffer)
        for t in range(BUFFER_FRAMES - 1):
            rows[t, :p] = entries[t + 1][1].distances - entries[t][1].distances
            rows[t, p:] = entries[t + 1][1].angles - entries[t][1].angles
        tensor = FeatureTensor(values=rows, topology_fingerprint=self.topology.fingerprint())
        scaled = transform(tensor, self.artifact.scaler)
        label_idx, probs = predict_scaled(self.artifact.params, scaled.values)
        diff = mean_distance_diff(entries[0][1], entries[-1][1])
        state = self.detector.push(diff)
        self._buffer.popleft()
        return StreamPrediction(
            label=self.artifact.labels[label_idx],
            probabilities=probs,
            phase=state.phase,
            mean_distance_diff=diff,
            frame_idx=frame.frame_idx,
            latency_ms=(time.perf_counter() - start) * 1000.0,
        )


def replay(
    lines: Iterable[str] | IO[str],
    engine: StreamEngine,
    rate: str = "max",
) -> Iterator[StreamPrediction]:
    """Feed an NDJSON landmark stream through the engine.

    rate "realtime" sleeps the engine cadence between frames; "max" runs as
    fast as possible. The prediction math is cadence-independent.
    """
    if rate not in ("max", "realtime"):
        raise SchemaError(f"unknown replay rate {rate!r}")
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            frame = parse_frame_line(line, line_no)
        except ParseError:
            raise
        if rate == "realtime" and line_no > 1:
            time.sleep(engine.cadence_ms / 1000.0)
        prediction = engine.push_frame(frame)
        if prediction is not None:
            yield prediction
