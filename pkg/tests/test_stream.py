import io

import numpy as np
import pytest

from facexpr.errors import FingerprintMismatchError, SchemaError
from facexpr.harness import compute_feature_tensors, label_vocabulary
from facexpr.landmarks import write_sequence
from facexpr.nn.model import ModelConfig
from facexpr.nn.training import ModelArtifact, train
from facexpr.stream import Phase, PhaseDetector, StreamEngine, replay
from facexpr.synth import SynthSpec, generate_records
from facexpr.topology import GroupingMode, builtin_subset, enumerate_pairs

CYCLE = [Phase.NEUTRAL, Phase.ONSET, Phase.APEX, Phase.OFFSET]


def assert_valid_walk(phases):
    for prev, cur in zip(phases, phases[1:]):
        if cur is prev:
            continue
        assert CYCLE[(CYCLE.index(prev) + 1) % 4] is cur, f"{prev} -> {cur}"


def trapezoid_trace(ramp=5, hold=6, decay=5, tail=6, peak=8.0, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    up = np.linspace(0.0, peak, ramp + 1)[1:]
    flat = np.full(hold, peak)
    down = np.linspace(peak, 0.0, decay + 1)[1:]
    trace = np.concatenate([[0.0, 0.0], up, flat, down, np.zeros(tail)])
    if noise:
        trace = trace + rng.normal(0.0, noise, size=trace.shape)
    return trace


class TestPhaseDetector:
    def test_ramp_hold_decay_cycle(self):
        det = PhaseDetector(activity_threshold=1.0, window=3)
        phases = [det.push(v).phase for v in trapezoid_trace()]
        seen = [phases[0]]
        for p in phases[1:]:
            if p is not seen[-1]:
                seen.append(p)
        assert seen == [Phase.NEUTRAL, Phase.ONSET, Phase.APEX, Phase.OFFSET, Phase.NEUTRAL]

    def test_all_zero_stays_neutral(self):
        det = PhaseDetector()
        assert all(det.push(0.0).phase is Phase.NEUTRAL for _ in range(50))

    def test_subthreshold_spike_stays_neutral(self):
        det = PhaseDetector(activity_threshold=1.0)
        trace = [0.0] * 5 + [0.8] + [0.0] * 5
        assert all(det.push(v).phase is Phase.NEUTRAL for v in trace)

    def test_apex_span_contains_trace_peak(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            trace = trapezoid_trace(
                ramp=int(rng.integers(3, 8)),
                hold=int(rng.integers(3, 9)),
                decay=int(rng.integers(3, 8)),
                peak=float(rng.uniform(4, 12)),
                noise=0.15,
                seed=seed,
            )
            det = PhaseDetector(activity_threshold=1.0, window=3)
            phases = [det.push(v).phase for v in trace]
            assert_valid_walk(phases)
            span = det.apex_span()
            assert span is not None
            peak_idx = int(np.argmax(trace))
            assert span[0] <= peak_idx <= span[1], (span, peak_idx)

    def test_valid_walk_on_random_traces(self):
        rng = np.random.default_rng(123)
        for _ in range(50):
            det = PhaseDetector(activity_threshold=1.0, window=3)
            trace = rng.normal(0.0, 3.0, size=60).cumsum() * 0.3
            phases = [det.push(float(v)).phase for v in trace]
            assert_valid_walk(phases)

    def test_nonfinite_rejected(self):
        det = PhaseDetector()
        with pytest.raises(SchemaError):
            det.push(float("nan"))


@pytest.fixture(scope="module")
def trained_engine_parts():
    topo = enumerate_pairs(builtin_subset("P61"), GroupingMode.AU_GROUPED)
    records = generate_records(
        SynthSpec(class_count=3, sequences_per_class=5, frame_count=9, seed=21)
    )
    labels = label_vocabulary(records)
    idx = {n: i for i, n in enumerate(labels)}
    tensors = compute_feature_tensors(records, topo)
    samples = [(t, idx[r.label]) for t, r in zip(tensors, records)]
    config = ModelConfig(
        feature_count=topo.feature_count, class_count=len(labels),
        dense_sizes=(32, 16), filters=2, epochs=2, seed=0,
    )
    params, scaler, _ = train(samples, [], config)
    artifact = ModelArtifact(params=params, scaler=scaler, labels=labels)
    return artifact, topo, records


class TestStreamEngine:
    def test_warmup_then_prediction_stream(self, trained_engine_parts):
        artifact, topo, records = trained_engine_parts
        engine = StreamEngine(artifact, topo)
        rec = records[0]
        outputs = [engine.push_frame(f) for f in rec.frames]
        assert all(o is None for o in outputs[:4])
        assert all(o is not None for o in outputs[4:])
        assert len([o for o in outputs if o]) == len(rec) - 4

    def test_drop_oldest_window(self, trained_engine_parts):
        artifact, topo, records = trained_engine_parts
        engine = StreamEngine(artifact, topo)
        rec = records[0]
        outputs = [engine.push_frame(f) for f in rec.frames]
        # push 6 predicts over frames 2..6, reported at the newest frame
        assert outputs[5].frame_idx == rec.frames[5].frame_idx

    def test_static_stream_neutral_zero(self, trained_engine_parts):
        artifact, topo, records = trained_engine_parts
        engine = StreamEngine(artifact, topo)
        frame = records[0].frames[0]
        preds = []
        for i in range(8):
            import dataclasses

            f = dataclasses.replace(frame, frame_idx=i, t_ms=i * 400)
            out = engine.push_frame(f)
            if out:
                preds.append(out)
        assert len(preds) == 4
        for p in preds:
            assert p.mean_distance_diff == 0.0
            assert p.phase is Phase.NEUTRAL

    def test_fingerprint_mismatch_rejected(self, trained_engine_parts):
        artifact, _, _ = trained_engine_parts
        other = enumerate_pairs(builtin_subset("P61"), GroupingMode.FULL)
        with pytest.raises(FingerprintMismatchError):
            StreamEngine(artifact, other)


class TestReplay:
    def _ndjson(self, rec):
        buf = io.StringIO()
        write_sequence(rec, buf)
        return buf.getvalue()

    def test_prediction_count(self, trained_engine_parts):
        artifact, topo, records = trained_engine_parts
        rec = records[1]
        engine = StreamEngine(artifact, topo)
        preds = list(replay(io.StringIO(self._ndjson(rec)), engine))
        assert len(preds) == len(rec) - 4

    def test_deterministic(self, trained_engine_parts):
        artifact, topo, records = trained_engine_parts
        text = self._ndjson(records[2])
        a = list(replay(io.StringIO(text), StreamEngine(artifact, topo)))
        b = list(replay(io.StringIO(text), StreamEngine(artifact, topo)))
        assert [p.label for p in a] == [p.label for p in b]
        assert [p.phase for p in a] == [p.phase for p in b]
        for pa, pb in zip(a, b):
            np.testing.assert_array_equal(pa.probabilities, pb.probabilities)
            assert pa.mean_distance_diff == pb.mean_distance_diff

    def test_realtime_rate_matches_max(self, trained_engine_parts):
        artifact, topo, records = trained_engine_parts
        text = self._ndjson(records[0])
        fast = list(replay(io.StringIO(text), StreamEngine(artifact, topo)))
        rt_engine = StreamEngine(artifact, topo, cadence_ms=1)
        slow = list(replay(io.StringIO(text), rt_engine, rate="realtime"))
        assert [p.label for p in fast] == [p.label for p in slow]
        for pa, pb in zip(fast, slow):
            np.testing.assert_array_equal(pa.probabilities, pb.probabilities)

    def test_bad_rate_rejected(self, trained_engine_parts):
        artifact, topo, records = trained_engine_parts
        engine = StreamEngine(artifact, topo)
        with pytest.raises(SchemaError):
            list(replay(io.StringIO(""), engine, rate="warp"))
