import numpy as np
import pytest

from facexpr.errors import ConfigError
from facexpr.landmarks import load_manifest_sequences, write_sequence
from facexpr.synth import SynthSpec, canonical_face, generate_records, shuffle_labels, synth_generate


class TestGenerateRecords:
    def test_deterministic(self):
        spec = SynthSpec(class_count=3, sequences_per_class=2, frame_count=6, seed=5)
        a = generate_records(spec)
        b = generate_records(spec)
        assert len(a) == len(b) == 6
        for ra, rb in zip(a, b):
            assert ra.seq_id == rb.seq_id and ra.label == rb.label
            for fa, fb in zip(ra.frames, rb.frames):
                np.testing.assert_array_equal(fa.points, fb.points)

    def test_noiseless_frame0_is_template(self):
        spec = SynthSpec(class_count=2, sequences_per_class=2, frame_count=6,
                         noise_sigma_px=0.0, seed=1)
        template, _, _ = canonical_face()
        for rec in generate_records(spec):
            np.testing.assert_array_equal(rec.frames[0].points, template)

    def test_classes_deform_differently(self):
        spec = SynthSpec(class_count=3, sequences_per_class=1, frame_count=6,
                         noise_sigma_px=0.0, seed=1)
        records = generate_records(spec)
        finals = [rec.frames[-1].points for rec in records]
        assert not np.array_equal(finals[0], finals[1])
        assert not np.array_equal(finals[1], finals[2])

    def test_onset_offset_sets_apex(self):
        spec = SynthSpec(class_count=2, sequences_per_class=1, frame_count=9,
                         profile="onset-offset", seed=0)
        for rec in generate_records(spec):
            assert rec.apex_idx == 4
            mid = rec.frames[4].points
            first = rec.frames[0].points
            last = rec.frames[-1].points
            # deformation peaks mid-sequence and relaxes back
            assert np.abs(mid - first).max() > np.abs(last - first).max()

    def test_bad_specs_rejected(self):
        with pytest.raises(ConfigError):
            SynthSpec(class_count=9)
        with pytest.raises(ConfigError):
            SynthSpec(frame_count=3)
        with pytest.raises(ConfigError):
            SynthSpec(profile="sideways")


class TestSynthGenerate:
    def test_round_trip_through_manifest(self, tmp_path):
        spec = SynthSpec(class_count=2, sequences_per_class=3, frame_count=6, seed=3)
        manifest = synth_generate(spec, tmp_path)
        assert len(manifest.entries) == 6
        records = load_manifest_sequences(tmp_path / "manifest.json")
        originals = generate_records(spec)
        assert len(records) == 6
        for loaded, orig in zip(
            sorted(records, key=lambda r: r.seq_id),
            sorted(originals, key=lambda r: r.seq_id),
        ):
            assert loaded.seq_id == orig.seq_id and loaded.label == orig.label
            for fa, fb in zip(loaded.frames, orig.frames):
                np.testing.assert_allclose(fa.points, fb.points, atol=1e-12)

    def test_byte_identical_output(self, tmp_path):
        import io

        spec = SynthSpec(class_count=2, sequences_per_class=1, frame_count=6, seed=4)
        bufs = []
        for _ in range(2):
            rec = generate_records(spec)[0]
            buf = io.StringIO()
            write_sequence(rec, buf)
            bufs.append(buf.getvalue())
        assert bufs[0] == bufs[1]


class TestShuffleLabels:
    def test_preserves_label_multiset(self):
        records = generate_records(SynthSpec(class_count=3, sequences_per_class=4, seed=0))
        shuffled = shuffle_labels(records, seed=1)
        assert sorted(r.label for r in shuffled) == sorted(r.label for r in records)
        assert [r.label for r in shuffled] != [r.label for r in records]
        # frames untouched
        for a, b in zip(records, shuffled):
            np.testing.assert_array_equal(a.frames[0].points, b.frames[0].points)
