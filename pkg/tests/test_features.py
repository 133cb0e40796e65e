import math

import numpy as np
import pytest

from facexpr.errors import FingerprintMismatchError, InsufficientFramesError
from facexpr.features import (
    FrameFeatures,
    frame_features,
    mean_distance_diff,
    pair_angle,
    pair_distance,
    sequence_features,
)
from facexpr.topology import GroupingMode

from conftest import make_frame, random_mesh_frames, tiny_topology


# test-local oracle: straight-line scalar math, separate from the engine
def oracle_distance(p, q):
    return math.sqrt((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2)


def oracle_angle(p, q):
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    if dy == 0.0:
        if dx == 0.0:
            return 0.0
        return math.pi / 2 if dx > 0 else -math.pi / 2
    return math.atan(dx / dy)


class TestPairKernels:
    def test_distance_3_4_5(self):
        assert pair_distance((0, 0), (3, 4)) == pytest.approx(5.0, abs=1e-15)

    def test_distance_coincident(self):
        assert pair_distance((7, 2), (7, 2)) == 0.0

    def test_distance_translated(self):
        assert pair_distance((1, 1), (4, 5)) == pytest.approx(5.0, abs=1e-15)

    def test_distance_symmetry_nonnegative(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            p, q = rng.uniform(-100, 100, size=(2, 2))
            d1, d2 = pair_distance(p, q), pair_distance(q, p)
            assert d1 == d2 >= 0.0

    def test_angle_diagonal(self):
        assert pair_angle((0, 0), (1, 1)) == pytest.approx(math.pi / 4, abs=1e-12)

    def test_angle_horizontal_limit(self):
        # dy = 0, dx = 2 -> +pi/2
        assert pair_angle((3, 5), (1, 5)) == pytest.approx(math.pi / 2, abs=0)
        assert pair_angle((1, 5), (3, 5)) == pytest.approx(-math.pi / 2, abs=0)

    def test_angle_coincident(self):
        assert pair_angle((2, 2), (2, 2)) == 0.0

    def test_angle_swap_invariant_off_degenerate(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            p, q = rng.uniform(-50, 50, size=(2, 2))
            assert pair_angle(p, q) == pytest.approx(pair_angle(q, p), abs=1e-15)

    def test_angle_principal_range(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            p, q = rng.uniform(-50, 50, size=(2, 2))
            assert -math.pi / 2 <= pair_angle(p, q) <= math.pi / 2


class TestFrameFeatures:
    def test_collinear_points(self):
        topo = tiny_topology(3)
        d = 7.0
        frame = make_frame([[0, 0], [d * 0.6, d * 0.8], [2 * d * 0.6, 2 * d * 0.8]])
        feats = frame_features(frame, topo)
        # lexicographic pair order (0,1), (0,2), (1,2)
        np.testing.assert_allclose(feats.distances, [d, 2 * d, d], atol=1e-12)
        assert feats.angles[0] == feats.angles[1] == feats.angles[2]

    def test_deterministic(self, p61_au):
        frame = random_mesh_frames(np.random.default_rng(3), 1)[0]
        a = frame_features(frame, p61_au)
        b = frame_features(frame, p61_au)
        np.testing.assert_array_equal(a.distances, b.distances)
        np.testing.assert_array_equal(a.angles, b.angles)

    def test_matches_double_loop_oracle_tiny(self):
        topo = tiny_topology(12)
        rng = np.random.default_rng(10)
        for frame in random_mesh_frames(rng, 20, n_points=12):
            feats = frame_features(frame, topo)
            for k, (i, j) in enumerate(topo.pairs):
                p = frame.points[topo.subset.indices[i]]
                q = frame.points[topo.subset.indices[j]]
                assert abs(feats.distances[k] - oracle_distance(p, q)) <= 1e-12
                assert abs(feats.angles[k] - oracle_angle(p, q)) <= 1e-12

    def test_matches_double_loop_oracle_p61_au(self, p61_au):
        rng = np.random.default_rng(11)
        indices = p61_au.subset.indices
        for frame in random_mesh_frames(rng, 3):
            feats = frame_features(frame, p61_au)
            for k, (i, j) in enumerate(p61_au.pairs):
                p = frame.points[indices[i]]
                q = frame.points[indices[j]]
                assert abs(feats.distances[k] - oracle_distance(p, q)) <= 1e-12
                assert abs(feats.angles[k] - oracle_angle(p, q)) <= 1e-12

    def test_short_frame_rejected(self, p61_au):
        frame = make_frame(np.zeros((10, 2)))
        with pytest.raises(Exception, match="points"):
            frame_features(frame, p61_au)


class TestSequenceFeatures:
    def test_static_sequence_is_zero(self, p61_au):
        frame = random_mesh_frames(np.random.default_rng(4), 1)[0]
        frames = [make_frame(frame.points, frame_idx=i) for i in range(5)]
        tensor = sequence_features(frames, p61_au)
        assert tensor.values.shape == (4, p61_au.feature_count)
        np.testing.assert_array_equal(tensor.values, 0.0)

    def test_shape_five_frames(self, p61_au):
        frames = random_mesh_frames(np.random.default_rng(5), 5)
        tensor = sequence_features(frames, p61_au)
        assert tensor.values.shape == (4, 2 * p61_au.pair_count)

    def test_single_pair_distance_diff(self):
        topo = tiny_topology(2)
        f0 = make_frame([[0, 0], [10, 0]])
        f1 = make_frame([[0, 0], [13, 0]], frame_idx=1)
        tensor = sequence_features([f0, f1], topo)
        assert tensor.values[0, 0] == pytest.approx(3.0, abs=1e-12)

    def test_too_few_frames(self, p61_au):
        frames = random_mesh_frames(np.random.default_rng(6), 1)
        with pytest.raises(InsufficientFramesError):
            sequence_features(frames, p61_au)

    def test_reversed_negates_and_flips(self, p61_au):
        frames = random_mesh_frames(np.random.default_rng(7), 5)
        fwd = sequence_features(frames, p61_au)
        rev = sequence_features(frames[::-1], p61_au)
        np.testing.assert_allclose(rev.values, -fwd.values[::-1], atol=1e-12)

    def test_translation_invariance(self, p61_au):
        frames = random_mesh_frames(np.random.default_rng(8), 5)
        base = sequence_features(frames, p61_au)
        shifted = [
            make_frame(f.points + np.array([123.5, -77.25]), frame_idx=f.frame_idx)
            for f in frames
        ]
        moved = sequence_features(shifted, p61_au)
        np.testing.assert_allclose(moved.values, base.values, atol=1e-9)

    def test_uniform_scaling(self, p61_au):
        s = 2.75
        frames = random_mesh_frames(np.random.default_rng(9), 5)
        base = sequence_features(frames, p61_au)
        scaled = [make_frame(f.points * s, frame_idx=f.frame_idx) for f in frames]
        out = sequence_features(scaled, p61_au)
        p = p61_au.pair_count
        np.testing.assert_allclose(out.values[:, :p], s * base.values[:, :p], rtol=1e-9)
        np.testing.assert_allclose(out.values[:, p:], base.values[:, p:], atol=1e-9)


class TestMeanDistanceDiff:
    def _feats(self, distances, fp="fp"):
        d = np.asarray(distances, dtype=np.float64)
        return FrameFeatures(distances=d, angles=np.zeros_like(d), topology_fingerprint=fp)

    def test_identical(self):
        f = self._feats([1.0, 2.0, 3.0])
        assert mean_distance_diff(f, f) == 0.0

    def test_constant_shift(self):
        a = self._feats([1.0, 2.0, 3.0])
        b = self._feats([3.0, 4.0, 5.0])
        assert mean_distance_diff(a, b) == pytest.approx(2.0, abs=1e-15)

    def test_hand_computed(self):
        a = self._feats([1.5, -2.0, 0.25, 8.0])
        b = self._feats([2.0, 1.0, -0.75, 9.0])
        expected = ((2.0 - 1.5) + (1.0 - -2.0) + (-0.75 - 0.25) + (9.0 - 8.0)) / 4.0
        assert mean_distance_diff(a, b) == pytest.approx(expected, abs=1e-15)

    def test_topology_mismatch(self):
        a = self._feats([1.0], fp="a")
        b = self._feats([1.0], fp="b")
        with pytest.raises(FingerprintMismatchError):
            mean_distance_diff(a, b)
