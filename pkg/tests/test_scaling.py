import math

import numpy as np
import pytest

from facexpr.errors import ConfigError, FingerprintMismatchError
from facexpr.features import FeatureTensor
from facexpr.scaling import STD_FLOOR, fit_scaler, load_scaler, save_scaler, transform


def tensor_of(rows, fp="fp"):
    return FeatureTensor(
        values=np.asarray(rows, dtype=np.float64), topology_fingerprint=fp
    )


class TestFitScaler:
    def test_hand_computed_column(self):
        t = tensor_of([[1.0], [2.0], [3.0]])
        params = fit_scaler([t])
        assert params.mean[0] == pytest.approx(2.0, abs=1e-15)
        assert params.std[0] == pytest.approx(math.sqrt(2.0 / 3.0), abs=1e-12)

    def test_constant_column_floored(self):
        t = tensor_of([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])
        params = fit_scaler([t])
        assert params.std[0] == STD_FLOOR
        z = transform(t, params)
        np.testing.assert_array_equal(z.values[:, 0], 0.0)

    def test_duplication_invariance(self):
        t = tensor_of([[1.0, 4.0], [3.0, -2.0]])
        once = fit_scaler([t])
        twice = fit_scaler([t, t])
        np.testing.assert_allclose(once.mean, twice.mean, atol=1e-15)
        np.testing.assert_allclose(once.std, twice.std, atol=1e-15)

    def test_rows_pooled_across_tensors(self):
        a = tensor_of([[1.0], [2.0]])
        b = tensor_of([[3.0]])
        params = fit_scaler([a, b])
        assert params.mean[0] == pytest.approx(2.0)
        assert params.std[0] == pytest.approx(math.sqrt(2.0 / 3.0), abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            fit_scaler([])

    def test_fingerprint_mismatch_rejected(self):
        with pytest.raises(FingerprintMismatchError):
            fit_scaler([tensor_of([[1.0]], fp="a"), tensor_of([[2.0]], fp="b")])


class TestTransform:
    def test_hand_computed(self):
        t = tensor_of([[1.0], [2.0], [3.0]])
        z = transform(t, fit_scaler([t]))
        expected = math.sqrt(3.0 / 2.0)
        np.testing.assert_allclose(z.values[:, 0], [-expected, 0.0, expected], atol=1e-12)

    def test_identity_params(self):
        t = tensor_of([[0.5, -1.5], [2.0, 7.0]])
        params = fit_scaler([tensor_of([[0.0, 0.0]])])  # constant -> floored
        params = type(params)(
            mean=np.zeros(2), std=np.ones(2), feature_count=2, topology_fingerprint="fp"
        )
        z = transform(t, params)
        np.testing.assert_array_equal(z.values, t.values)

    def test_pooled_unit_stats(self):
        rng = np.random.default_rng(0)
        tensors = [tensor_of(rng.normal(3.0, 2.5, size=(4, 6))) for _ in range(10)]
        params = fit_scaler(tensors)
        pooled = np.concatenate([transform(t, params).values for t in tensors])
        assert np.abs(pooled.mean(axis=0)).max() < 1e-9
        assert np.abs(pooled.std(axis=0) - 1.0).max() < 1e-9

    def test_affine(self):
        rng = np.random.default_rng(1)
        x1 = rng.normal(size=(3, 4))
        x2 = rng.normal(size=(3, 4))
        params = fit_scaler([tensor_of(rng.normal(size=(8, 4)))])
        mid = transform(tensor_of((x1 + x2) / 2.0), params).values
        t1 = transform(tensor_of(x1), params).values
        t2 = transform(tensor_of(x2), params).values
        np.testing.assert_allclose(mid, (t1 + t2) / 2.0, atol=1e-12)

    def test_shape_mismatch_rejected(self):
        params = fit_scaler([tensor_of([[1.0, 2.0]])])
        with pytest.raises(FingerprintMismatchError):
            transform(tensor_of([[1.0, 2.0, 3.0]]), params)

    def test_save_load_round_trip(self, tmp_path):
        params = fit_scaler([tensor_of([[1.0, -2.0], [4.0, 6.0], [0.5, 0.5]])])
        save_scaler(params, tmp_path / "scaler.json")
        loaded = load_scaler(tmp_path / "scaler.json")
        np.testing.assert_array_equal(loaded.mean, params.mean)
        np.testing.assert_array_equal(loaded.std, params.std)
        assert loaded.topology_fingerprint == params.topology_fingerprint
        assert loaded.feature_count == params.feature_count
