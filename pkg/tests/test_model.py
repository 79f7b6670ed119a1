import warnings

import numpy as np
import pytest

import oracles
from psafair.data import ModelParams
from psafair.errors import DimensionMismatch
from psafair.model import (
    decision_function,
    log_loss_gradient,
    predict,
    predict_batch,
    predict_proba,
    sigmoid,
)


class TestPredictProba:
    def test_zero_theta(self, rng):
        X = rng.standard_normal((7, 3))
        assert np.all(predict_proba(np.zeros(4), X) == 0.5)

    def test_limits(self):
        p = predict_proba(ModelParams([1.0, 0.0]), np.array([[0.0], [50.0], [-50.0]]))
        assert p[0] == 0.5
        assert p[1] > 1 - 1e-15
        assert 0 < p[2] < 1e-20

    def test_extended_precision_oracle(self, rng):
        for _ in range(50):
            d = int(rng.integers(1, 5))
            theta = rng.normal(0, 3, d + 1)
            X = rng.normal(0, 3, (10, d))
            got = predict_proba(theta, X)
            z = X @ theta[:-1] + theta[-1]
            want = np.array([oracles.sigmoid_mp(v) for v in z])
            np.testing.assert_allclose(got, want, rtol=1e-14, atol=0)

    def test_no_overflow_and_monotone(self):
        z = np.linspace(-1000, 1000, 20001)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            p = sigmoid(z)
        assert np.all(np.isfinite(p))
        assert np.all(np.diff(p) >= 0)
        assert np.all((p >= 0) & (p <= 1))

    def test_symmetry(self, rng):
        z = rng.normal(0, 10, 1000)
        np.testing.assert_allclose(sigmoid(-z), 1 - sigmoid(z), rtol=0, atol=1e-12)

    def test_strictly_increasing_in_score(self):
        z = np.linspace(-30, 30, 601)
        assert np.all(np.diff(sigmoid(z)) > 0)

    def test_dimension_mismatch(self, rng):
        X = rng.standard_normal((4, 2))
        with pytest.raises(DimensionMismatch):
            predict_proba(np.zeros(2), X)
        with pytest.raises(DimensionMismatch):
            decision_function(np.zeros(2), np.zeros(3))


class TestPredict:
    def test_boundary_inclusive(self):
        # logit of 0.49, 0.5 and 0.51 as one-feature scores
        X = np.log(np.array([[0.49 / 0.51], [1.0], [0.51 / 0.49]]))
        assert predict(ModelParams([1.0, 0.0]), X).tolist() == [0, 1, 1]

    def test_zero_theta_all_positive(self, rng):
        assert np.all(predict(np.zeros(3), rng.standard_normal((9, 2))) == 1)

    def test_composition(self, rng):
        theta = rng.standard_normal(4)
        X = rng.standard_normal((200, 3))
        for thr in (0.2, 0.5, 0.9):
            batch = predict_batch(theta, X, thr)
            assert np.array_equal(batch.labels, (predict_proba(theta, X) >= thr).astype(int))
            assert np.array_equal(predict(theta, X, thr), batch.labels)

    def test_threshold_range(self):
        with pytest.raises(ValueError):
            predict(np.zeros(2), np.zeros((1, 1)), threshold=1.0)

    def test_positive_scaling_invariance(self, rng):
        for _ in range(50):
            theta = rng.standard_normal(3)
            X = rng.standard_normal((100, 2))
            for c in (1e-3, 0.5, 7.0, 1e3):
                assert np.array_equal(predict(theta, X), predict(c * theta, X))


class TestGradient:
    def test_perfect_fit_is_flat(self):
        X = np.array([[40.0], [-40.0]])
        g = log_loss_gradient(np.array([1.0, 0.0]), X, np.array([1, 0]))
        assert np.max(np.abs(g)) < 1e-15

    def test_hand_example(self):
        g = log_loss_gradient(np.zeros(2), np.array([[1.0]]), np.array([1]))
        assert g.tolist() == [-0.5, -0.5]

    def test_finite_differences(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 21))
            d = int(rng.integers(1, 5))
            theta = rng.standard_normal(d + 1)
            X = rng.standard_normal((n, d))
            y = rng.integers(0, 2, n)
            g = log_loss_gradient(theta, X, y)
            fd = np.array(
                oracles.central_difference(
                    lambda t: oracles.mean_log_loss_theta(t, X.tolist(), y.tolist()), theta.tolist()
                )
            )
            assert np.linalg.norm(g - fd) / np.linalg.norm(g) < 1e-5

    def test_shape_checks(self):
        with pytest.raises(DimensionMismatch):
            log_loss_gradient(np.zeros(2), np.zeros((3, 1)), np.zeros(2))
