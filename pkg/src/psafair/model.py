"""Logistic model: probabilities, thresholded labels and the log-loss gradient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ModelParams
from .errors import DimensionMismatch

DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class PredictionBatch:
    probs: np.ndarray
    labels: np.ndarray
    threshold: float = DEFAULT_THRESHOLD


def _theta(params) -> np.ndarray:
    return params.theta if isinstance(params, ModelParams) else np.asarray(params, dtype=np.float64)


def _check(theta: np.ndarray, features: np.ndarray) -> None:
    if features.ndim != 2:
        raise DimensionMismatch(f"features must be 2-D, got shape {features.shape}")
    if theta.shape != (features.shape[1] + 1,):
        raise DimensionMismatch(
            f"theta has length {theta.size}, expected n_features + 1 = {features.shape[1] + 1}"
        )


def decision_function(params, features) -> np.ndarray:
    theta = _theta(params)
    X = np.asarray(features, dtype=np.float64)
    _check(theta, X)
    return X @ theta[:-1] + theta[-1]


def sigmoid(z) -> np.ndarray:
    """Logistic function via ``exp(-|z|)``; never overflows."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    r = 1.0 / (1.0 + e)
    return np.where(z >= 0, r, e * r)


def predict_proba(params, features) -> np.ndarray:
    return sigmoid(decision_function(params, features))


def predict(params, features, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    return (predict_proba(params, features) >= threshold).astype(np.int64)


def predict_batch(params, features, threshold: float = DEFAULT_THRESHOLD) -> PredictionBatch:
    probs = predict_proba(params, features)
    return PredictionBatch(probs, (probs >= threshold).astype(np.int64), threshold)


def log_loss_gradient(params, features, y_true) -> np.ndarray:
    """Gradient of the mean log-loss w.r.t. ``theta`` (weights, then intercept)."""
    theta = _theta(params)
    X = np.asarray(features, dtype=np.float64)
    _check(theta, X)
    y = np.asarray(y_true, dtype=np.float64)
    if y.shape != (X.shape[0],):
        raise DimensionMismatch(f"y_true has shape {y.shape}, expected ({X.shape[0]},)")
    r = sigmoid(X @ theta[:-1] + theta[-1]) - y
    n = X.shape[0]
    return np.append(X.T @ r, r.sum()) / n
