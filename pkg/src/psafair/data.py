"""Core value types: datasets, splits, model parameters, objectives and solutions.

Conventions used throughout the package:

* ``target == 1`` is the desirable outcome.
* ``sensitive == 1`` is the majority / privileged group, ``sensitive == 0`` the
  protected minority.
* ``ModelParams.theta`` stores the feature weights followed by the intercept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidDataset, TooFewSamples, Violation

TRAIN_FRACTION = 0.70


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    target: np.ndarray
    sensitive: np.ndarray
    feature_names: tuple[str, ...]
    name: str = "dataset"

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen(self.features, np.float64))
        object.__setattr__(self, "target", _frozen(self.target, np.int64))
        object.__setattr__(self, "sensitive", _frozen(self.sensitive, np.int64))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_samples(self) -> int:
        return int(self.target.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1]) if self.features.ndim == 2 else 0

    def subset(self, idx) -> "Dataset":
        """Rows ``idx`` as a new dataset (used for train / test views)."""
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(
            self.features[idx], self.target[idx], self.sensitive[idx], self.feature_names, self.name
        )

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.target, self.sensitive, self.feature_names, self.name)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.name == other.name
            and self.feature_names == other.feature_names
            and self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.target, other.target)
            and np.array_equal(self.sensitive, other.sensitive)
        )

    __hash__ = None


def validate_dataset(d: Dataset) -> Dataset:
    """Return ``d`` unchanged if every dataset invariant holds.

    Raises :class:`InvalidDataset` listing *all* violations otherwise; its
    ``kinds`` attribute is a subset of ``{"ShapeMismatch", "NonBinaryColumn",
    "EmptyGroup"}``.
    """
    problems: list[Violation] = []
    n = d.target.shape[0]
    if d.features.ndim != 2:
        problems.append(Violation("ShapeMismatch", f"features must be 2-D, got ndim={d.features.ndim}"))
    else:
        if d.features.shape[0] != n:
            problems.append(
                Violation("ShapeMismatch", f"features has {d.features.shape[0]} rows, target has {n}")
            )
        if len(d.feature_names) != d.features.shape[1]:
            problems.append(
                Violation(
                    "ShapeMismatch",
                    f"{len(d.feature_names)} feature names for {d.features.shape[1]} columns",
                )
            )
    if d.sensitive.shape[0] != n:
        problems.append(Violation("ShapeMismatch", f"sensitive has {d.sensitive.shape[0]} rows, target has {n}"))

    binary_ok = {}
    for col, values in (("target", d.target), ("sensitive", d.sensitive)):
        bad = ~np.isin(values, (0, 1))
        binary_ok[col] = not bad.any()
        if bad.any():
            problems.append(
                Violation("NonBinaryColumn", f"{col} has {int(bad.sum())} entries outside {{0, 1}}")
            )

    for col, values in (("target", d.target), ("sensitive", d.sensitive)):
        if not binary_ok[col]:
            continue
        for level in (0, 1):
            if not np.any(values == level):
                problems.append(Violation("EmptyGroup", f"no rows with {col} == {level}"))

    if problems:
        raise InvalidDataset(problems)
    return d


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "train", _frozen(self.train, np.int64))
        object.__setattr__(self, "test", _frozen(self.test, np.int64))

    def __eq__(self, other):
        if not isinstance(other, SplitIndices):
            return NotImplemented
        return np.array_equal(self.train, other.train) and np.array_equal(self.test, other.test)

    __hash__ = None


def _allocate(sizes: np.ndarray, total: int) -> np.ndarray:
    # Largest-remainder apportionment of `total` train rows across strata,
    # keeping at least one row on each side of any stratum with >= 2 rows.
    quota = sizes * TRAIN_FRACTION
    alloc = np.floor(quota).astype(np.int64)
    frac = quota - alloc
    for i in np.argsort(-frac, kind="stable")[: total - int(alloc.sum())]:
        alloc[i] += 1
    lo = np.where(sizes >= 2, 1, sizes)
    hi = np.where(sizes >= 2, sizes - 1, sizes)
    alloc = np.clip(alloc, lo, hi)
    # Clamping may have moved the total; rebalance one row at a time. When
    # the per-stratum floor cannot be honoured (tiny data) the total wins.
    while alloc.sum() < total:
        slack = np.flatnonzero(alloc < hi)
        if slack.size == 0:
            slack = np.flatnonzero(alloc < sizes)
        i = slack[np.argmax(quota[slack] - alloc[slack])]
        alloc[i] += 1
    while alloc.sum() > total:
        slack = np.flatnonzero(alloc > lo)
        if slack.size == 0:
            slack = np.flatnonzero(alloc > 0)
        i = slack[np.argmin(quota[slack] - alloc[slack])]
        alloc[i] -= 1
    return alloc


def split_70_30(d: Dataset, seed: int) -> SplitIndices:
    """Stratified 70:30 train/test split.

    Strata are the four (target, sensitive) cells, so every cell with at least
    two rows shows up in both halves whenever the overall sizes allow it. The overall train size is
    ``floor(0.7 * n + 0.5)``; rows are drawn uniformly at random within each
    stratum. Both index arrays are returned sorted.
    """
    n = d.n_samples
    if n < 10:
        raise TooFewSamples(f"need at least 10 samples to split, got {n}")
    n_train = int(math.floor(TRAIN_FRACTION * n + 0.5))
    cell = d.target.astype(np.int64) * 2 + d.sensitive.astype(np.int64)
    strata = [np.flatnonzero(cell == c) for c in range(4)]
    sizes = np.array([len(s) for s in strata], dtype=np.int64)
    alloc = _allocate(sizes, n_train)

    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, 0x5A17]))
    train, test = [], []
    for rows, k in zip(strata, alloc):
        perm = rng.permutation(rows)
        train.append(perm[:k])
        test.append(perm[k:])
    return SplitIndices(np.sort(np.concatenate(train)), np.sort(np.concatenate(test)))


@dataclass(frozen=True, eq=False)
class ModelParams:
    theta: np.ndarray

    def __post_init__(self):
        theta = _frozen(self.theta, np.float64)
        if theta.ndim != 1 or theta.size < 1:
            raise ValueError("theta must be a non-empty 1-D vector")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta contains non-finite entries")
        object.__setattr__(self, "theta", theta)

    @property
    def weights(self) -> np.ndarray:
        return self.theta[:-1]

    @property
    def bias(self) -> float:
        return float(self.theta[-1])

    def __len__(self) -> int:
        return self.theta.size

    def __eq__(self, other):
        if not isinstance(other, ModelParams):
            return NotImplemented
        return np.array_equal(self.theta, other.theta)

    __hash__ = None


@dataclass(frozen=True)
class ObjectiveValues:
    """Balanced accuracy (maximised) and underestimation deviation (minimised)."""

    ba: float
    us_dev: float
    us_raw: float

    def __post_init__(self):
        if not 0.0 <= self.ba <= 1.0:
            raise ValueError(f"ba must lie in [0, 1], got {self.ba}")
        if not self.us_dev >= 0.0:
            raise ValueError(f"us_dev must be >= 0, got {self.us_dev}")

    def sort_key(self) -> tuple[float, float]:
        """Larger is better: ``(ba, -us_dev)``."""
        return (self.ba, -self.us_dev)


@dataclass(frozen=True, eq=False)
class Solution:
    params: ModelParams
    objectives: ObjectiveValues
    chain_id: int = 0
    step: int = 0

    @property
    def provenance(self) -> tuple[int, int]:
        return (self.chain_id, self.step)


@dataclass(frozen=True)
class AnnealConfig:
    t_ba: float = 0.2
    t_us: float = 1.0
    alpha: float = 0.95
    beta: float = 0.5
    lambda_ba: float = 1.0
    lambda_us: float = 1.0
    n_chains: int = 10
    iters_per_temp: int = 100
    t_min: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        errs = []
        if not (self.t_ba > 0 and self.t_us > 0):
            errs.append("temperatures must be > 0")
        if not 0 < self.alpha < 1:
            errs.append("alpha must lie in (0, 1)")
        if not self.beta >= 0:
            # beta == 0 is allowed: it freezes the chain, which is useful in tests.
            errs.append("beta must be >= 0")
        if self.lambda_ba < 0 or self.lambda_us < 0:
            errs.append("objective weights must be >= 0")
        if self.n_chains < 1 or self.iters_per_temp < 1:
            errs.append("n_chains and iters_per_temp must be >= 1")
        if not 0 < self.t_min < min(self.t_ba, self.t_us):
            errs.append("t_min must satisfy 0 < t_min < min(t_ba, t_us)")
        if not -(2**63) <= self.seed < 2**64:
            errs.append("seed must fit in 64 bits")
        if errs:
            raise ConfigError("invalid AnnealConfig: " + "; ".join(errs))
