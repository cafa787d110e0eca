"""Sample-splitting pipeline with a data-dependent partition.

The first ``floor(n/2)`` points train a regressor for ``P(Y=1 | X=x)``; the
regressor's output is cut into ``M = ceil(sqrt(n / log n))`` equal bins,
and the remaining ``ceil(n/2)`` points fit the fixed-partition model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np

from . import kernels
from .estimator import DFModel, _bin_index, _check_labels, fit_fixed_partition, register_partition


def n_bins_for(n: int) -> int:
    """Number of probability bins, ``ceil(sqrt(n / ln n))``."""
    if n < 2:
        raise ValueError("need n >= 2")
    return math.ceil(math.sqrt(n / math.log(n)))


def default_knn_k(n_train: int, d: int) -> int:
    return min(n_train, max(1, math.ceil(n_train ** (2.0 / (2.0 + d)))))


def default_hist_bins(n_train: int, d: int) -> int:
    return max(1, math.ceil(n_train ** (1.0 / (2.0 + d))))


@dataclass(frozen=True)
class RegressorSpec:
    """Which regressor to train on the first half; ``None`` selects the default size."""

    kind: Literal["knn", "histogram"] = "knn"
    k: int | None = None
    bins: int | None = None

    def __post_init__(self):
        if self.kind not in ("knn", "histogram"):
            raise ValueError(f"unknown regressor kind {self.kind!r}")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.bins is not None and self.bins < 1:
            raise ValueError("bins must be >= 1")

    def fit(self, X, y):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.kind == "knn":
            k = self.k if self.k is not None else default_knn_k(len(X), X.shape[1])
            return KNNRegressor.fit(X, y, k)
        bins = self.bins if self.bins is not None else default_hist_bins(len(X), X.shape[1])
        return HistogramRegressor.fit(X, y, bins)


class KNNRegressor:
    """Mean label of the k nearest training points (Euclidean; ties to the lower index)."""

    kind = "knn"

    def __init__(self, train_x: np.ndarray, train_y: np.ndarray, k: int):
        self.train_x = np.ascontiguousarray(train_x, dtype=np.float64)
        self.train_y = np.asarray(train_y, dtype=np.int64)
        self.k = int(k)

    @classmethod
    def fit(cls, X, y, k: int) -> "KNNRegressor":
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = _check_labels(y)
        if len(y) == 0:
            raise ValueError("empty training set")
        if len(X) != len(y):
            raise ValueError("features and labels differ in length")
        if not 1 <= k <= len(y):
            raise ValueError(f"k={k} must lie in [1, {len(y)}]")
        return cls(X, y, k)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return kernels.knn_mean(self.train_x, self.train_y, X, self.k)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "k": self.k, "train_x": self.train_x.tolist(), "train_y": self.train_y.tolist()}

    @classmethod
    def from_dict(cls, d) -> "KNNRegressor":
        return cls(np.asarray(d["train_x"], dtype=np.float64).reshape(len(d["train_y"]), -1), np.asarray(d["train_y"]), d["k"])


class HistogramRegressor:
    """Cell-average label on an axis-aligned grid spanning the training box.

    Empty cells predict 1/2.
    """

    kind = "histogram"

    def __init__(self, bins: int, lo, hi, cell_means):
        self.bins = int(bins)
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        self.cell_means = np.asarray(cell_means, dtype=np.float64)

    @classmethod
    def fit(cls, X, y, bins: int) -> "HistogramRegressor":
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = _check_labels(y)
        if len(y) == 0:
            raise ValueError("empty training set")
        lo, hi = X.min(axis=0), X.max(axis=0)
        hi = np.where(hi > lo, hi, lo + 1.0)
        model = cls(bins, lo, hi, np.zeros(bins ** X.shape[1]))
        idx = model._cells(X)
        counts = np.bincount(idx, minlength=len(model.cell_means))
        ones = np.bincount(idx, weights=y, minlength=len(model.cell_means))
        means = np.full(len(counts), 0.5)
        means[counts > 0] = ones[counts > 0] / counts[counts > 0]
        model.cell_means = means
        return model

    def _cells(self, X) -> np.ndarray:
        d = len(self.lo)
        per_axis = []
        for j in range(d):
            edges = self.lo[j] + (self.hi[j] - self.lo[j]) * (np.arange(self.bins + 1) / self.bins)
            edges[-1] = self.hi[j]
            per_axis.append(_bin_index(X[:, j], edges))
        return np.ravel_multi_index(per_axis, (self.bins,) * d)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return self.cell_means[self._cells(X)]

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "bins": self.bins, "lo": self.lo.tolist(), "hi": self.hi.tolist(), "cell_means": self.cell_means.tolist()}

    @classmethod
    def from_dict(cls, d) -> "HistogramRegressor":
        return cls(d["bins"], d["lo"], d["hi"], d["cell_means"])


_REGRESSORS = {"knn": KNNRegressor, "histogram": HistogramRegressor}


class ProbBinPartition:
    """Regions ``{x : (m-1)/M <= pi_hat(x) < m/M}``, the last bin closed at 1."""

    kind = "prob_bins"

    def __init__(self, regressor, M: int):
        if M < 1:
            raise ValueError("M must be >= 1")
        self.regressor = regressor
        self.n_regions = int(M)
        self.edges = np.arange(M + 1) / M

    def region_of_probability(self, prob) -> np.ndarray:
        return _bin_index(np.asarray(prob, dtype=np.float64), self.edges)

    def region_index(self, X) -> np.ndarray:
        return self.region_of_probability(self.regressor.predict(X))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "M": self.n_regions, "regressor": self.regressor.to_dict()}

    @classmethod
    def from_dict(cls, d) -> "ProbBinPartition":
        reg = d["regressor"]
        return cls(_REGRESSORS[reg["kind"]].from_dict(reg), d["M"])


register_partition(ProbBinPartition.kind, ProbBinPartition)


def build_prob_partition(regressor, M: int) -> ProbBinPartition:
    return ProbBinPartition(regressor, M)


def fit_split(X, y, alpha: float, spec: RegressorSpec | None = None) -> DFModel:
    """Train on the first half in the given order, estimate on the second half."""
    spec = spec or RegressorSpec()
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = _check_labels(y)
    n = len(y)
    if n < 3:
        raise ValueError("sample splitting needs n >= 3")
    if len(X) != n:
        raise ValueError("features and labels differ in length")
    half = n // 2
    regressor = spec.fit(X[:half], y[:half])
    partition = build_prob_partition(regressor, n_bins_for(n))
    return fit_fixed_partition(X[half:], y[half:], partition, alpha, method="split", n_total=n)
