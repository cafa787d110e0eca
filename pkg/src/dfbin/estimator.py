"""Region statistics on a fixed partition and the fitted interval predictor.

Region indices are 0-based throughout the code (region ``m`` of the
mathematical description is index ``m - 1`` here).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence

import numpy as np

from .alloc import BUDGET_TOL, allocate
from .core_math import CoverageFnParams, UnitInterval, sample_interval

MODEL_FORMAT = "dfbin-model"
MODEL_VERSION = 1


class Partition(Protocol):
    n_regions: int

    def region_index(self, X: np.ndarray) -> np.ndarray: ...

    def to_dict(self) -> dict[str, Any]: ...


def _bin_index(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    # left-closed bins; values beyond the outer edges fall in the end bins
    idx = np.searchsorted(edges, values, side="right") - 1
    return np.clip(idx, 0, len(edges) - 2)


class GridPartition:
    """Axis-aligned grid of ``bins[j]`` equal cells per axis over ``[lo, hi]``.

    Points outside the box are assigned to the nearest boundary cell, so the
    partition covers all of R^d.
    """

    kind = "grid"

    def __init__(self, bins: Sequence[int], lo: Sequence[float] | None = None, hi: Sequence[float] | None = None):
        self.bins = tuple(int(b) for b in bins)
        if not self.bins or any(b < 1 for b in self.bins):
            raise ValueError("bins must be positive integers")
        d = len(self.bins)
        self.lo = tuple(float(x) for x in (lo if lo is not None else [0.0] * d))
        self.hi = tuple(float(x) for x in (hi if hi is not None else [1.0] * d))
        if len(self.lo) != d or len(self.hi) != d or any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError("lo/hi must match the dimension and satisfy lo < hi")
        self.n_regions = int(np.prod(self.bins))

    @property
    def dimension(self) -> int:
        return len(self.bins)

    def edges(self, axis: int) -> np.ndarray:
        b = self.bins[axis]
        lo, hi = self.lo[axis], self.hi[axis]
        e = lo + (hi - lo) * (np.arange(b + 1) / b)
        e[-1] = hi
        return e

    def region_index(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dimension:
            raise ValueError(f"expected {self.dimension} features, got {X.shape[1]}")
        per_axis = [_bin_index(X[:, j], self.edges(j)) for j in range(self.dimension)]
        return np.ravel_multi_index(per_axis, self.bins)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "bins": list(self.bins), "lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GridPartition":
        return cls(d["bins"], d["lo"], d["hi"])


_PARTITIONS: dict[str, Any] = {"grid": GridPartition}


def register_partition(kind: str, cls) -> None:
    _PARTITIONS[kind] = cls


def partition_from_dict(d: dict[str, Any]) -> Partition:
    try:
        cls = _PARTITIONS[d["kind"]]
    except KeyError:
        raise ValueError(f"unknown partition kind {d.get('kind')!r}") from None
    return cls.from_dict(d)


@dataclass(frozen=True)
class RegionStats:
    p_hat: float
    pi_hat: float
    p_tilde: float
    pi_tilde: float
    a_tilde: float


@dataclass(frozen=True)
class DFModel:
    """Fitted distribution-free interval predictor.

    ``n`` is the total sample size; ``n_estimation`` is the number of points
    that fed the region statistics (``ceil(n/2)`` after sample splitting).
    """

    partition: Partition
    stats: tuple[RegionStats, ...]
    alpha: float
    n: int
    n_estimation: int
    method: str = "fixed"
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def M(self) -> int:
        return len(self.stats)

    def region_params(self, m: int) -> CoverageFnParams:
        s = self.stats[m]
        return CoverageFnParams(s.pi_tilde, s.a_tilde)

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "method": self.method,
            "alpha": self.alpha,
            "n": self.n,
            "n_estimation": self.n_estimation,
            "M": self.M,
            "partition": self.partition.to_dict(),
            "regions": [
                {"p_hat": s.p_hat, "pi_hat": s.pi_hat, "p_tilde": s.p_tilde, "pi_tilde": s.pi_tilde, "a_tilde": s.a_tilde}
                for s in self.stats
            ],
            "extras": self.extras,
        }

    def to_json(self) -> str:
        # repr-based float output is the shortest string that round-trips exactly
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DFModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError("not a dfbin model document")
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        partition = partition_from_dict(d["partition"])
        stats = tuple(RegionStats(**{k: float(r[k]) for k in ("p_hat", "pi_hat", "p_tilde", "pi_tilde", "a_tilde")}) for r in d["regions"])
        if len(stats) != partition.n_regions or len(stats) != d["M"]:
            raise ValueError("region count does not match the partition")
        return cls(
            partition=partition,
            stats=stats,
            alpha=float(d["alpha"]),
            n=int(d["n"]),
            n_estimation=int(d["n_estimation"]),
            method=d.get("method", "fixed"),
            extras=d.get("extras", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "DFModel":
        return cls.from_dict(json.loads(text))


def _check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return y.astype(np.int64)


def empirical_stats(X, y, partition: Partition) -> tuple[np.ndarray, np.ndarray]:
    """Region frequencies ``p_hat`` and label rates ``pi_hat`` (1/2 for empty regions)."""
    y = _check_labels(y)
    if len(y) == 0:
        raise ValueError("data must be nonempty")
    idx = partition.region_index(X)
    if len(idx) != len(y):
        raise ValueError("features and labels differ in length")
    M = partition.n_regions
    counts = np.bincount(idx, minlength=M).astype(np.float64)
    ones = np.bincount(idx, weights=y, minlength=M)
    n = len(y)
    p_hat = counts / n
    pi_hat = np.full(M, 0.5)
    nz = counts > 0
    pi_hat[nz] = ones[nz] / (n * p_hat[nz])
    return p_hat, pi_hat


def conservative_stats(p_hat, pi_hat, n: int, M: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Inflate region probabilities and pull label rates toward 1/2.

    Uses ``L = log(4 M n / alpha)`` (natural log)::

        p_tilde  = p_hat + sqrt(p_hat * 3L/n) + 3L/n
        pi_tilde = min(1/2, pi_hat + sqrt(pi_hat * 2L/(n p_hat)) + 2L/(n p_hat))          if pi_hat <= 1/2
                   max(1/2, pi_hat - sqrt((1 - pi_hat) * 2L/(n p_hat)) - 2L/(n p_hat))    otherwise

    ``pi_tilde`` is 1/2 for regions with ``p_hat = 0``.
    """
    if n < 2 or M < 1 or not 0.0 < alpha < 1.0:
        raise ValueError("need n >= 2, M >= 1 and alpha in (0, 1)")
    p_hat = np.asarray(p_hat, dtype=np.float64)
    pi_hat = np.asarray(pi_hat, dtype=np.float64)
    log_term = math.log(4.0 * M * n / alpha)
    c = 3.0 * log_term / n
    p_tilde = p_hat + np.sqrt(p_hat * c) + c
    pi_tilde = np.full(len(p_hat), 0.5)
    for m in range(len(p_hat)):
        if p_hat[m] == 0.0:
            continue
        denom = n * float(p_hat[m])
        if 2.0 * log_term >= 0.5 * denom:
            continue  # the pull alone exceeds the distance to 1/2 (also avoids overflow)
        r = 2.0 * log_term / denom
        ph = float(pi_hat[m])
        if ph <= 0.5:
            pi_tilde[m] = min(0.5, ph + math.sqrt(ph * r) + r)
        else:
            pi_tilde[m] = max(0.5, ph - math.sqrt((1.0 - ph) * r) - r)
    return p_tilde, pi_tilde


def fit_fixed_partition(X, y, partition: Partition, alpha: float, *, method: str = "fixed", n_total: int | None = None) -> DFModel:
    """Fit the interval predictor on a partition chosen independently of ``(X, y)``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    y = _check_labels(y)
    n = len(y)
    if n < 2:
        raise ValueError("need at least 2 data points")
    M = partition.n_regions
    p_hat, pi_hat = empirical_stats(X, y, partition)
    p_tilde, pi_tilde = conservative_stats(p_hat, pi_hat, n, M, alpha)
    alloc = allocate(pi_tilde, p_tilde, alpha)
    stats = tuple(
        RegionStats(float(p_hat[m]), float(pi_hat[m]), float(p_tilde[m]), float(pi_tilde[m]), alloc.a[m]) for m in range(M)
    )
    used = math.fsum(s.p_tilde * s.a_tilde for s in stats)
    if used > alpha + BUDGET_TOL:
        raise AssertionError(f"allocation overspends the budget: {used!r} > {alpha!r}")
    return DFModel(partition, stats, float(alpha), n_total if n_total is not None else n, n, method)


def predict_interval(model: DFModel, x, u: float) -> UnitInterval:
    """Interval for a single feature vector ``x`` given the uniform draw ``u``."""
    m = int(model.partition.region_index(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0])
    return sample_interval(model.region_params(m), u)
