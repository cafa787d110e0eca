"""Synthetic scenarios and Monte Carlo checks of coverage and length.

Every trial draws from its own RNG stream, keyed by ``(seed, trial)``, so
results do not depend on trial order.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Literal

import numpy as np

from .alloc import DiscreteDist, lower_bound_L
from .core_math import CoverageFnParams, coverage_fn, coverage_fn_integral
from .estimator import (
    GridPartition,
    Partition,
    conservative_stats,
    empirical_stats,
    fit_fixed_partition,
    predict_interval,
)
from .split import RegressorSpec, fit_split

MIN_TRIALS = 100
MIN_CHERNOFF_TRIALS = 500
SCENARIO_FORMAT = "dfbin-scenario"
REPORT_FORMAT = "dfbin-report"


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(trial))))


@dataclass(frozen=True)
class Scenario:
    """Uniform features on ``[0,1]^d`` with a known label probability.

    ``pi_kind`` and ``pi_params``:

    * ``constant``: ``{"value": v}``
    * ``piecewise``: ``{"bins": [b_1..b_d], "values": [...]}`` constant on the
      cells of an equal-width grid (C order, length ``prod(bins)``)
    * ``linear``: ``{"bias": b, "weights": [...]}``, ``b + w.x``; must stay
      inside [0, 1] on the cube
    * ``logistic``: ``{"bias": b, "weights": [...]}``, ``1 / (1 + exp(-(b + w.x)))``
    """

    dimension: int
    pi_kind: Literal["constant", "piecewise", "linear", "logistic"]
    pi_params: dict[str, Any]
    seed: int = 0

    def __post_init__(self):
        d = self.dimension
        if d < 1:
            raise ValueError("dimension must be >= 1")
        p = self.pi_params
        if self.pi_kind == "constant":
            if not 0.0 <= float(p["value"]) <= 1.0:
                raise ValueError("constant probability must lie in [0, 1]")
        elif self.pi_kind == "piecewise":
            bins = list(p["bins"])
            if len(bins) != d or any(int(b) < 1 for b in bins):
                raise ValueError("piecewise bins must give one positive count per axis")
            if len(p["values"]) != int(np.prod(bins)):
                raise ValueError("piecewise values must have prod(bins) entries")
            if any(not 0.0 <= float(v) <= 1.0 for v in p["values"]):
                raise ValueError("piecewise values must lie in [0, 1]")
        elif self.pi_kind in ("linear", "logistic"):
            if len(p["weights"]) != d:
                raise ValueError("weights must have one entry per axis")
            if self.pi_kind == "linear":
                w = np.asarray(p["weights"], dtype=float)
                lo = float(p["bias"]) + np.minimum(w, 0).sum()
                hi = float(p["bias"]) + np.maximum(w, 0).sum()
                if lo < 0.0 or hi > 1.0:
                    raise ValueError("linear probability leaves [0, 1] on the unit cube")
        else:
            raise ValueError(f"unknown probability kind {self.pi_kind!r}")

    @classmethod
    def constant(cls, value: float, dimension: int = 1, seed: int = 0) -> "Scenario":
        return cls(dimension, "constant", {"value": value}, seed)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Scenario":
        if d.get("px", "uniform") != "uniform":
            raise ValueError("only uniform feature distributions are supported")
        pi = d["pi"]
        return cls(int(d["dimension"]), pi["kind"], dict(pi.get("params", {})), int(d.get("seed", 0)))

    def to_dict(self) -> dict[str, Any]:
        return {"dimension": self.dimension, "px": "uniform", "pi": {"kind": self.pi_kind, "params": self.pi_params}, "seed": self.seed}

    @property
    def _piecewise(self) -> GridPartition:
        return GridPartition(self.pi_params["bins"])

    def pi(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        p = self.pi_params
        if self.pi_kind == "constant":
            return np.full(len(X), float(p["value"]))
        if self.pi_kind == "piecewise":
            return np.asarray(p["values"], dtype=np.float64)[self._piecewise.region_index(X)]
        z = float(p["bias"]) + X @ np.asarray(p["weights"], dtype=np.float64)
        if self.pi_kind == "linear":
            return np.clip(z, 0.0, 1.0)
        return 1.0 / (1.0 + np.exp(-z))

    def sample(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Draw ``n`` points; returns features, labels and true probabilities."""
        X = rng.random((n, self.dimension))
        prob = self.pi(X)
        y = (rng.random(n) < prob).astype(np.int64)
        return X, y, prob

    def pi_distribution(self, resolution: int = 10_000) -> DiscreteDist:
        """Distribution of ``pi_P(X)``; exact for constant/piecewise, quantile atoms otherwise."""
        p = self.pi_params
        if self.pi_kind == "constant":
            return DiscreteDist.point_mass(float(p["value"]))
        if self.pi_kind == "piecewise":
            vol = 1.0 / len(p["values"])
            merged: dict[float, float] = {}
            for v in p["values"]:
                merged[float(v)] = merged.get(float(v), 0.0) + vol
            atoms = sorted(merged)
            return DiscreteDist(atoms, [merged[a] for a in atoms])
        levels = (np.arange(resolution) + 0.5) / resolution
        if self.dimension == 1:
            values = np.sort(self.pi(levels[:, None]))
        else:
            sample = self.pi(trial_rng(self.seed, 0, stream=7).random((20 * resolution, self.dimension)))
            values = np.quantile(sample, levels)
        return DiscreteDist(values, np.full(resolution, 1.0 / resolution), tol=1e-6)

    def region_truth(self, partition: Partition) -> tuple[np.ndarray, np.ndarray]:
        """Exact region masses ``p_{P,m}`` and mean probabilities ``pi_{P,m}`` on a grid partition."""
        if not isinstance(partition, GridPartition) or partition.dimension != self.dimension:
            raise ValueError("exact region truth needs a grid partition of matching dimension")
        if self.pi_kind == "logistic":
            raise ValueError("no closed form for logistic region means")
        M = partition.n_regions
        mass = np.zeros(M)
        mean = np.full(M, 0.5)
        total = np.zeros(M)
        for m, cell in enumerate(_grid_cells(partition)):
            vol = _box_volume(cell)
            mass[m] = vol
            if vol == 0.0:
                continue
            total[m] = self._box_integral(cell)
            mean[m] = total[m] / vol
        return mass, mean

    def _box_integral(self, box) -> float:
        p = self.pi_params
        vol = _box_volume(box)
        if self.pi_kind == "constant":
            return float(p["value"]) * vol
        if self.pi_kind == "linear":
            centre = np.array([(lo + hi) / 2.0 for lo, hi in box])
            return (float(p["bias"]) + float(centre @ np.asarray(p["weights"], dtype=float))) * vol
        acc = 0.0
        for c, cell in enumerate(_grid_cells(self._piecewise)):
            inter = [(max(a0, b0), min(a1, b1)) for (a0, a1), (b0, b1) in zip(box, cell)]
            acc += float(p["values"][c]) * _box_volume(inter)
        return acc


def _grid_cells(partition: GridPartition):
    # boxes in C order, clipped to the unit cube (the boundary cells extend to infinity)
    per_axis = []
    for j in range(partition.dimension):
        e = partition.edges(j).copy()
        e[0], e[-1] = -math.inf, math.inf
        per_axis.append([(max(e[i], 0.0), min(e[i + 1], 1.0)) for i in range(len(e) - 1)])
    return [list(c) for c in itertools.product(*per_axis)]


def _box_volume(box) -> float:
    return math.prod(max(hi - lo, 0.0) for lo, hi in box)


@dataclass(frozen=True)
class FixedMethod:
    partition: Partition
    name: str = "fixed"

    def fit(self, X, y, alpha):
        return fit_fixed_partition(X, y, self.partition, alpha)

    def describe(self) -> dict[str, Any]:
        return {"method": "fixed", "partition": self.partition.to_dict()}


@dataclass(frozen=True)
class SplitMethod:
    spec: RegressorSpec = field(default_factory=RegressorSpec)
    name: str = "split"

    def fit(self, X, y, alpha):
        return fit_split(X, y, alpha, self.spec)

    def describe(self) -> dict[str, Any]:
        return {"method": "split", "regressor": asdict(self.spec)}


@dataclass
class CoverageReport:
    trials: int
    pi_coverage: float
    y_coverage: float
    mean_length: float
    se_length: float
    lower_bound: float
    alpha: float
    n: int
    mean_regions: float
    covered_pi: np.ndarray = field(repr=False, default=None)
    covered_y: np.ndarray = field(repr=False, default=None)
    lengths: np.ndarray = field(repr=False, default=None)

    @property
    def coverage_margin(self) -> float:
        """Three binomial standard errors at the nominal level."""
        return 3.0 * math.sqrt(self.alpha * (1.0 - self.alpha) / self.trials)

    def summary(self) -> dict[str, Any]:
        return {
            "trials": self.trials,
            "pi_coverage": self.pi_coverage,
            "y_coverage": self.y_coverage,
            "mean_length": self.mean_length,
            "se_length": self.se_length,
            "lower_bound": self.lower_bound,
            "alpha": self.alpha,
            "n": self.n,
            "mean_regions": self.mean_regions,
        }

    def per_trial_csv(self) -> str:
        lines = ["trial,covered_pi,covered_y,length"]
        for i, (cp, cy, ln) in enumerate(zip(self.covered_pi, self.covered_y, self.lengths)):
            lines.append(f"{i},{int(cp)},{int(cy)},{float(ln)!r}")
        return "\n".join(lines) + "\n"


def run_coverage_experiment(
    scenario: Scenario,
    method,
    n: int,
    alpha: float,
    trials: int,
    *,
    seed: int | None = None,
    resolution: int = 10_000,
) -> CoverageReport:
    """Fit on ``n`` fresh points per trial and test the interval at one more point."""
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if n < 3:
        raise ValueError("need n >= 3")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    seed = scenario.seed if seed is None else seed
    covered_pi = np.zeros(trials, dtype=bool)
    covered_y = np.zeros(trials, dtype=bool)
    lengths = np.zeros(trials)
    regions = np.zeros(trials)
    for i in range(trials):
        rng = trial_rng(seed, i)
        X, y, prob = scenario.sample(rng, n + 1)
        model = method.fit(X[:n], y[:n], alpha)
        u = rng.random()
        interval = predict_interval(model, X[n], u)
        covered_pi[i] = interval.contains(float(prob[n]))
        covered_y[i] = interval.contains(float(y[n]))
        lengths[i] = interval.length
        regions[i] = model.M
    mean_length = math.fsum(lengths) / trials
    se = float(np.std(lengths, ddof=1)) / math.sqrt(trials)
    return CoverageReport(
        trials=trials,
        pi_coverage=float(covered_pi.mean()),
        y_coverage=float(covered_y.mean()),
        mean_length=mean_length,
        se_length=se,
        lower_bound=lower_bound_L(scenario.pi_distribution(resolution), alpha),
        alpha=alpha,
        n=n,
        mean_regions=float(regions.mean()),
        covered_pi=covered_pi,
        covered_y=covered_y,
        lengths=lengths,
    )


def blur(scenario: Scenario, partition: Partition, samples: int = 100_000, *, seed: int | None = None) -> float:
    """Mean absolute deviation of ``pi_P(X)`` from its region mean.

    Exact for constant and piecewise-constant probabilities on grid
    partitions; Monte Carlo with sample-average region means otherwise.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    exact_ok = isinstance(partition, GridPartition) and scenario.pi_kind in ("constant", "piecewise")
    if exact_ok:
        if scenario.pi_kind == "constant":
            return 0.0
        _, means = scenario.region_truth(partition)
        p = scenario.pi_params
        cells = _grid_cells(scenario._piecewise)
        acc = 0.0
        for m, box in enumerate(_grid_cells(partition)):
            for c, cell in enumerate(cells):
                inter = [(max(a0, b0), min(a1, b1)) for (a0, a1), (b0, b1) in zip(box, cell)]
                acc += _box_volume(inter) * abs(float(p["values"][c]) - means[m])
        return acc
    rng = trial_rng(scenario.seed if seed is None else seed, 0, stream=11)
    X = rng.random((samples, scenario.dimension))
    prob = scenario.pi(X)
    idx = partition.region_index(X)
    M = partition.n_regions
    counts = np.bincount(idx, minlength=M)
    sums = np.bincount(idx, weights=prob, minlength=M)
    means = np.divide(sums, counts, out=np.zeros(M), where=counts > 0)
    return float(np.mean(np.abs(prob - means[idx])))


@dataclass(frozen=True)
class AdversaryMixture:
    """``p * delta_0 + (1-p) * Unif[0, c]`` (side 0) or ``p * delta_1 + (1-p) * Unif[c, 1]`` (side 1)."""

    side: Literal[0, 1]
    p: float
    c: float

    @property
    def mean(self) -> float:
        if self.side == 0:
            return (1.0 - self.p) * self.c / 2.0
        return self.p + (1.0 - self.p) * (1.0 + self.c) / 2.0

    def expect(self, params: CoverageFnParams) -> float:
        """Exact ``E_Q[f_{t,a}(Z)]``."""
        if self.side == 0:
            atom, lo, hi = 0.0, 0.0, self.c
        else:
            atom, lo, hi = 1.0, self.c, 1.0
        point = coverage_fn(params, atom)
        if hi > lo:
            uniform = coverage_fn_integral(params, lo, hi) / (hi - lo)
        else:
            uniform = coverage_fn(params, lo)
        return self.p * point + (1.0 - self.p) * uniform


def adversary_family(t: float, grid: int) -> list[AdversaryMixture]:
    """Members of the mixture family with mean exactly ``t``, one per grid value of ``c``."""
    out = []
    for j in range(grid + 1):
        c = j / grid
        # side 0: (1-p) c / 2 = t
        if t == 0.0:
            out.append(AdversaryMixture(0, 1.0, c))
        elif c > 0.0 and 2.0 * t <= c:
            out.append(AdversaryMixture(0, 1.0 - 2.0 * t / c, c))
        # side 1: (1-p)(1-c)/2 = 1-t
        if t == 1.0:
            out.append(AdversaryMixture(1, 1.0, c))
        elif c < 1.0 and 2.0 * (1.0 - t) <= 1.0 - c:
            out.append(AdversaryMixture(1, 1.0 - 2.0 * (1.0 - t) / (1.0 - c), c))
    return out


def adversary_min_expectation(t: float, a: float, grid: int = 1000) -> float:
    """Smallest ``E_Q[f_{t,a}(Z)]`` over the discretised mean-``t`` mixture family."""
    if grid < 100:
        raise ValueError("grid must be >= 100")
    params = CoverageFnParams(t, a)
    return min(q.expect(params) for q in adversary_family(t, grid))


def chernoff_events(p_tilde, pi_tilde, p_true, pi_true, n: int, M: int, alpha: float) -> bool:
    """Whether the concentration events for region masses and label rates hold in every region."""
    L = math.log(4.0 * M * n / alpha)
    for m in range(M):
        pt, pm = p_tilde[m], p_true[m]
        if not pm <= pt * (1.0 - 1.0 / n):
            return False
        if not pt <= pm + math.sqrt(pm * 18.0 * L / n) + 12.0 * L / n:
            return False
        if pm == 0.0:
            continue  # the label-rate bound is vacuous for a null region
        qt, qm = pi_tilde[m], pi_true[m]
        bound = math.sqrt(min(qm, 1.0 - qm) * 18.0 * L / (n * pm)) + 12.0 * L / (n * pm)
        if not abs(qt - qm) <= bound:
            return False
        if not ((0.0 <= qm <= qt <= 0.5) or (0.5 <= qt <= qm <= 1.0)):
            return False
    return True


def chernoff_event_rate(scenario: Scenario, partition: GridPartition, n: int, alpha: float, trials: int, *, seed: int | None = None) -> float:
    """Fraction of trials in which the concentration events hold for all regions."""
    if trials < MIN_CHERNOFF_TRIALS:
        raise ValueError(f"need at least {MIN_CHERNOFF_TRIALS} trials")
    p_true, pi_true = scenario.region_truth(partition)
    M = partition.n_regions
    seed = scenario.seed if seed is None else seed
    hits = 0
    for i in range(trials):
        X, y, _ = scenario.sample(trial_rng(seed, i, stream=3), n)
        p_hat, pi_hat = empirical_stats(X, y, partition)
        p_tilde, pi_tilde = conservative_stats(p_hat, pi_hat, n, M, alpha)
        hits += chernoff_events(p_tilde, pi_tilde, p_true, pi_true, n, M, alpha)
    return hits / trials


def report_document(report: CoverageReport, config: dict[str, Any]) -> str:
    doc = {"format": REPORT_FORMAT, "version": 1, "report": report.summary(), "config": config}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"
