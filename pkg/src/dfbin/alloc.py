"""Separable convex budget allocation and the lower-bound map.

Solves::

    minimize    sum_m w_m * ell(t_m, a_m)
    subject to  sum_m w_m * a_m <= alpha,   0 <= a_m <= 1.

With ``tau = min(t, 1 - t)`` the per-coordinate slope of ``ell`` in ``a`` is
``-1/(2 tau)`` on ``[0, tau)``, ``-tau/(2 a^2)`` on ``[tau, 1/2]`` and
``-2 tau`` on ``(1/2, 1]``.  For a dual price ``lam`` the minimiser of
``ell(t, a) + lam * a`` is therefore 0 above ``1/(2 tau)``,
``sqrt(tau / (2 lam))`` between ``2 tau`` and ``1/(2 tau)``, and 1 below
``2 tau``.  The budget used as a function of ``lam`` is ``C + S / sqrt(lam)``
between consecutive breakpoints, so the multiplier is found by a sweep over
the sorted breakpoints followed by a closed-form solve; flat segments at a
breakpoint are filled fractionally in index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core_math import ell

WEIGHT_SUM_TOL = 1e-9
BUDGET_TOL = 1e-9


@dataclass(frozen=True)
class DiscreteDist:
    """Finite distribution on [0, 1]."""

    atoms: tuple[float, ...]
    weights: tuple[float, ...]

    def __init__(self, atoms, weights, *, tol: float = WEIGHT_SUM_TOL):
        atoms = tuple(float(x) for x in atoms)
        weights = tuple(float(w) for w in weights)
        if len(atoms) == 0 or len(atoms) != len(weights):
            raise ValueError("atoms and weights must be nonempty and of equal length")
        if any(not 0.0 <= x <= 1.0 for x in atoms):
            raise ValueError("atoms must lie in [0, 1]")
        if any(not w >= 0.0 for w in weights):
            raise ValueError("weights must be nonnegative")
        if abs(math.fsum(weights) - 1.0) > tol:
            raise ValueError(f"weights sum to {math.fsum(weights)!r}, expected 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point_mass(cls, t: float) -> "DiscreteDist":
        return cls([t], [1.0])

    @property
    def mean(self) -> float:
        return math.fsum(x * w for x, w in zip(self.atoms, self.weights))


@dataclass(frozen=True)
class Allocation:
    a: tuple[float, ...]
    dual: float
    objective: float
    budget_used: float


def inner_argmin(t: float, dual: float) -> float:
    """Smallest minimiser of ``ell(t, a) + dual * a`` over ``a in [0, 1]``."""
    tau = min(t, 1.0 - t)
    if tau == 0.0:
        return 0.0
    if dual >= 1.0 / (2.0 * tau):
        return 0.0
    if dual < 2.0 * tau:
        return 1.0
    return min(max(math.sqrt(tau / (2.0 * dual)), tau), 0.5)


def _objective(targets, weights, a) -> float:
    return math.fsum(w * ell(t, x) for t, w, x in zip(targets, weights, a))


def _finish(targets, weights, a, dual) -> Allocation:
    a = tuple(float(x) for x in a)
    used = math.fsum(w * x for w, x in zip(weights, a))
    return Allocation(a=a, dual=float(dual), objective=_objective(targets, weights, a), budget_used=used)


def allocate(targets, weights, alpha: float) -> Allocation:
    """Solve the allocation program for arbitrary nonnegative weights.

    The weights need not sum to one (the finite-sample estimator uses
    inflated region probabilities).
    """
    targets = [float(t) for t in targets]
    weights = [float(w) for w in weights]
    if len(targets) != len(weights) or not targets:
        raise ValueError("targets and weights must be nonempty and of equal length")
    if any(not 0.0 <= t <= 1.0 for t in targets):
        raise ValueError("targets must lie in [0, 1]")
    if any(not w >= 0.0 or math.isinf(w) for w in weights):
        raise ValueError("weights must be finite and nonnegative")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")

    m = len(targets)
    tau = [min(t, 1.0 - t) for t in targets]
    a = [0.0] * m
    # zero-length atoms gain nothing from budget; zero-weight atoms cost nothing
    active = [i for i in range(m) if tau[i] > 0.0 and weights[i] > 0.0]
    if not active:
        return _finish(targets, weights, a, 0.0)
    if alpha == 0.0:
        return _finish(targets, weights, a, max(1.0 / (2.0 * tau[i]) for i in active))

    total = math.fsum(weights[i] for i in active)
    if total <= alpha:
        for i in active:
            a[i] = 1.0
        dual = 0.0
    else:
        dual = _sweep(tau, weights, active, alpha, a)
    for i in range(m):
        if weights[i] == 0.0 and tau[i] > 0.0:
            a[i] = inner_argmin(targets[i], dual)
    return _finish(targets, weights, a, dual)


class _ExactSum:
    """Running sum without cancellation error (Shewchuk partials).

    Coordinates enter and leave the sqrt branch with scales that can differ
    by hundreds of orders of magnitude, so a plain float accumulator loses
    the small ones.
    """

    def __init__(self):
        self.partials: list[float] = []

    def add(self, x: float) -> None:
        out = []
        for y in self.partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                out.append(lo)
            x = hi
        out.append(x)
        self.partials = out

    def value(self) -> float:
        return math.fsum(self.partials)


def _sweep(tau, weights, active, alpha, a) -> float:
    # Events, by decreasing dual: "enter" at 1/(2 tau) (a leaves 0 for the
    # sqrt branch, starting at tau) and "exit" at 2 tau (a jumps 1/2 -> 1).
    events = []
    for i in active:
        events.append((1.0 / (2.0 * tau[i]), 0, i))
        events.append((2.0 * tau[i], 1, i))
    events.sort(key=lambda e: (-e[0], e[1], e[2]))

    state = {i: "zero" for i in active}
    fixed = 0.0  # budget used by coordinates pinned at 1
    acc = _ExactSum()  # sum of w * sqrt(tau / 2) over sqrt-branch coordinates
    k = 0
    while k < len(events):
        lam = events[k][0]
        group = []
        while k < len(events) and events[k][0] == lam:
            group.append(events[k])
            k += 1
        root = math.sqrt(lam)
        scale = acc.value()
        used_small = fixed + scale / root
        if alpha <= used_small:
            # the multiplier lies strictly above this breakpoint
            ratio = scale / (alpha - fixed)
            lam_star = ratio * ratio
            _assign_interior(tau, weights, active, state, lam_star, alpha, a)
            return lam_star

        # smallest and largest minimisers at lam for coordinates changing here
        low = {}
        high = {}
        for _, kind, i in group:
            if kind == 0:
                low[i] = 0.0
                high[i] = tau[i]
                acc.add(weights[i] * math.sqrt(tau[i] / 2.0))
                state[i] = "sqrt"
            else:
                low.setdefault(i, 0.5)
                high[i] = 1.0
                acc.add(-weights[i] * math.sqrt(tau[i] / 2.0))
                fixed += weights[i]
                state[i] = "one"
        used_large = fixed + acc.value() / root
        if alpha <= used_large:
            _assign_breakpoint(tau, weights, active, state, lam, low, high, alpha, a)
            return lam
    # alpha is within rounding of the total weight: everything at 1
    for i in active:
        a[i] = 1.0
    _absorb_residual(weights, active, [], alpha, a)
    return events[-1][0]


def _assign_interior(tau, weights, active, state, lam, alpha, a):
    sqrt_idx = []
    for i in active:
        if state[i] == "one":
            a[i] = 1.0
        elif state[i] == "sqrt":
            a[i] = min(max(math.sqrt(tau[i] / (2.0 * lam)), tau[i]), 0.5)
            sqrt_idx.append(i)
    _absorb_residual(weights, active, sqrt_idx, alpha, a)


def _assign_breakpoint(tau, weights, active, state, lam, low, high, alpha, a):
    for i in active:
        if i in low:
            a[i] = low[i]
        elif state[i] == "one":
            a[i] = 1.0
        elif state[i] == "sqrt":
            a[i] = min(max(math.sqrt(tau[i] / (2.0 * lam)), tau[i]), 0.5)
    residual = alpha - math.fsum(weights[i] * a[i] for i in active)
    for i in sorted(low):
        if residual <= 0.0:
            break
        extra = min(residual / weights[i], high[i] - low[i])
        a[i] = low[i] + extra
        residual = alpha - math.fsum(weights[j] * a[j] for j in active)
    sqrt_idx = [i for i in active if state[i] == "sqrt" and i not in low]
    _absorb_residual(weights, active, sqrt_idx + sorted(low), alpha, a)


def _absorb_residual(weights, active, candidates, alpha, a):
    # Rounding leaves |residual| ~ 1e-16; push it into one free coordinate so
    # the budget binds to machine precision.
    residual = alpha - math.fsum(weights[i] * a[i] for i in active)
    for i in candidates[:4]:
        if residual == 0.0:
            return
        a[i] = min(max(a[i] + residual / weights[i], 0.0), 1.0)
        residual = alpha - math.fsum(weights[j] * a[j] for j in active)
    if residual < 0.0:
        # never overspend: shrink the largest-weight coordinate
        i = max(active, key=lambda j: weights[j] * a[j])
        a[i] = max(0.0, a[i] + residual / weights[i])


def solve_allocation(dist: DiscreteDist, alpha: float) -> Allocation:
    """Optimal allocation for a validated distribution (weights sum to one)."""
    if not isinstance(dist, DiscreteDist):
        raise TypeError("dist must be a DiscreteDist")
    return allocate(dist.atoms, dist.weights, alpha)


def lower_bound_L(dist: DiscreteDist, alpha: float) -> float:
    """Minimal expected length of any distribution-free interval when pi_P(X) ~ dist."""
    return solve_allocation(dist, alpha).objective


def brute_force_allocation(dist, alpha: float, step: float = 1e-3) -> Allocation:
    """Grid-search oracle for at most three atoms.

    ``dist`` may be a :class:`DiscreteDist` or a ``(targets, weights)`` pair
    with weights of arbitrary positive sum.
    """
    if isinstance(dist, DiscreteDist):
        targets, weights = dist.atoms, dist.weights
    else:
        targets, weights = dist
    if len(targets) > 3:
        raise ValueError("brute force supports at most 3 atoms")
    if not 0.0 < step <= 0.1:
        raise ValueError("step must lie in (0, 0.1]")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    a, _ = kernels.grid_search_allocation(np.asarray(targets, float), np.asarray(weights, float), alpha, step)
    return _finish(targets, weights, a, math.nan)
