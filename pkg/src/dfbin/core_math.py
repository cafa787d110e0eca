"""Length function, coverage functions and the randomized level-set interval.

For a target mean ``t`` and a non-coverage budget ``a`` the coverage
function ``f_{t,a}`` is piecewise linear on ``[0, 1]``.  For ``t <= 1/2`` it
has the profile ``h * max(1 - s / w, 0)`` (a ramp anchored at ``s = 0``),
except in the degenerate case ``t = 0`` where it is a spike at zero.  Values
for ``t > 1/2`` come from the reflection ``s -> 1 - s``.  The randomized
interval is the superlevel set ``{s : f(s) >= u}`` for a uniform draw ``u``,
and its expected length equals ``ell(t, a)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal


@dataclass(frozen=True)
class UnitInterval:
    """Closed subinterval of [0, 1]; possibly empty or a single point."""

    kind: Literal["empty", "point", "range"]
    lo: float = math.nan
    hi: float = math.nan

    def __post_init__(self):
        if self.kind == "point":
            if not 0.0 <= self.lo <= 1.0 or self.lo != self.hi:
                raise ValueError(f"invalid point interval at {self.lo!r}")
        elif self.kind == "range":
            if not 0.0 <= self.lo <= self.hi <= 1.0:
                raise ValueError(f"invalid range [{self.lo!r}, {self.hi!r}]")
        elif self.kind != "empty":
            raise ValueError(f"unknown interval kind {self.kind!r}")

    @classmethod
    def empty(cls) -> "UnitInterval":
        return cls("empty")

    @classmethod
    def point(cls, s: float) -> "UnitInterval":
        return cls("point", s, s)

    @classmethod
    def range(cls, lo: float, hi: float) -> "UnitInterval":
        if lo == hi:
            return cls.point(lo)
        return cls("range", lo, hi)

    @property
    def length(self) -> float:
        if self.kind == "range":
            return self.hi - self.lo
        return 0.0

    def contains(self, s: float) -> bool:
        if self.kind == "empty":
            return False
        return self.lo <= s <= self.hi

    def __str__(self) -> str:
        if self.kind == "empty":
            return "empty"
        if self.kind == "point":
            return f"point {format_real(self.lo)}"
        return f"[{format_real(self.lo)}, {format_real(self.hi)}]"


@dataclass(frozen=True)
class CoverageFnParams:
    """Target mean ``t`` and non-coverage budget ``a`` of ``f_{t,a}``."""

    t: float
    a: float

    def __post_init__(self):
        if not (0.0 <= self.t <= 1.0 and 0.0 <= self.a <= 1.0):
            raise ValueError(f"coverage parameters must lie in [0,1]^2, got t={self.t!r}, a={self.a!r}")


def format_real(x: float) -> str:
    """Shortest decimal that round-trips (at most 17 significant digits)."""
    r = repr(float(x))
    if r.endswith(".0"):
        r = r[:-2]
    return "0" if r == "-0" else r


def ell(t: float, a: float) -> float:
    """Minimal expected length for covering a mean-``t`` variable with budget ``a``."""
    if t > 0.5:
        t = 1.0 - t
    if a >= 0.5:
        return 2.0 * (1.0 - a) * t
    if a >= t and a > 0.0:
        return t / (2.0 * a)
    if a < t:
        return 1.0 - a / (2.0 * t)
    return 0.0  # a == t == 0


def ell_slope_a(t: float, a: float) -> float:
    """Partial derivative of :func:`ell` with respect to ``a`` (continuous in ``a``)."""
    if t > 0.5:
        t = 1.0 - t
    if t == 0.0:
        return 0.0
    if a < t:
        return -1.0 / (2.0 * t)
    if a <= 0.5:
        return -t / (2.0 * a * a)
    return -2.0 * t


def _ramp(t: float, a: float) -> tuple[float, float]:
    # f(s) = h * max(1 - s/w, 0) for 0 < t <= 1/2; w = inf means constant.
    if t == 0.5:
        return 1.0 - a, math.inf
    if a >= 0.5:
        return 2.0 * (1.0 - a), 2.0 * t
    if a == 0.0:
        return 1.0, math.inf
    return 1.0, t / a


def coverage_fn(params: CoverageFnParams, s: float) -> float:
    """Evaluate ``f_{t,a}(s)``."""
    t, a = params.t, params.a
    if t > 0.5:
        t, s = 1.0 - t, 1.0 - s
    if t == 0.0:
        return 1.0 - a if s == 0.0 else 0.0
    h, w = _ramp(t, a)
    if math.isinf(w):
        return h
    if s >= w:
        return 0.0
    return h * (1.0 - s / w)


def coverage_fn_integral(params: CoverageFnParams, lo: float = 0.0, hi: float = 1.0) -> float:
    """Exact integral of ``f_{t,a}`` over ``[lo, hi]``, with ``0 <= lo <= hi <= 1``."""
    t, a = params.t, params.a
    if t > 0.5:
        t, lo, hi = 1.0 - t, 1.0 - hi, 1.0 - lo
    if t == 0.0:
        return 0.0
    h, w = _ramp(t, a)
    if math.isinf(w):
        return h * (hi - lo)

    def antiderivative(s: float) -> float:
        s = min(s, w)
        return s - s * s / (2.0 * w)

    return h * (antiderivative(hi) - antiderivative(lo))


def sample_interval(params: CoverageFnParams, u: float) -> UnitInterval:
    """Closed-form superlevel set ``{s in [0,1] : f_{t,a}(s) >= u}``."""
    t, a = params.t, params.a
    if u <= 0.0:
        return UnitInterval.range(0.0, 1.0)
    mirrored = t > 0.5
    if mirrored:
        t = 1.0 - t
    if t == 0.0:
        if u > 1.0 - a:
            return UnitInterval.empty()
        return UnitInterval.point(1.0 if mirrored else 0.0)
    h, w = _ramp(t, a)
    if u > h:
        return UnitInterval.empty()
    reach = 1.0 if math.isinf(w) else min(1.0, w * (1.0 - u / h))
    if mirrored:
        return UnitInterval.range(1.0 - reach, 1.0)
    return UnitInterval.range(0.0, reach)
