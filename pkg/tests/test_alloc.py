import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfbin.alloc import (
    DiscreteDist,
    allocate,
    brute_force_allocation,
    inner_argmin,
    lower_bound_L,
    solve_allocation,
)
from dfbin.core_math import ell, ell_slope_a


def _grid_argmin(t, dual, step=1e-4):
    a = np.arange(0, 1 + step / 2, step)
    vals = np.array([ell(t, x) for x in a]) + dual * a
    return a[int(np.argmin(vals))]


@pytest.mark.parametrize("t, dual, expected", [(0.1, 1.25, 0.2), (0.1, 6.0, 0.0), (0.0, 0.3, 0.0)])
def test_inner_argmin_examples(t, dual, expected):
    assert inner_argmin(t, dual) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("t", [0.05, 0.1, 0.3, 0.45, 0.6, 0.85])
@pytest.mark.parametrize("dual", [0.05, 0.3, 0.9, 1.7, 3.0, 8.0, 12.0])
def test_inner_argmin_matches_grid(t, dual):
    got = inner_argmin(t, dual)
    ref = _grid_argmin(t, dual)
    # compare objective values: the minimiser can be set-valued
    assert ell(t, got) + dual * got <= ell(t, ref) + dual * ref + 1e-9


def test_inner_argmin_half():
    assert inner_argmin(0.5, 0.99) == 1.0
    assert inner_argmin(0.5, 1.0) == 0.0


def test_solver_examples():
    r = solve_allocation(DiscreteDist([0.5], [1.0]), 0.1)
    assert r.a == (0.1,) and r.objective == pytest.approx(0.9, abs=1e-15)

    r = solve_allocation(DiscreteDist([0.1, 0.5], [0.5, 0.5]), 0.1)
    assert r.a == pytest.approx((0.2, 0.0), abs=1e-12)
    assert r.objective == pytest.approx(0.625, abs=1e-12)
    assert r.dual == pytest.approx(1.25, abs=1e-9)

    r = solve_allocation(DiscreteDist([0.3, 0.7], [0.5, 0.5]), 1.0)
    assert r.a == (1.0, 1.0) and r.objective == 0.0


def test_solver_brute_force_agree_on_example():
    d = DiscreteDist([0.1, 0.5], [0.5, 0.5])
    bf = brute_force_allocation(d, 0.1, 1e-3)
    assert bf.objective == pytest.approx(0.625, abs=1e-9)


def test_degenerate_atoms_get_no_budget():
    r = solve_allocation(DiscreteDist([0.0, 0.3, 1.0], [0.3, 0.4, 0.3]), 0.1)
    assert r.a[0] == 0.0 and r.a[2] == 0.0
    assert r.a[1] == pytest.approx(0.25, abs=1e-12)


def test_validation():
    with pytest.raises(ValueError):
        DiscreteDist([0.2, 0.4], [0.5, 0.4])
    with pytest.raises(ValueError):
        DiscreteDist([1.2], [1.0])
    with pytest.raises(ValueError):
        solve_allocation(DiscreteDist([0.2], [1.0]), 1.5)
    with pytest.raises(ValueError):
        brute_force_allocation(DiscreteDist([0.1] * 4, [0.25] * 4), 0.1)


def test_brute_force_trivial_cases():
    bf = brute_force_allocation(DiscreteDist([0.3], [1.0]), 0.1234, 0.01)
    assert bf.a == pytest.approx((0.12,), abs=1e-12)
    bf = brute_force_allocation(DiscreteDist([0.3, 0.6], [0.5, 0.5]), 0.0, 0.01)
    assert bf.a == (0.0, 0.0)


def _random_instance(rng, m):
    t = rng.uniform(0.0, 1.0, m)
    w = rng.dirichlet(np.ones(m))
    return DiscreteDist(t, w), float(rng.uniform(0.0, 1.0))


def _rounding_bound(d, a, step):
    # convexity: rounding each coordinate of the optimum down to the grid
    # costs at most step * |slope| evaluated at the rounded point
    total = 0.0
    for t, w, x in zip(d.atoms, d.weights, a):
        g = math.floor(x / step + 1e-9) * step
        total += w * step * abs(ell_slope_a(t, g if g > 0 else 0.0))
    return total


@pytest.mark.parametrize("m, count, step", [(2, 300, 1e-3), (3, 40, 1e-2)])
def test_oracle_equivalence_within_rounding_bound(m, count, step):
    rng = np.random.default_rng(20240601 + m)
    for _ in range(count):
        d, alpha = _random_instance(rng, m)
        s = solve_allocation(d, alpha)
        b = brute_force_allocation(d, alpha, step)
        assert s.budget_used <= alpha + 1e-9
        # the solver is the true optimum, so it can only beat the grid
        assert s.objective <= b.objective + 1e-12
        assert b.objective - s.objective <= _rounding_bound(d, s.a, step) + 1e-12


def test_arbitrary_weight_sum():
    # inflated weights: the program is scale-covariant in (weights, alpha)
    r = allocate([0.1, 0.5], [0.75, 0.75], 0.15)
    ref = solve_allocation(DiscreteDist([0.1, 0.5], [0.5, 0.5]), 0.1)
    assert r.a == pytest.approx(ref.a, abs=1e-12)
    assert r.objective == pytest.approx(1.5 * ref.objective, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.tuples(st.floats(0, 1), st.floats(0.01, 1)), min_size=1, max_size=12),
    st.floats(0, 1),
)
def test_feasibility_and_saturation(pairs, alpha):
    t = [p[0] for p in pairs]
    w = np.array([p[1] for p in pairs])
    w = w / w.sum()
    r = allocate(t, w, alpha)
    assert all(0.0 <= x <= 1.0 for x in r.a)
    assert r.budget_used <= alpha + 1e-9
    assert r.objective == pytest.approx(math.fsum(wi * ell(ti, ai) for ti, wi, ai in zip(t, w, r.a)), abs=1e-9)
    if all(0 < ti < 1 for ti in t) and any(x < 1 for x in r.a):
        assert r.budget_used == pytest.approx(alpha, abs=1e-8)


@pytest.mark.parametrize("t", np.linspace(0, 1, 21))
@pytest.mark.parametrize("alpha", np.linspace(0, 1, 21))
def test_point_mass_identity(t, alpha):
    assert lower_bound_L(DiscreteDist.point_mass(t), alpha) == ell(t, alpha)


# dyadic atoms so that 1 - t is computed exactly
dyadic = st.integers(0, 2**20).map(lambda k: k / 2**20)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(dyadic, st.floats(0.01, 1)), min_size=1, max_size=6))
def test_lower_bound_monotone_and_reflection_invariant(pairs):
    t = [p[0] for p in pairs]
    w = np.array([p[1] for p in pairs])
    w = w / w.sum()
    d = DiscreteDist(t, w)
    mirrored = DiscreteDist([1 - x for x in t], w)
    vals = [lower_bound_L(d, a) for a in np.linspace(0, 1, 11)]
    assert all(y <= x + 1e-12 for x, y in zip(vals, vals[1:]))
    for a in (0.05, 0.3, 0.7):
        assert lower_bound_L(mirrored, a) == pytest.approx(lower_bound_L(d, a), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.5), st.floats(0.01, 0.99), st.lists(st.floats(0, 1), min_size=1, max_size=6))
def test_lower_bound_interval_support(t, alpha, raw):
    # every atom in [t, 1-t] cannot do better than the point mass at t
    atoms = [t + (1 - 2 * t) * x for x in raw]
    d = DiscreteDist(atoms, [1 / len(atoms)] * len(atoms))
    assert lower_bound_L(d, alpha) >= ell(t, alpha) - 1e-12


def test_many_atoms():
    rng = np.random.default_rng(0)
    t = rng.random(10_000)
    d = DiscreteDist(t, np.full(10_000, 1e-4), tol=1e-6)
    r = solve_allocation(d, 0.1)
    assert r.budget_used == pytest.approx(0.1, abs=1e-9)
    # KKT: nudging budget between two random coordinates cannot help
    for i, j in [(1, 2), (10, 500), (77, 9000)]:
        eps = 1e-7
        a = list(r.a)
        if a[i] - eps / 1e-4 >= 0 and a[j] + eps / 1e-4 <= 1:
            a[i] -= eps / 1e-4
            a[j] += eps / 1e-4
            moved = math.fsum(1e-4 * ell(x, y) for x, y in zip(t, a))
            assert moved >= r.objective - 1e-12
