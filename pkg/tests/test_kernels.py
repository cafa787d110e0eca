import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfbin import _kernels_py, kernels
from dfbin.core_math import ell


def test_selected_backend_is_known():
    assert kernels.BACKEND in ("python", "cython")


def test_ell_array_matches_scalar(backend):
    g = np.linspace(0, 1, 101)
    T, A = np.meshgrid(g, g, indexing="ij")
    got = backend.ell_array(T, A)
    assert got.shape == T.shape
    ref = np.vectorize(ell)(T, A)
    assert np.array_equal(got, ref)


def test_ell_array_broadcasts(backend):
    got = backend.ell_array(0.3, np.array([0.1, 0.5, 1.0]))
    assert np.allclose(got, [ell(0.3, 0.1), ell(0.3, 0.5), 0.0])


def _knn_reference(X, y, q, k):
    d = ((X - q) ** 2).sum(axis=1)
    order = sorted(range(len(X)), key=lambda i: (d[i], i))
    return y[order[:k]].mean()


def test_knn_spec_examples(backend):
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1])
    assert backend.knn_mean(X, y, np.array([[0.1]]), 1)[0] == 0.0
    assert np.all(backend.knn_mean(X, y, np.array([[0.1], [0.9], [5.0]]), 2) == 0.5)
    X3 = np.array([[0.0], [1.0], [2.0]])
    assert backend.knn_mean(X3, np.array([1, 1, 0]), np.array([[0.0]]), 2)[0] == 1.0


def test_knn_ties_go_to_lower_index(backend):
    # both neighbours at distance 1; the lower index (label 1) wins
    X = np.array([[1.0], [-1.0], [5.0]])
    y = np.array([1, 0, 0])
    assert backend.knn_mean(X, y, np.array([[0.0]]), 1)[0] == 1.0
    X = np.array([[-1.0], [1.0], [5.0]])
    assert backend.knn_mean(X, y, np.array([[0.0]]), 1)[0] == 1.0
    y = np.array([0, 1, 0])
    assert backend.knn_mean(X, y, np.array([[0.0]]), 1)[0] == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.integers(1, 3), st.integers(0, 2**32 - 1), st.booleans())
def test_knn_matches_sorted_reference(n, d, seed, lattice):
    rng = np.random.default_rng(seed)
    # lattice points force many exact distance ties
    X = rng.integers(0, 3, (n, d)).astype(float) if lattice else rng.random((n, d))
    y = rng.integers(0, 2, n)
    Q = rng.integers(0, 3, (5, d)).astype(float) if lattice else rng.random((5, d))
    k = int(rng.integers(1, n + 1))
    ref = np.array([_knn_reference(X, y, q, k) for q in Q])
    assert np.array_equal(_kernels_py.knn_mean(X, y, Q, k), ref)
    assert np.array_equal(kernels.knn_mean(X, y, Q, k), ref)


def test_grid_search_backends_agree(backend):
    rng = np.random.default_rng(3)
    for m in (1, 2, 3):
        for _ in range(5):
            t = rng.random(m)
            w = rng.random(m)
            w /= w.sum()
            alpha = float(rng.random())
            step = 0.01 if m == 3 else 0.001
            a_ref, obj_ref = _kernels_py.grid_search_allocation(t, w, alpha, step)
            a, obj = backend.grid_search_allocation(t, w, alpha, step)
            assert obj == pytest.approx(obj_ref, abs=1e-12)
            assert float(np.dot(w, a)) <= alpha + 1e-9
