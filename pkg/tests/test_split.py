import math

import numpy as np
import pytest

from dfbin.estimator import DFModel
from dfbin.split import (
    HistogramRegressor,
    KNNRegressor,
    ProbBinPartition,
    RegressorSpec,
    build_prob_partition,
    default_knn_k,
    fit_split,
    n_bins_for,
)


def test_bins_for_thousand():
    assert n_bins_for(1000) == 13


def test_bins_formula_over_range():
    ns = np.unique(np.concatenate([np.arange(3, 2000), np.geomspace(2000, 10**6, 400).astype(int)]))
    for n in ns:
        assert n_bins_for(int(n)) == math.ceil(math.sqrt(n / math.log(n)))


class FixedProb:
    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def predict(self, X):
        return self.values[np.asarray(X, dtype=int)[:, 0]]

    def to_dict(self):
        return {}


def test_prob_bin_edges():
    M = 5
    part = build_prob_partition(FixedProb([0.0, 1.0, 0.2, 0.4, 0.19999, 0.99999]), M)
    idx = part.region_index(np.arange(6)[:, None])
    assert idx.tolist() == [0, M - 1, 1, 2, 0, M - 1]
    for m in range(M):
        assert part.region_of_probability([m / M]).tolist() == [m]


def test_knn_examples():
    X = np.array([[0.0], [1.0]])
    r = KNNRegressor.fit(X, [0, 1], 1)
    assert r.predict([[0.1]]).tolist() == [0.0]
    r = KNNRegressor.fit(X, [0, 1], 2)
    assert r.predict([[0.1], [5.0]]).tolist() == [0.5, 0.5]
    r = KNNRegressor.fit(np.array([[0.0], [1.0], [2.0]]), [1, 1, 0], 2)
    assert r.predict([[0.0]]).tolist() == [1.0]


def test_knn_rejects_bad_k():
    with pytest.raises(ValueError):
        KNNRegressor.fit(np.zeros((2, 1)), [0, 1], 3)
    with pytest.raises(ValueError):
        KNNRegressor.fit(np.zeros((0, 1)), [], 1)
    with pytest.raises(ValueError):
        RegressorSpec("knn", k=0)
    with pytest.raises(ValueError):
        RegressorSpec("forest")


def test_default_k():
    assert default_knn_k(2000, 2) == math.ceil(2000 ** 0.5)
    assert default_knn_k(1, 3) == 1


def _data(n, seed, d=2):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    prob = np.where(X[:, 0] < 0.5, 0.2, 0.8)
    y = (rng.random(n) < prob).astype(int)
    return X, y


def test_split_sizes_and_M():
    X, y = _data(1000, 1)
    model = fit_split(X, y, 0.1, RegressorSpec("knn"))
    assert model.M == 13
    assert model.n == 1000 and model.n_estimation == 500
    assert len(model.partition.regressor.train_y) == 500
    # the regressor saw exactly the first half
    assert np.array_equal(model.partition.regressor.train_x, X[:500])


def test_split_uses_half_sample_size_in_inflation():
    X, y = _data(1001, 2)
    model = fit_split(X, y, 0.1)
    s = model.stats[0]
    n_est = 501
    L = math.log(4 * model.M * n_est / 0.1)
    assert s.p_tilde == pytest.approx(s.p_hat + math.sqrt(s.p_hat * 3 * L / n_est) + 3 * L / n_est, abs=1e-15)


def test_constant_labels_one():
    rng = np.random.default_rng(3)
    X = rng.random((200, 1))
    model = fit_split(X, np.ones(200, dtype=int), 0.1)
    last = model.stats[-1]
    assert last.p_hat == 1.0 and last.pi_hat == 1.0
    assert all(s.p_hat == 0.0 for s in model.stats[:-1])


def test_three_points():
    X = np.array([[0.1], [0.5], [0.9]])
    model = fit_split(X, [0, 1, 1], 0.1)
    assert model.n_estimation == 2
    assert len(model.partition.regressor.train_y) == 1
    assert model.M == n_bins_for(3)
    with pytest.raises(ValueError):
        fit_split(X[:2], [0, 1], 0.1)


def test_histogram_invariant_to_permutation_within_halves():
    X, y = _data(600, 4)
    base = fit_split(X, y, 0.1, RegressorSpec("histogram", bins=4))
    rng = np.random.default_rng(5)
    p1, p2 = rng.permutation(300), 300 + rng.permutation(300)
    perm = np.concatenate([p1, p2])
    other = fit_split(X[perm], y[perm], 0.1, RegressorSpec("histogram", bins=4))
    assert other.stats == base.stats
    assert np.array_equal(other.partition.regressor.cell_means, base.partition.regressor.cell_means)


def test_histogram_empty_cell_predicts_half():
    X = np.array([[0.0], [0.1], [1.0]])
    r = HistogramRegressor.fit(X, [1, 1, 0], 4)
    assert r.predict([[0.6]]).tolist() == [0.5]
    assert r.predict([[0.05], [1.0]]).tolist() == [1.0, 0.0]


def test_partition_totality():
    X, y = _data(400, 6)
    model = fit_split(X, y, 0.1)
    Q = np.random.default_rng(7).normal(size=(1000, 2)) * 3
    idx = model.partition.region_index(Q)
    assert idx.shape == (1000,) and idx.min() >= 0 and idx.max() < model.M


@pytest.mark.parametrize("kind", ["knn", "histogram"])
def test_split_model_round_trip(kind):
    X, y = _data(300, 8)
    model = fit_split(X, y, 0.1, RegressorSpec(kind))
    back = DFModel.from_json(model.to_json())
    assert isinstance(back.partition, ProbBinPartition)
    Q = np.random.default_rng(9).random((200, 2))
    assert np.array_equal(back.partition.region_index(Q), model.partition.region_index(Q))
    assert back.to_json() == model.to_json()
