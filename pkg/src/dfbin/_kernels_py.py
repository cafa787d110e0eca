"""Pure numpy kernels; reference behaviour for the compiled ``_kernels`` module."""

import numpy as np

BACKEND = "python"


def ell_array(t, a):
    t = np.asarray(t, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    t, a = np.broadcast_arrays(t, a)
    tau = np.where(t > 0.5, 1.0 - t, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        mid = tau / (2.0 * a)
        low = 1.0 - a / (2.0 * tau)
    out = np.where(a < tau, low, 0.0)
    out = np.where((a >= tau) & (a > 0.0), mid, out)
    out = np.where(a >= 0.5, 2.0 * (1.0 - a) * tau, out)
    return out


def knn_mean(train_x, train_y, queries, k):
    """Mean label of the ``k`` nearest training points for each query row.

    Neighbours are ranked by (squared Euclidean distance, training index).
    """
    train_x = np.ascontiguousarray(train_x, dtype=np.float64)
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    labels = np.asarray(train_y, dtype=np.int64)
    n, d = train_x.shape
    out = np.empty(len(queries), dtype=np.float64)
    # chunk queries to bound the (q, n) distance matrix
    chunk = max(1, 2_000_000 // max(n, 1))
    for start in range(0, len(queries), chunk):
        q = queries[start:start + chunk]
        dist = np.zeros((len(q), n))
        for j in range(d):
            diff = train_x[None, :, j] - q[:, j, None]
            dist += diff * diff
        if k == n:
            out[start:start + len(q)] = labels.sum() / k
            continue
        kth = np.partition(dist, k - 1, axis=1)[:, k - 1:k]
        below = dist < kth
        ties = dist == kth
        need = k - below.sum(axis=1, keepdims=True)
        take = below | (ties & (np.cumsum(ties, axis=1) <= need))
        out[start:start + len(q)] = (take * labels).sum(axis=1) / k
    return out


def grid_search_allocation(targets, weights, alpha, step):
    """Exhaustive grid minimiser of sum w*ell(t, a) subject to sum w*a <= alpha.

    Only the last coordinate is not enumerated: ``ell`` is nonincreasing in
    ``a``, so for fixed leading coordinates the largest feasible grid value
    of the last one is optimal.
    """
    targets = np.asarray(targets, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    m = len(targets)
    n_steps = int(round(1.0 / step))
    grid = np.arange(n_steps + 1) * step
    grid[-1] = min(grid[-1], 1.0)
    if m == 1:
        lead = [np.zeros(1)]
        used = np.zeros(1)
        obj = np.zeros(1)
    else:
        mesh = np.meshgrid(*([grid] * (m - 1)), indexing="ij")
        lead = [g.ravel() for g in mesh]
        used = np.zeros(lead[0].shape)
        obj = np.zeros(lead[0].shape)
        for i in range(m - 1):
            used = used + weights[i] * lead[i]
            obj = obj + weights[i] * ell_array(targets[i], lead[i])
    slack = alpha + 1e-12 - used
    w_last = weights[-1]
    if w_last > 0.0:
        with np.errstate(invalid="ignore"):
            idx = np.floor(slack / (w_last * step))
        idx = np.clip(idx, -1, n_steps)
    else:
        idx = np.full(used.shape, float(n_steps))
    feasible = (slack >= 0.0) & (idx >= 0)
    last = np.where(feasible, idx, 0.0) * step
    last = np.minimum(last, 1.0)
    total = obj + w_last * ell_array(targets[-1], last)
    total = np.where(feasible, total, np.inf)
    best = int(np.argmin(total))
    a = [lead[i][best] for i in range(m - 1)] if m > 1 else []
    a.append(last[best])
    return np.array(a), float(total[best])
