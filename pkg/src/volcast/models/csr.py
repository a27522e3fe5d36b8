"""Complete subset regression: enumeration, DMSE weights and combination.

All size-``k`` subsets of the candidate variables are fitted next to the
always-included base block.  Submodels are scored by the discounted mean
squared error of their recent one-step forecasts (larger weight = better
model) and combined by clustering the weights into five groups, keeping the
best cluster, and taking a 25% trimmed mean of its forecasts.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np
from scipy.stats import trim_mean

#: weight assigned to a submodel with zero accumulated forecast error
ZERO_ERROR_WEIGHT_CAP = 1e12

N_CLUSTERS = 5
TRIM_FRACTION = 0.25
MIN_TRIM_CLUSTER = 4


def enumerate_csr_models(candidates: tuple[str, ...], k: int = 2) -> list[tuple[str, ...]]:
    """All size-``k`` candidate subsets, each to be joined with the base
    features."""
    if len(candidates) < k:
        raise ValueError(f"need at least {k} candidates, got {len(candidates)}")
    return [tuple(c) for c in combinations(candidates, k)]


def dmse(errors: np.ndarray, delta: float = 0.95) -> float:
    """Inverse discounted mean squared error of one submodel.

    ``errors`` holds the last ``S`` squared forecast errors, oldest first.
    The most recent error is undiscounted; older ones decay by ``delta`` per
    step.  A zero accumulated error is capped.
    """
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise ValueError("dmse needs at least one error")
    s = e.size
    disc = delta ** np.arange(s - 1, -1, -1)
    acc = float(np.sum(disc * e)) / s
    if acc <= 0:
        return ZERO_ERROR_WEIGHT_CAP
    return min(1.0 / acc, ZERO_ERROR_WEIGHT_CAP)


def kmeans_1d(values: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Optimal 1-D k-means by dynamic programming over the sorted order.

    Deterministic and globally optimal (clusters of an optimal 1-D solution
    are contiguous intervals in sorted order).  Returns integer labels in the
    original order and the cluster centroids, ascending.
    """
    x = np.asarray(values, dtype=float)
    n = len(x)
    if k < 1:
        raise ValueError("k must be >= 1")
    k = min(k, n)
    order = np.argsort(x, kind="stable")
    xs = x[order]

    ps = np.concatenate([[0.0], np.cumsum(xs)])
    ps2 = np.concatenate([[0.0], np.cumsum(xs**2)])

    def interval_cost(i: int, j: int) -> float:
        # within-cluster sum of squares of xs[i:j]
        m = j - i
        s = ps[j] - ps[i]
        return (ps2[j] - ps2[i]) - s * s / m

    cost = np.full((k + 1, n + 1), np.inf)
    split = np.zeros((k + 1, n + 1), dtype=int)
    cost[0, 0] = 0.0
    for c in range(1, k + 1):
        for j in range(c, n + 1):
            best, arg = np.inf, c - 1
            for i in range(c - 1, j):
                v = cost[c - 1, i] + interval_cost(i, j)
                if v < best - 1e-15:
                    best, arg = v, i
            cost[c, j] = best
            split[c, j] = arg

    bounds = [n]
    j = n
    for c in range(k, 0, -1):
        j = split[c, j]
        bounds.append(j)
    bounds.reverse()

    labels_sorted = np.empty(n, dtype=int)
    centroids = np.empty(k)
    for c in range(k):
        i, j = bounds[c], bounds[c + 1]
        labels_sorted[i:j] = c
        centroids[c] = xs[i:j].mean()
    labels = np.empty(n, dtype=int)
    labels[order] = labels_sorted
    return labels, centroids


def csr_combine(forecasts: np.ndarray, weights: np.ndarray) -> tuple[float, np.ndarray]:
    """Combine submodel forecasts into a point forecast.

    With five or more submodels the DMSE weights are clustered into five
    groups and the cluster with the largest centroid (the most accurate
    models) is kept; otherwise all submodels form the pool.  The forecast is
    the 25% trimmed mean of the pool, or a plain mean when the pool has
    fewer than four members.  Also returns the boolean membership mask of
    the pool (the preferred cluster), used for variable-importance audits.
    """
    f = np.asarray(forecasts, dtype=float)
    w = np.asarray(weights, dtype=float)
    if f.size == 0 or f.size != w.size:
        raise ValueError("forecasts and weights must be equal-length, nonempty")
    if f.size < N_CLUSTERS:
        mask = np.ones(f.size, dtype=bool)
    else:
        labels, centroids = kmeans_1d(w, N_CLUSTERS)
        mask = labels == int(np.argmax(centroids))
    pool = f[mask]
    if pool.size >= MIN_TRIM_CLUSTER:
        value = float(trim_mean(pool, TRIM_FRACTION))
    else:
        value = float(pool.mean())
    return value, mask
