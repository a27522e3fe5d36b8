"""Complete-subset-regression machinery, checked against exhaustive oracles."""

from itertools import combinations

import numpy as np
import pytest
from scipy.stats import trim_mean

from volcast.models import csr


def test_enumerate_counts():
    assert len(csr.enumerate_csr_models(tuple("abcde"), k=2)) == 10
    cands30 = tuple(f"x{i}" for i in range(30))
    assert len(csr.enumerate_csr_models(cands30, k=2)) == 435
    models = csr.enumerate_csr_models(("a", "b", "c"), k=2)
    assert models == [("a", "b"), ("a", "c"), ("b", "c")]
    with pytest.raises(ValueError):
        csr.enumerate_csr_models(("a",), k=2)


def test_dmse_all_one_vs_all_two():
    """Constant squared errors 1 vs 4 (raw errors 1 vs 2): weight ratio 4."""
    e1 = np.ones(500)
    e2 = np.full(500, 4.0)
    assert csr.dmse(e1) / csr.dmse(e2) == pytest.approx(4.0)


def test_dmse_discounting_and_cap():
    # most recent error undiscounted, older decayed by delta per step
    errs = np.array([1.0, 0.0])
    assert csr.dmse(errs, delta=0.5) == pytest.approx(1.0 / (0.5 * 1.0 / 2))
    assert csr.dmse(np.zeros(10)) == csr.ZERO_ERROR_WEIGHT_CAP
    with pytest.raises(ValueError):
        csr.dmse(np.array([]))
    # recency matters: a recent large error hurts more than an old one
    recent = csr.dmse(np.array([0.1] * 9 + [5.0]))
    old = csr.dmse(np.array([5.0] + [0.1] * 9))
    assert recent < old


def exhaustive_kmeans_1d(values, k):
    """Brute-force optimal 1-D k-means over contiguous sorted partitions."""
    x = np.sort(np.asarray(values, float))
    n = len(x)
    k = min(k, n)
    best = (np.inf, None)
    for cuts in combinations(range(1, n), k - 1):
        bounds = (0, *cuts, n)
        cost = 0.0
        for a, b in zip(bounds, bounds[1:]):
            seg = x[a:b]
            cost += float(np.sum((seg - seg.mean()) ** 2))
        if cost < best[0] - 1e-12:
            best = (cost, bounds)
    return best


def test_kmeans_matches_exhaustive_oracle(rng):
    for _ in range(60):
        n = int(rng.integers(5, 16))
        k = int(rng.integers(2, 6))
        vals = rng.lognormal(0.0, 1.5, n)
        labels, centroids = csr.kmeans_1d(vals, k)
        cost = sum(
            float(np.sum((vals[labels == c] - vals[labels == c].mean()) ** 2))
            for c in range(min(k, n))
        )
        oracle_cost, _ = exhaustive_kmeans_1d(vals, k)
        assert cost == pytest.approx(oracle_cost, abs=1e-9)
        assert np.all(np.diff(centroids) >= -1e-12)


def test_kmeans_basic_properties():
    labels, centroids = csr.kmeans_1d(np.array([1.0, 1.0, 10.0]), 2)
    assert labels[0] == labels[1] != labels[2]
    np.testing.assert_allclose(centroids, [1.0, 10.0])
    # k >= n: every point its own cluster
    labels, centroids = csr.kmeans_1d(np.array([3.0, 1.0]), 5)
    assert len(centroids) == 2
    with pytest.raises(ValueError):
        csr.kmeans_1d(np.array([1.0]), 0)


def oracle_combine(forecasts, weights):
    """Independent recomputation of the combination rule."""
    f = np.asarray(forecasts, float)
    w = np.asarray(weights, float)
    if len(f) < 5:
        pool = f
    else:
        _, bounds = exhaustive_kmeans_1d(w, 5)
        x = np.sort(w)
        # members of the top interval (largest values)
        cutoff = x[bounds[-2]]
        pool = f[w >= cutoff]
    if len(pool) >= 4:
        return float(trim_mean(pool, 0.25))
    return float(pool.mean())


def test_combine_matches_exhaustive_oracle(rng):
    for trial in range(100):
        n = int(rng.integers(5, 25))
        f = rng.normal(size=n)
        w = rng.lognormal(0.0, 2.0, n)
        # oracle cutoff logic assumes distinct weights
        if len(np.unique(w)) < n:
            continue
        value, mask = csr.csr_combine(f, w)
        assert value == pytest.approx(oracle_combine(f, w), abs=1e-9), f"trial {trial}"
        # the preferred cluster holds the largest weights
        assert w[mask].min() >= w[~mask].max() if (~mask).any() else True


def test_combine_small_pools():
    # fewer than five submodels: all pooled
    value, mask = csr.csr_combine(np.array([1.0, 2.0, 3.0, 10.0]), np.array([1, 2, 3, 4.0]))
    assert mask.all()
    assert value == pytest.approx(trim_mean([1.0, 2.0, 3.0, 10.0], 0.25))
    # preferred cluster smaller than four: plain mean fallback
    w = np.array([100.0, 90.0, 1.0, 2.0, 3.0, 4.0])
    f = np.array([5.0, 7.0, 0.0, 0.0, 0.0, 0.0])
    value, mask = csr.csr_combine(f, w)
    assert mask.sum() < 4
    assert value == pytest.approx(f[mask].mean())
    with pytest.raises(ValueError):
        csr.csr_combine(np.array([]), np.array([]))


def test_combine_trimmed_mean_drops_outliers():
    # top five weights nearly identical, the rest well separated, so the
    # preferred cluster is exactly the top five
    w = np.array([10.0, 10.01, 10.02, 10.03, 10.04, 0.1, 1.0, 3.0, 6.0])
    f = np.array([1.0, 1.1, 0.9, 1.05, 50.0, -99.0, -99.0, -99.0, -99.0])
    value, mask = csr.csr_combine(f, w)
    assert mask.sum() == 5
    # 25% trimming removes the 50.0 outlier
    assert value == pytest.approx(trim_mean(f[:5], 0.25))
    assert value < 2.0
