"""Bagged regression trees with per-split feature subsampling.

Trees split on squared error.  At every split the search considers the
forced features (daily and weekly volatility) plus ``z`` candidates drawn
fresh at random, mirroring the forced-inclusion variant of the standard
random forest.  Leaves keep at least ``min_leaf`` observations; prediction
is the average over all trees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_LEAF = 10
DEFAULT_TREES = 500

Z_GRID = (8, 16, 32)
DEPTH_GRID = (6, 12, None)  # None: grow until the leaf-size floor binds


@dataclass
class _Node:
    value: float
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None


def _best_split(X, y, feat_idx, min_leaf):
    """Best (feature, threshold, child SSE) over the given features, or None."""
    n = len(y)
    best = None
    for f in feat_idx:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        # candidate split after position i (1-based counts), children >= min_leaf
        csum = np.cumsum(ys)
        csum2 = np.cumsum(ys**2)
        total, total2 = csum[-1], csum2[-1]
        counts = np.arange(1, n)
        valid = (counts >= min_leaf) & (n - counts >= min_leaf) & (xs[1:] > xs[:-1])
        if not valid.any():
            continue
        i = counts[valid]
        left_sse = csum2[i - 1] - csum[i - 1] ** 2 / i
        right_sse = (total2 - csum2[i - 1]) - (total - csum[i - 1]) ** 2 / (n - i)
        sse = left_sse + right_sse
        j = int(np.argmin(sse))
        if best is None or sse[j] < best[2]:
            thr = 0.5 * (xs[i[j] - 1] + xs[i[j]])
            best = (f, float(thr), float(sse[j]))
    return best


def _build(X, y, rng, forced, candidates, z, depth, min_leaf):
    node = _Node(value=float(y.mean()))
    if len(y) < 2 * min_leaf or (depth is not None and depth <= 0):
        return node
    if len(candidates) > z:
        drawn = rng.choice(candidates, size=z, replace=False)
    else:
        drawn = np.asarray(candidates)
    feat_idx = np.concatenate([np.asarray(forced, dtype=int), drawn.astype(int)])
    found = _best_split(X, y, feat_idx, min_leaf)
    if found is None:
        return node
    f, thr, _ = found
    mask = X[:, f] <= thr
    next_depth = None if depth is None else depth - 1
    node.feature = f
    node.threshold = thr
    node.left = _build(X[mask], y[mask], rng, forced, candidates, z, next_depth, min_leaf)
    node.right = _build(X[~mask], y[~mask], rng, forced, candidates, z, next_depth, min_leaf)
    return node


def _predict_node(node: _Node, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X))
    stack = [(node, np.arange(len(X)))]
    while stack:
        nd, idx = stack.pop()
        if nd.left is None:
            out[idx] = nd.value
            continue
        mask = X[idx, nd.feature] <= nd.threshold
        stack.append((nd.left, idx[mask]))
        stack.append((nd.right, idx[~mask]))
    return out


@dataclass
class ForestFit:
    """A fitted bagged-tree ensemble."""

    trees: list = field(repr=False, default_factory=list)
    resid_var: float = 0.0
    meta: dict = field(default_factory=dict)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        acc = np.zeros(len(X))
        for tree in self.trees:
            acc += _predict_node(tree, X)
        return acc / len(self.trees)


def fit_random_forest(
    X: np.ndarray,
    y: np.ndarray,
    forced: tuple[int, ...],
    candidates: tuple[int, ...],
    z: int,
    max_depth: int | None,
    seed: int,
    n_trees: int = DEFAULT_TREES,
    min_leaf: int = MIN_LEAF,
) -> ForestFit:
    """Fit ``n_trees`` bagged trees; deterministic for a fixed seed.

    ``forced`` feature indices are considered at every split in addition to
    ``z`` randomly drawn ``candidates`` (``z`` is clamped with a warning if
    larger than the candidate pool).  The residual variance for
    retransformation is the out-of-bag mean squared error.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 20:
        raise ValueError(f"need at least 20 rows, got {n}")
    candidates = tuple(candidates)
    if z > len(candidates):
        import warnings

        warnings.warn(
            f"z={z} exceeds {len(candidates)} candidates; clamping", stacklevel=2
        )
        z = len(candidates)

    rng = np.random.default_rng(seed)
    trees = []
    oob_sum = np.zeros(n)
    oob_count = np.zeros(n)
    cand = np.asarray(candidates, dtype=int)
    for _ in range(n_trees):
        boot = rng.integers(0, n, size=n)
        tree = _build(X[boot], y[boot], rng, forced, cand, z, max_depth, min_leaf)
        trees.append(tree)
        oob = np.setdiff1d(np.arange(n), boot, assume_unique=False)
        if oob.size:
            oob_sum[oob] += _predict_node(tree, X[oob])
            oob_count[oob] += 1

    covered = oob_count > 0
    if covered.any():
        resid_var = float(np.mean((y[covered] - oob_sum[covered] / oob_count[covered]) ** 2))
    else:
        fit = ForestFit(trees=trees)
        resid_var = float(np.mean((y - fit.predict(X)) ** 2))
    return ForestFit(
        trees=trees,
        resid_var=resid_var,
        meta={"z": z, "max_depth": max_depth, "seed": seed, "n_trees": n_trees},
    )


def select_rf_hyperparameters(
    X_fit,
    y_fit,
    X_cal,
    y_cal,
    forced,
    candidates,
    seed: int,
    n_trees: int = DEFAULT_TREES,
) -> tuple[int, int | None]:
    """Pick (z, depth) out of the 3x3 grid by calibration MSE.

    Ties break deterministically toward the smallest z, then the smallest
    depth (with unlimited depth last).
    """
    best = None
    for z in Z_GRID:
        for depth in DEPTH_GRID:
            fit = fit_random_forest(
                X_fit, y_fit, forced, candidates, z, depth, seed, n_trees=n_trees
            )
            mse = float(np.mean((y_cal - fit.predict(X_cal)) ** 2))
            if best is None or mse < best[0] - 1e-15:
                best = (mse, z, depth)
    return best[1], best[2]
