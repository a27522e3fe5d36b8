"""Weighted least squares and the two-stage adaptive LASSO.

Design matrices are split into an always-included base block (intercept and
lagged volatility terms, never penalized) and a candidate block.  The first
stage is a ridge fit penalizing only the candidate coefficients; its
coefficients define per-coefficient L1 weights ``1/|g|`` for the second
stage, a weighted LASSO solved by coordinate descent.  Observation weights
enter both stages.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

#: L1 weight assigned to candidates whose ridge coefficient is exactly zero.
ZERO_COEF_WEIGHT_CAP = 1e8


@dataclass
class LinearFit:
    """Coefficients of a fitted linear forecaster, original scale."""

    columns: tuple[str, ...]
    coef: np.ndarray
    resid_var: float
    dropped: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef


def wls(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Weighted least squares; rank-deficient designs drop collinear columns.

    Returns the coefficient vector (zeros for dropped columns) and the
    indices of the dropped columns.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    sw = np.sqrt(np.asarray(w, dtype=float))
    Xw = X * sw[:, None]
    yw = y * sw
    coef, _, rank, _ = np.linalg.lstsq(Xw, yw, rcond=None)
    if rank == X.shape[1]:
        return coef, []
    # identify a full-rank column subset via pivoted QR, refit on it
    _, _, piv = scipy.linalg.qr(Xw, mode="economic", pivoting=True)
    keep = sorted(piv[:rank])
    dropped = sorted(set(range(X.shape[1])) - set(keep))
    sub, _, _, _ = np.linalg.lstsq(Xw[:, keep], yw, rcond=None)
    coef = np.zeros(X.shape[1])
    coef[keep] = sub
    return coef, dropped


def weighted_resid_var(X, y, w, coef) -> float:
    r = np.asarray(y) - np.asarray(X) @ coef
    w = np.asarray(w, dtype=float)
    return float(np.sum(w * r**2) / np.sum(w))


def fit_wls(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, columns: tuple[str, ...]
) -> LinearFit:
    """Weighted-least-squares fit of a HAR-style model."""
    coef, dropped = wls(X, y, w)
    if dropped:
        logger.warning("collinear columns dropped: %s", [columns[i] for i in dropped])
    return LinearFit(
        columns=tuple(columns),
        coef=coef,
        resid_var=weighted_resid_var(X, y, w, coef),
        dropped=tuple(columns[i] for i in dropped),
    )


def ridge_candidates(
    X_base: np.ndarray,
    Z: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    lam: float,
) -> np.ndarray:
    """Observation-weighted ridge with the penalty on the candidate block only.

    Returns the stacked coefficient vector ``(base..., candidates...)``.
    """
    D = np.hstack([X_base, Z])
    wv = np.asarray(w, dtype=float)
    G = D.T @ (D * wv[:, None])
    b = D.T @ (wv * y)
    pen = np.zeros(D.shape[1])
    pen[X_base.shape[1] :] = lam
    try:
        return np.linalg.solve(G + np.diag(pen), b)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(G + np.diag(pen), b, rcond=None)[0]


def _soft(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def solve_weighted_lasso(
    D: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    penalty: np.ndarray,
    coef0: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Coordinate descent for ``sum_t w_t (y_t - d_t'c)^2 + sum_j p_j |c_j|``.

    ``penalty[j] = 0`` leaves coordinate ``j`` unpenalized.  Iterates until
    the subgradient optimality residual falls below ``tol`` (scaled by the
    gradient magnitude at zero).
    """
    wv = np.asarray(w, dtype=float)
    G = D.T @ (D * wv[:, None])
    b = D.T @ (wv * y)
    p = D.shape[1]
    c = np.zeros(p) if coef0 is None else coef0.astype(float).copy()
    diag = np.diag(G).copy()
    degenerate = diag <= 0
    scale = max(1.0, float(np.max(np.abs(b))))
    grad = G @ c - b  # half-gradient of the quadratic part

    for _ in range(max_iter):
        for j in range(p):
            if degenerate[j]:
                c[j] = 0.0
                continue
            old = c[j]
            # rho = b[j] - sum_{k != j} G[jk] c[k]
            rho = b[j] - (grad[j] + b[j] - G[j, j] * old)
            new = _soft(rho, penalty[j] / 2.0) / G[j, j]
            if new != old:
                c[j] = new
                grad += G[j] * (new - old)
        if subgradient_residual(G, b, c, penalty) <= tol * scale:
            break
    return c


def subgradient_residual(
    G: np.ndarray, b: np.ndarray, c: np.ndarray, penalty: np.ndarray
) -> float:
    """Max violation of the weighted-LASSO optimality conditions.

    Zero at the optimum: penalized coordinates satisfy the soft-threshold
    stationarity condition, unpenalized ones have zero gradient.
    """
    grad = 2.0 * (G @ c - b)
    res = 0.0
    for j in range(len(c)):
        if penalty[j] == 0:
            res = max(res, abs(grad[j]))
        elif c[j] != 0:
            res = max(res, abs(grad[j] + penalty[j] * np.sign(c[j])))
        else:
            res = max(res, max(0.0, abs(grad[j]) - penalty[j]))
    return res


def fit_adaptive_lasso(
    X_base: np.ndarray,
    Z: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    lam_init: float,
    lam_adap: float,
    base_columns: tuple[str, ...],
    cand_columns: tuple[str, ...],
) -> LinearFit:
    """Two-stage adaptive LASSO with unpenalized base features.

    Candidates are standardized on the estimation window (constant columns
    are dropped); stage one is a candidate-only ridge with ``lam_init``,
    stage two a weighted L1 fit with per-coefficient weights ``1/|g|``
    (capped when a ridge coefficient is exactly zero) scaled by ``lam_adap``.
    Coefficients are reported on the original scale.
    """
    X_base = np.asarray(X_base, dtype=float)
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)

    mean = Z.mean(axis=0)
    sd = Z.std(axis=0)
    # constant up to floating-point noise counts as constant
    tiny = 1e-12 * np.maximum(1.0, np.abs(mean))
    keep = np.flatnonzero(sd > tiny)
    dropped = tuple(cand_columns[i] for i in np.flatnonzero(sd <= tiny))
    if dropped:
        logger.warning("constant candidate columns dropped: %s", list(dropped))
    Zs = (Z[:, keep] - mean[keep]) / sd[keep]

    columns = tuple(base_columns) + tuple(cand_columns)
    nb = X_base.shape[1]

    D = np.hstack([X_base, Zs])
    if lam_adap == 0:
        # unpenalized second stage collapses to plain WLS on the full design
        coef_std, _ = wls(D, y, w)
    else:
        ridge_coef = ridge_candidates(X_base, Zs, y, w, lam_init)
        gamma_star = ridge_coef[nb:]
        safe = np.where(gamma_star == 0, 1.0, np.abs(gamma_star))
        l1w = np.where(gamma_star == 0, ZERO_COEF_WEIGHT_CAP, 1.0 / safe)
        l1w = np.minimum(l1w, ZERO_COEF_WEIGHT_CAP)
        penalty = np.concatenate([np.zeros(nb), lam_adap * l1w])
        coef_std = solve_weighted_lasso(D, y, w, penalty, coef0=ridge_coef)

    # back to the original candidate scale; fold the centering into the
    # intercept (assumed to be the first base column)
    coef = np.zeros(nb + len(cand_columns))
    coef[:nb] = coef_std[:nb]
    gamma = np.zeros(len(cand_columns))
    gamma[keep] = coef_std[nb:] / sd[keep]
    coef[nb:] = gamma
    coef[0] -= float(np.sum(coef_std[nb:] * mean[keep] / sd[keep]))

    X_full = np.hstack([X_base, Z])
    return LinearFit(
        columns=columns,
        coef=coef,
        resid_var=weighted_resid_var(X_full, y, w, coef),
        dropped=dropped,
        meta={"lam_init": lam_init, "lam_adap": lam_adap},
    )


def lambda_grid(n: int, points: int = 20) -> np.ndarray:
    """Log-spaced penalty grid over [1e-4, 1e2] scaled by the sample size."""
    return np.logspace(-4, 2, points) * n


def select_lasso_lambdas(
    X_base_fit,
    Z_fit,
    y_fit,
    w_fit,
    X_base_cal,
    Z_cal,
    y_cal,
    base_columns,
    cand_columns,
    init_grid: np.ndarray | None = None,
    adap_grid: np.ndarray | None = None,
) -> tuple[float, float]:
    """Grid search for the two penalties, minimizing forecast MSE on a
    time-ordered calibration segment disjoint from the fitting segment."""
    n = len(y_fit)
    init_grid = lambda_grid(n) if init_grid is None else np.asarray(init_grid)
    adap_grid = lambda_grid(n) if adap_grid is None else np.asarray(adap_grid)
    best = (np.inf, float(init_grid[0]), float(adap_grid[0]))
    X_cal = np.hstack([X_base_cal, Z_cal])
    for li in init_grid:
        for la in adap_grid:
            fit = fit_adaptive_lasso(
                X_base_fit, Z_fit, y_fit, w_fit, li, la, base_columns, cand_columns
            )
            mse = float(np.mean((y_cal - fit.predict(X_cal)) ** 2))
            if mse < best[0]:
                best = (mse, float(li), float(la))
    return best[1], best[2]
