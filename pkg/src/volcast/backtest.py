"""Rolling-window forecast harness.

For a feature-matrix row indexed by its information date ``t`` (target dated
``t + h``), the estimation window for the forecast issued at ``t`` holds the
most recent rows whose targets are already realized at ``t``, so no fit ever
sees data dated after the forecast's information date.  With an estimation
window of 1000 rows and a 500-row calibration block, the first forecast
target is the 1501st target observation.

Forecasts are made on the log scale, retransformed to the variance scale
with a second-order (half residual variance) correction and clamped by the
insanity filter to the range of realized values in the estimation window.
"""

from __future__ import annotations

import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .features import observation_weights
from .models.csr import ZERO_ERROR_WEIGHT_CAP, csr_combine, enumerate_csr_models
from .models.forest import fit_random_forest, select_rf_hyperparameters
from .models.linear import fit_adaptive_lasso, fit_wls, select_lasso_lambdas
from .models.registry import ModelSpec, design_matrix

logger = logging.getLogger(__name__)

FORECAST_COLUMNS = (
    "symbol",
    "model",
    "date",
    "horizon",
    "forecast_var",
    "forecast_log",
    "filtered",
    "realized",
)


@dataclass(frozen=True)
class BacktestConfig:
    """Rolling-window settings; defaults follow the reference setup
    (1000-row estimation window, 500-row calibration block)."""

    estimation_window: int = 1000
    calibration_window: int = 500
    horizons: tuple[int, ...] = (1,)
    jump_alpha: float = 0.01
    half_life: float = 125.0
    seed: int = 0
    hyper_refresh: int = 125  # re-select hyperparameters every this many forecasts
    csr_delta: float = 0.95
    rf_trees: int = 500

    def __post_init__(self):
        if not self.horizons:
            raise ValueError("horizons must be nonempty")
        if self.estimation_window < 1 or self.calibration_window < 0:
            raise ValueError("invalid window sizes")


@dataclass(frozen=True)
class ForecastRecord:
    """One model's forecast for one stock-day."""

    symbol: str
    model: str
    date: object
    horizon: int
    forecast_var: float
    forecast_log: float
    filtered: bool
    realized: float


def retransform(forecast_log: float, residual_variance: float) -> float:
    """Log-scale point forecast to variance scale, second-order corrected."""
    if residual_variance < 0:
        raise ValueError("residual variance must be nonnegative")
    return math.exp(forecast_log + residual_variance / 2.0)


def insanity_filter(
    forecast_var: float, window_realized: np.ndarray
) -> tuple[float, bool]:
    """Clamp a variance forecast to the realized range of the estimation
    window; returns the (possibly clamped) forecast and a trigger flag."""
    window_realized = np.asarray(window_realized, dtype=float)
    if window_realized.size == 0:
        raise ValueError("empty estimation window")
    lo, hi = float(window_realized.min()), float(window_realized.max())
    if forecast_var < lo:
        return lo, True
    if forecast_var > hi:
        return hi, True
    return forecast_var, False


def _model_seed(seed: int, name: str) -> int:
    return (seed + zlib.crc32(name.encode())) % 2**31


class _Emitter:
    def __init__(self, symbol, model, horizon, dates, target_raw):
        self.records: list[ForecastRecord] = []
        self.symbol = symbol
        self.model = model
        self.horizon = horizon
        self.dates = dates
        self.target_raw = target_raw

    def emit(self, i: int, train: slice, forecast_log: float, resid_var: float):
        fvar = retransform(forecast_log, max(0.0, resid_var))
        fvar, flagged = insanity_filter(fvar, self.target_raw[train])
        self.records.append(
            ForecastRecord(
                symbol=self.symbol,
                model=self.model,
                date=self.dates[i],
                horizon=self.horizon,
                forecast_var=fvar,
                forecast_log=forecast_log,
                filtered=flagged,
                realized=float(self.target_raw[i]),
            )
        )


def _loop_bounds(n_rows: int, est: int, cal: int, h: int) -> tuple[int, int]:
    """(first emitted row, first fittable row)."""
    return est + cal + h - 1, est + h - 1


def _run_wls(matrix, spec, config, horizon, symbol, emitter):
    est, cal, h = config.estimation_window, config.calibration_window, horizon
    first, _ = _loop_bounds(len(matrix), est, cal, h)
    X = design_matrix(matrix, spec.base_features)
    y = matrix["target"].to_numpy()
    w = observation_weights(est, config.half_life)
    for i in range(first, len(matrix)):
        train = slice(i - h - est + 1, i - h + 1)
        try:
            fit = fit_wls(X[train], y[train], w, spec.base_features)
        except Exception:
            logger.exception("%s %s %s: fit failed", symbol, spec.name, matrix.index[i])
            continue
        emitter.emit(i, train, float(X[i] @ fit.coef), fit.resid_var)


def _run_ala(matrix, spec, config, horizon, symbol, emitter):
    est, cal, h = config.estimation_window, config.calibration_window, horizon
    first, _ = _loop_bounds(len(matrix), est, cal, h)
    Xb = design_matrix(matrix, spec.base_features)
    Z = matrix[list(spec.candidate_features)].to_numpy(dtype=float)
    y = matrix["target"].to_numpy()
    w = observation_weights(est, config.half_life)
    refresh = spec.hyper.get("refresh", config.hyper_refresh)
    lam = (spec.hyper.get("lambda_init"), spec.hyper.get("lambda_adap"))
    fixed = lam[0] is not None and lam[1] is not None
    count = 0
    for i in range(first, len(matrix)):
        train = slice(i - h - est + 1, i - h + 1)
        try:
            if not fixed and count % refresh == 0:
                block = slice(i - h - est - cal + 1, i - h + 1)
                lo = block.start
                fit_seg = slice(lo, lo + est)
                cal_seg = slice(lo + est, lo + est + cal)
                lam = select_lasso_lambdas(
                    Xb[fit_seg],
                    Z[fit_seg],
                    y[fit_seg],
                    w,
                    Xb[cal_seg],
                    Z[cal_seg],
                    y[cal_seg],
                    spec.base_features,
                    spec.candidate_features,
                )
            fit = fit_adaptive_lasso(
                Xb[train],
                Z[train],
                y[train],
                w,
                lam[0],
                lam[1],
                spec.base_features,
                spec.candidate_features,
            )
        except Exception:
            logger.exception("%s %s %s: fit failed", symbol, spec.name, matrix.index[i])
            count += 1
            continue
        x_row = np.concatenate([Xb[i], Z[i]])
        emitter.emit(i, train, float(x_row @ fit.coef), fit.resid_var)
        count += 1


def _run_rf(matrix, spec, config, horizon, symbol, emitter):
    est, cal, h = config.estimation_window, config.calibration_window, horizon
    first, _ = _loop_bounds(len(matrix), est, cal, h)
    forced_cols = tuple(c for c in spec.base_features if c != "intercept")
    cols = forced_cols + spec.candidate_features
    X = matrix[list(cols)].to_numpy(dtype=float)
    forced = tuple(range(len(forced_cols)))
    cands = tuple(range(len(forced_cols), len(cols)))
    y = matrix["target"].to_numpy()
    n_trees = spec.hyper.get("n_trees", config.rf_trees)
    refresh = spec.hyper.get("refresh", config.hyper_refresh)
    base_seed = _model_seed(config.seed, spec.name)
    setting = (spec.hyper.get("z"), spec.hyper.get("max_depth", "unset"))
    fixed = setting[0] is not None and setting[1] != "unset"
    count = 0
    for i in range(first, len(matrix)):
        train = slice(i - h - est + 1, i - h + 1)
        try:
            if not fixed and count % refresh == 0:
                lo = i - h - est - cal + 1
                fit_seg = slice(lo, lo + est)
                cal_seg = slice(lo + est, lo + est + cal)
                setting = select_rf_hyperparameters(
                    X[fit_seg],
                    y[fit_seg],
                    X[cal_seg],
                    y[cal_seg],
                    forced,
                    cands,
                    seed=base_seed,
                    n_trees=n_trees,
                )
            fit = fit_random_forest(
                X[train],
                y[train],
                forced,
                cands,
                z=setting[0],
                max_depth=setting[1],
                seed=base_seed + i,
                n_trees=n_trees,
            )
        except Exception:
            logger.exception("%s %s %s: fit failed", symbol, spec.name, matrix.index[i])
            count += 1
            continue
        emitter.emit(i, train, float(fit.predict(X[i : i + 1])[0]), fit.resid_var)
        count += 1


def _dmse_weights(err_matrix: np.ndarray, delta: float) -> np.ndarray:
    s = err_matrix.shape[0]
    disc = delta ** np.arange(s - 1, -1, -1)
    acc = disc @ err_matrix / s
    weights = np.where(acc > 0, 1.0 / np.where(acc > 0, acc, 1.0), ZERO_ERROR_WEIGHT_CAP)
    return np.minimum(weights, ZERO_ERROR_WEIGHT_CAP)


def _run_csr(matrix, spec, config, horizon, symbol, emitter):
    est, cal, h = config.estimation_window, config.calibration_window, horizon
    first, start = _loop_bounds(len(matrix), est, cal, h)
    k = spec.hyper.get("k", 2)
    delta = spec.hyper.get("delta", config.csr_delta)
    s_max = spec.hyper.get("s", cal)
    subsets = enumerate_csr_models(spec.candidate_features, k=k)
    cols = spec.base_features + spec.candidate_features
    X = design_matrix(matrix, cols)
    nb = len(spec.base_features)
    pos = {c: nb + j for j, c in enumerate(spec.candidate_features)}
    sub_idx = [list(range(nb)) + [pos[c] for c in sub] for sub in subsets]
    y = matrix["target"].to_numpy()
    w = observation_weights(est, config.half_life)
    wsum = w.sum()

    err_rows: list[tuple[int, np.ndarray]] = []  # (row index, squared errors)
    audit: list[tuple[object, list[tuple[str, ...]]]] = []

    for i in range(start, len(matrix)):
        train = slice(i - h - est + 1, i - h + 1)
        Xw = X[train] * w[:, None]
        G = X[train].T @ Xw
        b = X[train].T @ (w * y[train])
        yWy = float(np.sum(w * y[train] ** 2))
        fsub = np.empty(len(subsets))
        rvar = np.empty(len(subsets))
        for m, idx in enumerate(sub_idx):
            Gm = G[np.ix_(idx, idx)]
            bm = b[idx]
            try:
                c = np.linalg.solve(Gm, bm)
            except np.linalg.LinAlgError:
                c = np.linalg.lstsq(Gm, bm, rcond=None)[0]
            fsub[m] = X[i, idx] @ c
            rvar[m] = max(0.0, (yWy - 2.0 * c @ bm + c @ Gm @ c) / wsum)
        if i >= first:
            usable = [e for j, e in err_rows if j <= i - h][-s_max:]
            try:
                weights = _dmse_weights(np.asarray(usable), delta)
                value, mask = csr_combine(fsub, weights)
            except Exception:
                logger.exception("%s %s %s: combine failed", symbol, spec.name, matrix.index[i])
                err_rows.append((i, (fsub - y[i]) ** 2))
                continue
            emitter.emit(i, train, value, float(rvar[mask].mean()))
            audit.append((matrix.index[i], [subsets[m] for m in np.flatnonzero(mask)]))
        err_rows.append((i, (fsub - y[i]) ** 2))
        if len(err_rows) > s_max + h + 1:
            err_rows.pop(0)
    return audit


_RUNNERS = {"wls": _run_wls, "ala": _run_ala, "rf": _run_rf, "csr": _run_csr}


def run_stock(
    matrices: dict[int, pd.DataFrame],
    specs: list[ModelSpec],
    config: BacktestConfig,
    symbol: str,
) -> tuple[list[ForecastRecord], dict]:
    """Rolling forecasts for one stock over all horizons and models.

    ``matrices`` maps horizon to that horizon's feature matrix.  Returns the
    forecast records plus, for CSR models, the per-day preferred-cluster
    submodel audit used for variable importance.
    """
    records: list[ForecastRecord] = []
    audits: dict[str, dict[int, list]] = {}
    for h in config.horizons:
        matrix = matrices[h]
        need = config.estimation_window + config.calibration_window + h
        if len(matrix) < need:
            logger.warning(
                "%s h=%d: %d rows < %d required; no forecasts", symbol, h, len(matrix), need
            )
            continue
        for spec in specs:
            emitter = _Emitter(
                symbol, spec.name, h, matrix.index, matrix["target_raw"].to_numpy()
            )
            out = _RUNNERS[spec.family](matrix, spec, config, h, symbol, emitter)
            records.extend(emitter.records)
            if spec.family == "csr":
                audits.setdefault(spec.name, {})[h] = out
    return records, audits


def _run_stock_task(args):
    matrices, specs, config, symbol = args
    return symbol, run_stock(matrices, specs, config, symbol)


def run_backtest(
    data: dict[str, dict[int, pd.DataFrame]],
    specs: list[ModelSpec],
    config: BacktestConfig,
    jobs: int = 1,
) -> tuple[pd.DataFrame, dict]:
    """Run the rolling backtest across stocks.

    Returns a forecast frame with columns ``symbol, model, date, horizon,
    forecast_var, forecast_log, filtered, realized`` (sorted, so repeated
    runs are byte-identical) and the CSR audit per stock.
    """
    tasks = [(data[sym], specs, config, sym) for sym in sorted(data)]
    results: dict[str, tuple[list, dict]] = {}
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for symbol, result in pool.map(_run_stock_task, tasks):
                results[symbol] = result
    else:
        for task in tasks:
            symbol, result = _run_stock_task(task)
            results[symbol] = result

    rows = []
    audits = {}
    for symbol in sorted(results):
        records, audit = results[symbol]
        rows.extend(records)
        if audit:
            audits[symbol] = audit
    frame = pd.DataFrame([r.__dict__ for r in rows], columns=list(FORECAST_COLUMNS))
    frame = frame.sort_values(["symbol", "model", "date", "horizon"], kind="stable")
    return frame.reset_index(drop=True), audits
