"""Model-ready feature assembly.

Builds one regressor row per stock-day: log-scale daily/weekly/monthly
volatility averages, the variance-component columns at the same horizons,
log-transformed attention/sentiment columns, announcement dummies and the
dummy interaction terms, plus the (log) forecast target ``h`` days ahead.
Horizon averages are taken on the raw scale and logged afterwards, matching
the retransformation step.
"""

from __future__ import annotations

import json
import logging
import math

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

HORIZONS = {"d": 1, "w": 5, "m": 22}

#: realized-measure columns carried into the design matrix at D/W/M horizons
COMPONENT_COLUMNS = ("jc", "cc", "rs_pos", "rs_neg", "sj")


def log_transform(x):
    """ln(x) for x > 0, and ln(1 + x) = 0 at x = 0.  Negative input is an
    error; use :func:`signed_jump_transform` for sign-carrying series."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise ValueError("log_transform requires nonnegative input")
    out = np.where(arr > 0, np.log(np.where(arr > 0, arr, 1.0)), 0.0)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def signed_jump_transform(sj):
    """Log transform for signed jumps: ln(sj) if positive, 0 at zero,
    -ln(|sj|) if negative."""
    arr = np.asarray(sj, dtype=float)
    mag = np.abs(arr)
    with np.errstate(divide="ignore"):
        logmag = np.where(mag > 0, np.log(np.where(mag > 0, mag, 1.0)), 0.0)
    out = np.where(arr > 0, logmag, np.where(arr < 0, -logmag, 0.0))
    return float(out) if np.isscalar(sj) or arr.ndim == 0 else out


def horizon_average(series: pd.Series, horizon: int, date) -> float:
    """Log of the trailing ``horizon``-day mean of a raw-scale series, ending
    at ``date`` inclusive."""
    window = series.loc[:date].tail(horizon)
    if len(window) < horizon:
        raise ValueError(f"insufficient history for horizon {horizon} at {date}")
    return log_transform(float(window.mean()))


def observation_weights(n: int, half_life: float) -> np.ndarray:
    """Exponentially declining observation weights, newest last.

    ``w_t`` is proportional to ``exp(-ln2 * (n - t) / half_life)`` and the
    vector is normalized to sum to ``n``; an infinite half-life gives equal
    weights.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not half_life > 0:
        raise ValueError(f"half_life must be > 0, got {half_life}")
    if math.isinf(half_life):
        return np.ones(n)
    t = np.arange(1, n + 1)
    w = np.exp(-math.log(2.0) * (n - t) / half_life)
    return w * (n / w.sum())


def standardize(
    frame: pd.DataFrame, stats: pd.DataFrame | None = None
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Column-wise (x - mean) / sd using estimation-window statistics.

    With ``stats=None`` the statistics are computed from ``frame`` itself
    (the estimation window); constant columns are dropped with a warning.
    Pass the returned stats to transform test rows consistently.
    """
    if stats is None:
        mean = frame.mean()
        sd = frame.std(ddof=0)
        constant = sd[sd == 0].index
        if len(constant):
            logger.warning("dropping constant columns: %s", list(constant))
        keep = sd[sd > 0].index
        stats = pd.DataFrame({"mean": mean[keep], "sd": sd[keep]})
    out = (frame[stats.index] - stats["mean"]) / stats["sd"]
    return out, stats


def _trailing_mean(values: np.ndarray, horizon: int) -> np.ndarray:
    return pd.Series(values).rolling(horizon).mean().to_numpy()


def build_feature_matrix(
    realized: pd.DataFrame,
    features: pd.DataFrame | None = None,
    horizon: int = 1,
) -> pd.DataFrame:
    """Assemble the design matrix for one stock.

    ``realized`` is a date-indexed realized-measures frame (see
    :mod:`volcast.realized`); ``features`` an optional date-indexed
    attention/sentiment frame with column roles in ``attrs["roles"]``.
    The returned frame is indexed by the information date ``t``; ``target``
    is the log of the mean whole-day variance over ``t+1 .. t+horizon`` and
    ``target_raw`` its raw-scale counterpart.  Rows lacking the 22-day
    feature history or the target window are dropped.  Column roles are in
    ``attrs["roles"]``.
    """
    idx = pd.DatetimeIndex(pd.to_datetime(realized.index))
    rv = realized["rv"].to_numpy(dtype=float)
    n = len(rv)
    cols: dict[str, np.ndarray] = {}
    roles: dict[str, str] = {}

    for suffix, h in HORIZONS.items():
        cols[f"rv_{suffix}"] = log_transform(np.nan_to_num(_trailing_mean(rv, h), nan=0.0))
        roles[f"rv_{suffix}"] = "har"
    for comp in COMPONENT_COLUMNS:
        values = realized[comp].to_numpy(dtype=float)
        transform = signed_jump_transform if comp == "sj" else log_transform
        for suffix, h in HORIZONS.items():
            avg = np.nan_to_num(_trailing_mean(values, h), nan=0.0)
            cols[f"{comp}_{suffix}"] = transform(np.abs(avg)) if comp != "sj" else transform(avg)
            roles[f"{comp}_{suffix}"] = "component"

    if features is not None:
        feat = features.reindex(idx)
        if feat.isna().any().any():
            missing = feat.columns[feat.isna().any()].tolist()
            raise ValueError(f"feature columns not covering the calendar: {missing}")
        feat_roles = features.attrs.get("roles", {})
        for name in feat.columns:
            role = feat_roles.get(name, "attention_general")
            values = feat[name].to_numpy(dtype=float)
            if role == "dummy":
                cols[name] = values
            else:
                cols[name] = log_transform(values)
            roles[name] = role
        # HAR-M interaction terms: daily log volatility times next-day dummy
        for name in feat.columns:
            if feat_roles.get(name) == "dummy":
                inter = f"rv_d_x_{name}"
                cols[inter] = cols["rv_d"] * cols[name]
                roles[inter] = "interaction"

    # direct h-step target: mean raw whole-day variance over t+1 .. t+h
    target_raw = np.full(n, np.nan)
    for i in range(n - horizon):
        target_raw[i] = rv[i + 1 : i + 1 + horizon].mean()
    cols["target_raw"] = target_raw
    cols["target"] = np.where(
        np.isnan(target_raw), np.nan, log_transform(np.nan_to_num(target_raw, nan=1.0))
    )
    roles["target_raw"] = roles["target"] = "target"

    frame = pd.DataFrame(cols, index=idx)
    warmup = max(HORIZONS.values()) - 1
    frame = frame.iloc[warmup:]
    frame = frame[~frame["target"].isna()]
    frame.attrs["roles"] = roles
    frame.attrs["horizon"] = horizon
    frame.index.name = "date"
    return frame


def write_column_manifest(frame: pd.DataFrame, path) -> None:
    """Dump the column-to-role map of a feature matrix as JSON."""
    roles = frame.attrs.get("roles", {})
    with open(path, "w") as fh:
        json.dump({c: roles.get(c, "unknown") for c in frame.columns}, fh, indent=2)
