"""Synthetic ground-truth data for examples and the acceptance suite.

Minute prices come from a discretized log-price whose daily log-variance is a
persistent first-order autoregression (persistence 0.98 by default), with
compound-Poisson intraday jumps and an overnight gap.  A latent attention
series optionally shifts next-day log-variance, which is what makes the
generated attention/sentiment feature files genuinely predictive.  Everything
is deterministic given the seed.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from .market_data import IntradayPanel, TradingDay
from .realized import ANNUALIZATION

logger = logging.getLogger(__name__)

SVI_BATCH_LEN = 270
SVI_OVERLAP = 10


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic stochastic-volatility-with-jumps process.

    ``mean_daily_vol`` is the stationary daily return standard deviation;
    ``jump_size`` is measured in daily standard deviations; ``attention_coef``
    is the loading of next-day log-variance on the standardized latent
    attention series.
    """

    n_days: int = 300
    session_minutes: int = 391
    mean_daily_vol: float = 0.01
    persistence: float = 0.98
    vol_of_vol: float = 0.1
    jump_intensity: float = 0.05
    jump_size: float = 5.0
    overnight_share: float = 0.2
    attention_coef: float = 0.0
    attention_persistence: float = 0.8
    attention_vol: float = 1.0
    attention_level: float = 10.0
    sentiment_coef: float = 0.0
    start: dt.date = dt.date(2015, 1, 2)
    price0: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if self.n_days < 2 or self.session_minutes < 3:
            raise ValueError("n_days >= 2 and session_minutes >= 3 required")
        if self.mean_daily_vol <= 0:
            raise ValueError("mean_daily_vol must be > 0")
        if not 0 <= self.persistence < 1:
            raise ValueError("persistence must be in [0, 1)")
        if self.vol_of_vol < 0 or self.jump_intensity < 0:
            raise ValueError("vol_of_vol and jump_intensity must be >= 0")
        if not 0 <= self.overnight_share < 1:
            raise ValueError("overnight_share must be in [0, 1)")
        if self.attention_vol <= 0 or not 0 <= self.attention_persistence < 1:
            raise ValueError("invalid attention process parameters")


def _log_variance_mean(config: SynthConfig) -> float:
    """Mean of the log-variance AR so that E[exp(h)] = mean_daily_vol^2.

    The attention contribution to the stationary variance is approximated by
    treating the attention shocks as an AR(1) regressor with known
    autocorrelation; exact when ``attention_coef`` is zero.
    """
    phi, rho = config.persistence, config.attention_persistence
    s2 = (
        config.vol_of_vol**2
        + config.attention_coef**2 * (1 + phi * rho) / (1 - phi * rho)
    ) / (1 - phi**2)
    return 2.0 * math.log(config.mean_daily_vol) - 0.5 * s2


def simulate_stock(
    config: SynthConfig,
) -> tuple[IntradayPanel, pd.Series, pd.Series, pd.Series]:
    """Simulate one stock.

    Returns the minute-price panel plus the unobservable truths: the
    annualized whole-day integrated variance (continuous part, same units as
    the realized-measure output), the boolean jump-day indicator, and the
    latent attention series — all indexed by trading date.
    """
    rng = np.random.default_rng(config.seed)
    dates = pd.bdate_range(config.start, periods=config.n_days)
    n_ret = config.session_minutes - 1

    hbar = _log_variance_mean(config)
    att_sd = config.attention_vol / math.sqrt(1 - config.attention_persistence**2)

    h = hbar
    att = config.attention_level
    log_close = math.log(config.price0)

    days, true_var, jump_flags, attention = [], [], [], []
    for date in dates:
        z_att = (att - config.attention_level) / att_sd
        h = (
            hbar
            + config.persistence * (h - hbar)
            + config.attention_coef * z_att
            + config.vol_of_vol * rng.standard_normal()
        )
        att = config.attention_level + config.attention_persistence * (
            att - config.attention_level
        ) + config.attention_vol * rng.standard_normal()
        att = max(att, 0.0)

        v_day = math.exp(h)
        v_in = v_day * (1 - config.overnight_share)
        v_on = v_day * config.overnight_share

        gap = math.sqrt(v_on) * rng.standard_normal()
        returns = math.sqrt(v_in / n_ret) * rng.standard_normal(n_ret)
        n_jumps = rng.poisson(config.jump_intensity)
        for _ in range(n_jumps):
            minute = rng.integers(0, n_ret)
            sign = 1.0 if rng.random() < 0.5 else -1.0
            returns[minute] += sign * config.jump_size * math.sqrt(v_in)

        log_open = log_close + gap
        log_prices = log_open + np.concatenate([[0.0], np.cumsum(returns)])
        log_close = float(log_prices[-1])
        days.append(TradingDay(date=date.date(), prices=np.exp(log_prices)))
        true_var.append(v_day * ANNUALIZATION)
        jump_flags.append(n_jumps > 0)
        attention.append(att)

    panel = IntradayPanel(symbol="SYNTH", days=tuple(days), session_minutes=config.session_minutes)
    idx = pd.DatetimeIndex(dates, name="date")
    return (
        panel,
        pd.Series(true_var, index=idx, name="true_var"),
        pd.Series(jump_flags, index=idx, name="jump"),
        pd.Series(attention, index=idx, name="attention"),
    )


def svi_batches_from_series(
    values: np.ndarray,
    batch_len: int = SVI_BATCH_LEN,
    overlap: int = SVI_OVERLAP,
) -> list[np.ndarray]:
    """Split a positive ground-truth series into overlapping batches, each
    max-100 normalized and rounded to integers (search-volume style)."""
    x = np.asarray(values, dtype=float)
    if np.any(x < 0):
        raise ValueError("ground-truth series must be nonnegative")
    if batch_len <= overlap:
        raise ValueError("batch_len must exceed overlap")
    batches = []
    start = 0
    while start < len(x):
        chunk = x[start : start + batch_len]
        top = chunk.max()
        scaled = np.zeros_like(chunk) if top == 0 else np.round(100.0 * chunk / top)
        batches.append(scaled)
        if start + batch_len >= len(x):
            break
        start += batch_len - overlap
    return batches


def write_price_csv(panel: IntradayPanel, path, session_start: dt.time = dt.time(9, 30)) -> None:
    """Write a panel as the ``symbol,date,time,price`` minute CSV."""
    t0 = session_start.hour * 60 + session_start.minute
    times = [f"{m // 60:02d}:{m % 60:02d}" for m in range(t0, t0 + panel.session_minutes)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["symbol", "date", "time", "price"])
        for day in panel.days:
            date_s = day.date.isoformat()
            for time_s, price in zip(times, day.prices):
                writer.writerow([panel.symbol, date_s, time_s, f"{price:.6f}"])


def simulate_feature_files(
    config: SynthConfig,
    attention: pd.Series,
    out_dir,
    announcement_cadence: int = 21,
) -> Path:
    """Write raw attention/sentiment input files consistent with ``attention``.

    Produces, in ``out_dir``: ``svi_attention.csv`` (max-normalized rounded
    batches of the latent series), ``docs.csv`` (documents whose negative
    sentiment tracks standardized attention via ``sentiment_coef``),
    ``pageviews.csv``, ``schedule.csv`` (one announcement every
    ``announcement_cadence`` trading days) and the ``manifest.json`` tying
    them together.  Returns the manifest path.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed + 7)
    dates = attention.index
    vals = attention.to_numpy()
    att_sd = config.attention_vol / math.sqrt(1 - config.attention_persistence**2)
    z = (vals - config.attention_level) / att_sd

    batches = svi_batches_from_series(vals)
    with open(out_dir / "svi_attention.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["batch_id", "date", "value"])
        start = 0
        for b, chunk in enumerate(batches):
            for offset, value in enumerate(chunk):
                writer.writerow(
                    [f"b{b:03d}", dates[start + offset].date().isoformat(), f"{value:g}"]
                )
            start += len(chunk) - SVI_OVERLAP

    doc_rows = []
    doc_id = 0
    for date, zt in zip(dates, z):
        neg_mean = float(np.clip(0.5 + config.sentiment_coef * zt, 0.05, 0.95))
        pos_mean = float(np.clip(0.5 - config.sentiment_coef * zt, 0.05, 0.95))
        for topic, n_docs in (("general", 1 + rng.poisson(3)), ("macro", rng.poisson(2))):
            for _ in range(n_docs):
                pos = float(np.clip(rng.normal(pos_mean, 0.05), 0.0, 1.0))
                neg = float(np.clip(rng.normal(neg_mean, 0.05), 0.0, 1.0))
                doc_rows.append(
                    [date.date().isoformat(), topic, f"{pos:.4f}", f"{neg:.4f}", f"d{doc_id}"]
                )
                doc_id += 1
    with open(out_dir / "docs.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "topic", "pos", "neg", "doc_id"])
        writer.writerows(doc_rows)

    with open(out_dir / "pageviews.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "page", "views"])
        for date, a in zip(dates, vals):
            writer.writerow([date.date().isoformat(), "main", int(rng.poisson(50 * max(a, 0.1)))])

    with open(out_dir / "schedule.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["datetime", "variable", "analyst_count"])
        for i in range(announcement_cadence, len(dates), announcement_cadence):
            when = dates[i].date().isoformat() + "T08:30:00"
            writer.writerow([when, "macro", int(round(vals[i]))])

    manifest = {
        "features": [
            {
                "name": "svi_attention",
                "role": "attention_general",
                "source": {"type": "svi", "paths": ["svi_attention.csv"]},
            },
            {
                "name": "doc_count",
                "role": "attention_general",
                "source": {"type": "count", "path": "docs.csv", "topic": "general"},
            },
            {
                "name": "pageviews",
                "role": "attention_macro",
                "source": {"type": "pageview", "path": "pageviews.csv", "page": "main"},
            },
            {
                "name": "sent_neg",
                "role": "sentiment_general",
                "source": {
                    "type": "sentiment",
                    "path": "docs.csv",
                    "topic": "general",
                    "polarity": "neg",
                },
            },
            {
                "name": "sent_pos",
                "role": "sentiment_general",
                "source": {
                    "type": "sentiment",
                    "path": "docs.csv",
                    "topic": "general",
                    "polarity": "pos",
                },
            },
            {
                "name": "sent_macro_neg",
                "role": "sentiment_macro",
                "source": {
                    "type": "sentiment",
                    "path": "docs.csv",
                    "topic": "macro",
                    "polarity": "neg",
                },
            },
            {
                "name": "analysts_macro",
                "role": "analyst",
                "source": {"type": "analyst", "path": "schedule.csv", "variable": "macro"},
            },
        ],
        "schedule": "schedule.csv",
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def simulate_dataset(
    out_dir, n_stocks: int, config: SynthConfig, symbol_prefix: str = "SYN"
) -> pd.DataFrame:
    """Write a full synthetic bundle for ``n_stocks`` stocks.

    Layout: ``prices/<symbol>.csv``, ``features/<symbol>/`` (raw feature
    files plus manifest), ``truth.csv`` and ``sectors.csv``.  Per-stock seeds
    are ``config.seed + 1000 * index``.  Returns the truth table.
    """
    out_dir = Path(out_dir)
    (out_dir / "prices").mkdir(parents=True, exist_ok=True)
    truth_rows = []
    sectors = []
    for i in range(n_stocks):
        symbol = f"{symbol_prefix}{i:03d}"
        stock_cfg = replace(config, seed=config.seed + 1000 * i)
        panel, true_var, jumps, att = simulate_stock(stock_cfg)
        panel = IntradayPanel(
            symbol=symbol, days=panel.days, session_minutes=panel.session_minutes
        )
        write_price_csv(panel, out_dir / "prices" / f"{symbol}.csv")
        simulate_feature_files(stock_cfg, att, out_dir / "features" / symbol)
        truth_rows.append(
            pd.DataFrame(
                {
                    "symbol": symbol,
                    "date": true_var.index,
                    "true_var": true_var.to_numpy(),
                    "jump": jumps.to_numpy(),
                    "attention": att.to_numpy(),
                }
            )
        )
        sectors.append({"symbol": symbol, "sector": f"S{i % 5}"})
        logger.info("simulated %s (%d days)", symbol, len(panel))
    truth = pd.concat(truth_rows, ignore_index=True)
    truth.to_csv(out_dir / "truth.csv", index=False)
    pd.DataFrame(sectors).to_csv(out_dir / "sectors.csv", index=False)
    return truth
