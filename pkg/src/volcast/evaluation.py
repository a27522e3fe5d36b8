"""Forecast evaluation: losses, model comparison tests, reports.

Losses are computed on the variance scale.  Cross-model comparisons use
two-model confidence-set tests with a moving-block bootstrap and one-sided
Wilcoxon signed-rank tests across stocks with Holm's step-down correction.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.stats import rankdata, wilcoxon

logger = logging.getLogger(__name__)

LOSS_KINDS = ("mse", "qlike", "mae", "mape")

MCS_BOOTSTRAP = 2000


def loss(realized: np.ndarray, forecast: np.ndarray, kind: str = "mse") -> float:
    """Average forecast loss of one series.

    ``qlike`` and ``mape`` need strictly positive inputs; offending rows are
    excluded with a logged count.
    """
    r = np.asarray(realized, dtype=float)
    f = np.asarray(forecast, dtype=float)
    if r.shape != f.shape or r.size == 0:
        raise ValueError("realized/forecast must be equal-length and nonempty")
    if kind in ("qlike", "mape"):
        ok = (r > 0) & (f > 0)
        if not ok.all():
            logger.warning("%s: excluded %d nonpositive rows", kind, int((~ok).sum()))
        r, f = r[ok], f[ok]
        if r.size == 0:
            raise ValueError(f"{kind}: no valid rows")
    if kind == "mse":
        return float(np.mean((r - f) ** 2))
    if kind == "mae":
        return float(np.mean(np.abs(r - f)))
    if kind == "mape":
        return float(np.mean(np.abs((r - f) / r)))
    if kind == "qlike":
        u = r / f
        return float(np.mean(u - np.log(u) - 1.0))
    raise ValueError(f"unknown loss kind {kind!r}")


def loss_table(forecasts: pd.DataFrame, kinds=LOSS_KINDS) -> pd.DataFrame:
    """Average loss per (symbol, model, horizon, kind), long format."""
    rows = []
    for (symbol, model, horizon), group in forecasts.groupby(
        ["symbol", "model", "horizon"], sort=True
    ):
        for kind in kinds:
            rows.append(
                {
                    "symbol": symbol,
                    "model": model,
                    "horizon": horizon,
                    "loss": kind,
                    "value": loss(group["realized"], group["forecast_var"], kind),
                }
            )
    return pd.DataFrame(rows)


def rank_table(losses: pd.DataFrame) -> pd.DataFrame:
    """Per-stock model ranks (midranks for ties), per horizon and loss kind."""
    out = losses.copy()
    out["rank"] = out.groupby(["symbol", "horizon", "loss"])["value"].transform(
        lambda v: rankdata(v, method="average")
    )
    return out


def improvement(losses: pd.DataFrame, benchmark: str = "HAR") -> pd.DataFrame:
    """Percent loss improvement vs the benchmark, positive = better."""
    wide = losses.pivot_table(
        index=["symbol", "horizon", "loss"], columns="model", values="value"
    )
    if benchmark not in wide.columns:
        raise ValueError(f"benchmark {benchmark!r} not among models")
    bench = wide[benchmark]
    imp = 100.0 * (bench.to_numpy()[:, None] - wide.to_numpy()) / bench.to_numpy()[:, None]
    return pd.DataFrame(imp, index=wide.index, columns=wide.columns)


def moving_block_bootstrap_means(
    d: np.ndarray, n_boot: int, rng: np.random.Generator, block_len: int | None = None
) -> np.ndarray:
    """Bootstrap distribution of the series mean via moving blocks."""
    n = len(d)
    if block_len is None:
        block_len = max(1, math.ceil(n ** (1.0 / 3.0)))
    block_len = min(block_len, n)
    n_blocks = math.ceil(n / block_len)
    starts = rng.integers(0, n - block_len + 1, size=(n_boot, n_blocks))
    idx = (starts[:, :, None] + np.arange(block_len)).reshape(n_boot, -1)[:, :n]
    return d[idx].mean(axis=1)


def pairwise_mcs(
    loss_i: np.ndarray,
    loss_j: np.ndarray,
    alpha: float = 0.05,
    n_boot: int = MCS_BOOTSTRAP,
    block_len: int | None = None,
    seed: int = 0,
) -> tuple[bool, bool]:
    """Two-model confidence-set test on a loss differential series.

    Tests equal expected loss with a moving-block bootstrap; on rejection at
    ``alpha`` the model with the larger average loss is eliminated.  Returns
    survival flags ``(model_i, model_j)``.
    """
    d = np.asarray(loss_i, dtype=float) - np.asarray(loss_j, dtype=float)
    if np.all(d == 0):
        return True, True
    rng = np.random.default_rng(seed)
    boot = moving_block_bootstrap_means(d, n_boot, rng, block_len)
    mean = d.mean()
    p = float(np.mean(np.abs(boot - boot.mean()) >= abs(mean)))
    if p >= alpha:
        return True, True
    return (mean < 0, mean > 0) if mean != 0 else (True, True)


def mcs_survival_shares(
    forecasts: pd.DataFrame,
    alpha: float = 0.05,
    n_boot: int = MCS_BOOTSTRAP,
    seed: int = 0,
    horizon: int | None = None,
) -> pd.DataFrame:
    """Share of stocks in which the column model survives the pairwise test
    against the row model (squared-error loss differentials)."""
    f = forecasts if horizon is None else forecasts[forecasts["horizon"] == horizon]
    models = sorted(f["model"].unique())
    shares = pd.DataFrame(np.nan, index=models, columns=models)
    survive_counts = {(a, b): [0, 0] for a in models for b in models if a < b}
    for symbol, group in f.groupby("symbol"):
        wide_r = group.pivot_table(index="date", columns="model", values="realized")
        wide_f = group.pivot_table(index="date", columns="model", values="forecast_var")
        sq = (wide_r - wide_f) ** 2
        for a, b in survive_counts:
            sub = sq[[a, b]].dropna()
            if sub.empty:
                continue
            si, sj = pairwise_mcs(
                sub[a].to_numpy(), sub[b].to_numpy(), alpha, n_boot, seed=seed
            )
            survive_counts[(a, b)][0] += si
            survive_counts[(a, b)][1] += sj
    n_stocks = f["symbol"].nunique()
    for (a, b), (ca, cb) in survive_counts.items():
        shares.loc[b, a] = ca / n_stocks  # column model a vs row model b
        shares.loc[a, b] = cb / n_stocks
    return shares


def holm_adjust(pvalues: np.ndarray) -> np.ndarray:
    """Holm step-down adjusted p-values (monotone, >= raw)."""
    p = np.asarray(pvalues, dtype=float)
    m = len(p)
    order = np.argsort(p, kind="stable")
    stepped = (m - np.arange(m)) * p[order]
    adj = np.maximum.accumulate(stepped)
    out = np.empty(m)
    out[order] = np.minimum(adj, 1.0)
    return out


def wilcoxon_holm(per_stock_losses: pd.DataFrame) -> pd.DataFrame:
    """Holm-corrected one-sided Wilcoxon p-values across stocks.

    ``per_stock_losses`` is stocks x models.  Entry (row i, column j) tests
    the alternative that column model j outperforms row model i (smaller
    losses).  The correction family is all ordered pairs.
    """
    models = list(per_stock_losses.columns)
    raw = {}
    for i in models:
        for j in models:
            if i == j:
                continue
            diff = per_stock_losses[i] - per_stock_losses[j]
            diff = diff.dropna()
            if len(diff) < 6:
                raise ValueError("need >= 6 paired observations")
            if np.all(diff == 0):
                raw[(i, j)] = 1.0
            else:
                raw[(i, j)] = float(
                    wilcoxon(diff.to_numpy(), alternative="greater").pvalue
                )
    keys = list(raw)
    adj = holm_adjust(np.array([raw[k] for k in keys]))
    table = pd.DataFrame(np.nan, index=models, columns=models)
    for (i, j), p in zip(keys, adj):
        table.loc[i, j] = p
    return table


def decile_split(
    forecasts: pd.DataFrame, fraction: float = 0.10
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Partition each stock's forecast days into the highest-variation slice
    and the rest.  Ties in realized variance break by date, latest first."""
    high_parts, low_parts = [], []
    for symbol, group in forecasts.groupby("symbol"):
        days = group[["date", "realized"]].drop_duplicates("date")
        if len(days) < 10:
            raise ValueError(f"{symbol}: need >= 10 forecast days")
        days = days.sort_values(["realized", "date"], ascending=[False, False])
        n_high = int(len(days) * fraction)
        high_dates = set(days["date"].head(n_high))
        mask = group["date"].isin(high_dates)
        high_parts.append(group[mask])
        low_parts.append(group[~mask])
    return (
        pd.concat(high_parts).reset_index(drop=True),
        pd.concat(low_parts).reset_index(drop=True),
    )


def csr_importance(audits: dict, model: str, horizon: int = 1) -> pd.Series:
    """Share of preferred-cluster submodels using each feature, in percent.

    For each stock and day, every submodel in the preferred cluster
    contributes its features once; a feature's share is its appearance count
    divided by the total number of preferred submodels across days.  Shares
    are averaged across stocks.
    """
    per_stock = []
    for symbol, by_model in audits.items():
        days = by_model.get(model, {}).get(horizon, [])
        counts: dict[str, int] = {}
        total = 0
        for _date, submodels in days:
            for features in submodels:
                total += 1
                for feat in features:
                    counts[feat] = counts.get(feat, 0) + 1
        if total:
            per_stock.append(pd.Series(counts, dtype=float) / total * 100.0)
    if not per_stock:
        return pd.Series(dtype=float)
    table = pd.DataFrame(per_stock).fillna(0.0)
    return table.mean(axis=0).sort_values(ascending=False)


def outperformance_share(
    losses: pd.DataFrame, benchmark: str = "HAR"
) -> pd.DataFrame:
    """Percent of stocks where each model strictly beats the benchmark
    (ties count against the competing model)."""
    wide = losses.pivot_table(
        index=["symbol", "horizon", "loss"], columns="model", values="value"
    )
    bench = wide[benchmark]
    wins = wide.lt(bench, axis=0)
    return 100.0 * wins.groupby(level=["horizon", "loss"]).mean()


def write_report(
    forecasts: pd.DataFrame,
    out_dir,
    audits: dict | None = None,
    sectors: pd.Series | None = None,
    benchmark: str = "HAR",
    alpha: float = 0.05,
    n_boot: int = MCS_BOOTSTRAP,
    seed: int = 0,
    csr_models: tuple[str, ...] = ("CSR-A", "CSR-S"),
) -> dict:
    """Full evaluation bundle: losses, ranks, tests, importance, text report.

    Writes ``losses.csv``, ``ranks.csv``, ``mcs.csv``, ``wilcoxon.csv``,
    ``importance.csv`` and ``report.txt`` into ``out_dir`` and returns the
    tables.  ``sectors`` (symbol -> sector) adds a sector breakdown; when it
    is missing the breakdown is skipped with a warning.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    losses = loss_table(forecasts)
    ranks = rank_table(losses)
    imp = improvement(losses, benchmark)
    shares = outperformance_share(losses, benchmark)
    losses.to_csv(out_dir / "losses.csv", index=False)
    ranks.to_csv(out_dir / "ranks.csv", index=False)

    mse_by_stock = losses[losses["loss"] == "mse"].pivot_table(
        index="symbol", columns="model", values="value"
    )
    tables: dict = {"losses": losses, "ranks": ranks, "improvement": imp, "shares": shares}

    if mse_by_stock.shape[0] >= 6:
        wilc = wilcoxon_holm(mse_by_stock)
        wilc.to_csv(out_dir / "wilcoxon.csv")
        tables["wilcoxon"] = wilc
    else:
        logger.warning("fewer than 6 stocks: Wilcoxon table skipped")

    mcs = mcs_survival_shares(forecasts, alpha=alpha, n_boot=n_boot, seed=seed)
    mcs.to_csv(out_dir / "mcs.csv")
    tables["mcs"] = mcs

    importance_frames = {}
    if audits:
        for model in csr_models:
            series = csr_importance(audits, model)
            if not series.empty:
                importance_frames[model] = series
    if importance_frames:
        imp_table = pd.DataFrame(importance_frames)
        imp_table.to_csv(out_dir / "importance.csv")
        tables["importance"] = imp_table

    lines = ["volcast evaluation report", "=" * 40, ""]
    lines.append(f"stocks: {forecasts['symbol'].nunique()}  benchmark: {benchmark}")
    lines.append("")
    lines.append("Panel A: % of stocks outperforming the benchmark (per loss)")
    lines.append(shares.round(2).to_string())
    lines.append("")
    avg_rank = (
        ranks[ranks["loss"] == "mse"].groupby("model")["rank"].mean().sort_values()
    )
    lines.append("Panel B: average rank (MSE)")
    lines.append(avg_rank.round(2).to_string())
    lines.append("")
    imp_mse = imp.xs("mse", level="loss")
    lines.append("Panel C: % improvement vs benchmark (MSE), quantiles over stocks")
    lines.append(
        imp_mse.describe(percentiles=[0.25, 0.5, 0.75]).round(2).to_string()
    )
    if sectors is not None:
        merged = losses[losses["loss"] == "mse"].merge(
            sectors.rename("sector"), left_on="symbol", right_index=True, how="left"
        )
        lines.append("")
        lines.append("Sector breakdown: % outperforming benchmark (MSE)")
        wide = merged.pivot_table(index=["symbol", "sector"], columns="model", values="value")
        wins = wide.lt(wide[benchmark], axis=0)
        lines.append((100.0 * wins.groupby(level="sector").mean()).round(2).to_string())
    if "importance" in tables:
        lines.append("")
        lines.append("CSR variable importance (% of preferred submodels)")
        lines.append(tables["importance"].round(2).to_string())
    (out_dir / "report.txt").write_text("\n".join(lines) + "\n")
    return tables
