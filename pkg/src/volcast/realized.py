"""Daily realized measures from intraday returns.

All variance-scale quantities are annualized to percent-squared units with a
common factor 100^2 * 252 so that overnight and intraday parts are
commensurate.  Quarticity (``med_rq``) carries the squared factor, which keeps
the ratio MedRQ / MedRV^2 used by the jump test unit-free.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, asdict
from datetime import date as Date

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view
from scipy.stats import norm

from .market_data import IntradayPanel, TradingDay, intraday_returns, overnight_return

logger = logging.getLogger(__name__)

#: Annualization factor for variance-scale measures (percent-squared units).
ANNUALIZATION = 100.0**2 * 252.0

_MEDRV_CONST = math.pi / (6.0 - 4.0 * math.sqrt(3.0) + math.pi)
_MEDRQ_CONST = 3.0 * math.pi / (9.0 * math.pi + 72.0 - 52.0 * math.sqrt(3.0))


@dataclass(frozen=True)
class RealizedRecord:
    """All realized measures for one stock-day, raw (annualized) scale."""

    date: Date
    rv_in: float
    rv_on: float
    rv: float
    medrv: float
    medrq: float
    jt_stat: float
    jc: float
    cc: float
    rs_pos: float
    rs_neg: float
    sj: float
    n_returns: int


def realized_variance(returns: np.ndarray, annualize: bool = True) -> float:
    """Sum of squared returns, optionally annualized."""
    returns = np.asarray(returns, dtype=float)
    if returns.size == 0:
        raise ValueError("realized_variance: empty return vector")
    rv = float(np.sum(returns**2))
    return rv * ANNUALIZATION if annualize else rv


def grid_averaged_rv(day: TradingDay, step: int = 5) -> float:
    """Mean of the realized variances over all ``step`` offset grids."""
    rvs = []
    for offset in range(step):
        r = intraday_returns(day, step=step, offset=offset)
        if r.size == 0:
            raise ValueError(f"{day.date}: day too short for step={step} grids")
        rvs.append(realized_variance(r))
    return float(np.mean(rvs))


def whole_day_rv(rv_on: float, rv_in: float, weights: tuple[float, float]) -> float:
    """Weighted whole-day variance ``w1 * rv_on + w2 * rv_in``."""
    w1, w2 = weights
    if w1 < 0 or w2 < 0:
        raise ValueError(f"weights must be nonnegative, got {weights}")
    return w1 * rv_on + w2 * rv_in


def estimate_on_in_weights(
    rv_on: np.ndarray,
    rv_in: np.ndarray,
    proxy: np.ndarray | None = None,
    clip: tuple[float, float] = (0.0, 5.0),
) -> tuple[float, float]:
    """Variance-minimizing overnight/intraday combination weights.

    Follows the Hansen-Lunde construction: with mu0, mu1, mu2 the sample
    means of the proxy, overnight, and intraday series, the combination
    ``(1 - phi) * mu0/mu1 * rv_on + phi * mu0/mu2 * rv_in`` is unbiased for
    the proxy mean for any phi; phi is chosen to minimize its sample
    variance (closed form from second moments).  Weights are clipped to
    ``clip``.  Needs at least 60 observations.
    """
    rv_on = np.asarray(rv_on, dtype=float)
    rv_in = np.asarray(rv_in, dtype=float)
    if proxy is None:
        proxy = rv_on + rv_in
    proxy = np.asarray(proxy, dtype=float)
    n = len(proxy)
    if not (len(rv_on) == len(rv_in) == n):
        raise ValueError("rv_on, rv_in and proxy must have equal length")
    if n < 60:
        raise ValueError(f"need >= 60 observations to estimate weights, got {n}")

    mu0, mu1, mu2 = proxy.mean(), rv_on.mean(), rv_in.mean()
    if mu0 <= 0 or mu1 <= 0 or mu2 <= 0 or proxy.std() == 0:
        logger.warning("degenerate history for weight estimation; using (1, 1)")
        return (1.0, 1.0)

    a = mu0 * rv_on / mu1
    b = mu0 * rv_in / mu2
    va, vb = a.var(), b.var()
    cab = np.cov(a, b, bias=True)[0, 1]
    denom = va + vb - 2.0 * cab  # = Var(a - b)
    if va == 0 and vb == 0:
        logger.warning("zero-variance history for weight estimation; using (1, 1)")
        return (1.0, 1.0)
    phi = 0.5 if denom <= 0 else (va - cab) / denom
    w1 = float(np.clip((1.0 - phi) * mu0 / mu1, *clip))
    w2 = float(np.clip(phi * mu0 / mu2, *clip))
    return (w1, w2)


def _median_triples(returns: np.ndarray) -> np.ndarray:
    a = np.abs(np.asarray(returns, dtype=float))
    if a.size < 3:
        raise ValueError(f"need >= 3 returns, got {a.size}")
    return np.median(sliding_window_view(a, 3), axis=1)


def med_rv(returns: np.ndarray, annualize: bool = True) -> float:
    """Median realized variance (jump-robust), annualized like RV."""
    med = _median_triples(returns)
    n = len(returns)
    val = _MEDRV_CONST * (n / (n - 2.0)) * float(np.sum(med**2))
    return val * ANNUALIZATION if annualize else val


def med_rq(returns: np.ndarray, annualize: bool = True) -> float:
    """Median realized quarticity, annualized with the squared RV factor."""
    med = _median_triples(returns)
    n = len(returns)
    val = _MEDRQ_CONST * n * (n / (n - 2.0)) * float(np.sum(med**4))
    return val * ANNUALIZATION**2 if annualize else val


def jump_test(rv_in: float, medrv: float, medrq: float, n: int) -> float:
    """Jump test statistic; asymptotically standard normal on no-jump days.

    Defined as 0 when either variance estimate is zero (no-jump day).
    """
    if rv_in <= 0 or medrv <= 0:
        return 0.0
    ratio = max(1.0, medrq / medrv**2)
    return math.sqrt(n) * ((rv_in - medrv) / rv_in) / math.sqrt(0.96 * ratio)


def jump_split(
    rv_in: float, medrv: float, jt_stat: float, alpha: float = 0.01
) -> tuple[float, float]:
    """Split intraday variance into jump and continuous components.

    Rejecting days get ``jc = max(0, rv_in - medrv)`` and ``cc = medrv``;
    otherwise the whole intraday variance is continuous.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must be in (0, 0.5), got {alpha}")
    if jt_stat > norm.ppf(1.0 - alpha):
        return max(0.0, rv_in - medrv), medrv
    return 0.0, rv_in


def semivariances(returns: np.ndarray, annualize: bool = True) -> tuple[float, float]:
    """Positive and negative realized semivariances (zero returns count as
    negative)."""
    r = np.asarray(returns, dtype=float)
    if r.size == 0:
        raise ValueError("semivariances: empty return vector")
    scale = ANNUALIZATION if annualize else 1.0
    rs_pos = float(np.sum(r[r > 0] ** 2)) * scale
    rs_neg = float(np.sum(r[r <= 0] ** 2)) * scale
    return rs_pos, rs_neg


def signed_jump(rs_pos: float, rs_neg: float) -> float:
    """Signed jump variation, the semivariance difference."""
    return rs_pos - rs_neg


def averaged_grid_returns(day: TradingDay, step: int = 5) -> np.ndarray:
    """Pointwise average of the returns across all ``step`` offset grids.

    Offset grids can differ in length by one return; they are truncated to
    the common length before averaging.
    """
    grids = [intraday_returns(day, step=step, offset=o) for o in range(step)]
    n = min(len(g) for g in grids)
    if n < 3:
        raise ValueError(f"{day.date}: too few returns for averaged grid")
    return np.mean([g[:n] for g in grids], axis=0)


def compute_record(
    prev: TradingDay,
    day: TradingDay,
    step: int = 5,
    alpha: float = 0.01,
    weights: tuple[float, float] = (1.0, 1.0),
) -> RealizedRecord:
    """All realized measures for one day, given the previous day's close."""
    rv_in = grid_averaged_rv(day, step=step)

    # semivariances per grid, then averaged, so RS+ + RS- = RV_IN carries over
    pos, neg = [], []
    for o in range(step):
        p, m = semivariances(intraday_returns(day, step=step, offset=o))
        pos.append(p)
        neg.append(m)
    rs_pos, rs_neg = float(np.mean(pos)), float(np.mean(neg))

    avg = averaged_grid_returns(day, step=step)
    medrv = med_rv(avg)
    medrq = med_rq(avg)
    jt = jump_test(rv_in, medrv, medrq, len(avg))
    jc, cc = jump_split(rv_in, medrv, jt, alpha=alpha)

    r_on = overnight_return(prev, day)
    rv_on = r_on**2 * ANNUALIZATION

    return RealizedRecord(
        date=day.date,
        rv_in=rv_in,
        rv_on=rv_on,
        rv=whole_day_rv(rv_on, rv_in, weights),
        medrv=medrv,
        medrq=medrq,
        jt_stat=jt,
        jc=jc,
        cc=cc,
        rs_pos=rs_pos,
        rs_neg=rs_neg,
        sj=signed_jump(rs_pos, rs_neg),
        n_returns=len(avg),
    )


def compute_records(
    panel: IntradayPanel,
    step: int = 5,
    alpha: float = 0.01,
    weights: tuple[float, float] = (1.0, 1.0),
) -> pd.DataFrame:
    """Realized measures for every day of the panel (first day is skipped:
    it has no overnight return).  Returns a date-indexed frame, raw scale."""
    records = [
        compute_record(prev, day, step=step, alpha=alpha, weights=weights)
        for prev, day in zip(panel.days, panel.days[1:])
    ]
    frame = pd.DataFrame([asdict(r) for r in records])
    return frame.set_index("date")


def reweight_whole_day(frame: pd.DataFrame, weights: tuple[float, float]) -> pd.DataFrame:
    """Recompute the ``rv`` column of a realized-measures frame with new
    overnight/intraday weights."""
    out = frame.copy()
    out["rv"] = whole_day_rv(frame["rv_on"].to_numpy(), frame["rv_in"].to_numpy(), weights)
    return out
