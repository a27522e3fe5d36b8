"""Loading and calendar alignment of 1-minute equity prices.

Input files are CSV with one row per minute: ``symbol,date,time,price``
(header required, times exchange-local).  Each trading day is aligned onto a
fixed minute grid; missing minutes are forward-filled from the last observed
price, which produces a zero return for the imputed slot.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

#: Default regular session 09:30-16:00: the open plus 390 minute closes.
SESSION_START = dt.time(9, 30)
SESSION_END = dt.time(16, 0)


class PriceDataError(ValueError):
    """Raised for malformed or invalid price input."""


@dataclass(frozen=True)
class TradingDay:
    """One day of grid-aligned minute prices."""

    date: dt.date
    prices: np.ndarray
    imputed: int = 0

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        if prices.ndim != 1 or len(prices) == 0:
            raise PriceDataError(f"{self.date}: empty price grid")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            raise PriceDataError(f"{self.date}: prices must be finite and > 0")
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)

    @property
    def open(self) -> float:
        return float(self.prices[0])

    @property
    def close(self) -> float:
        return float(self.prices[-1])


@dataclass(frozen=True)
class IntradayPanel:
    """Calendar-ordered trading days of one stock on a common minute grid."""

    symbol: str
    days: tuple[TradingDay, ...]
    session_minutes: int = 391

    def __post_init__(self):
        object.__setattr__(self, "days", tuple(self.days))
        dates = [d.date for d in self.days]
        if any(a >= b for a, b in zip(dates, dates[1:])):
            raise PriceDataError("days must be strictly increasing by date")
        for d in self.days:
            if len(d.prices) != self.session_minutes:
                raise PriceDataError(
                    f"{d.date}: grid length {len(d.prices)} != {self.session_minutes}"
                )

    def __len__(self) -> int:
        return len(self.days)


def _session_grid(start: dt.time, end: dt.time) -> list[dt.time]:
    t0 = start.hour * 60 + start.minute
    t1 = end.hour * 60 + end.minute
    return [dt.time(m // 60, m % 60) for m in range(t0, t1 + 1)]


def load_prices(
    path,
    symbol: str,
    *,
    session_start: dt.time = SESSION_START,
    session_end: dt.time = SESSION_END,
    max_missing_frac: float = 0.2,
    include_partial_days: bool = False,
) -> IntradayPanel:
    """Load a minute-price CSV and align it on the session grid.

    Missing minutes are forward-filled from the last observed price (leading
    gaps are back-filled from the first observation of the day).  Days missing
    more than ``max_missing_frac`` of their slots, e.g. half trading days, are
    dropped unless ``include_partial_days`` is set.

    Raises :class:`PriceDataError` on malformed rows or nonpositive prices.
    """
    grid = _session_grid(session_start, session_end)
    slot = {t: i for i, t in enumerate(grid)}
    n_grid = len(grid)

    per_day: dict[dt.date, dict[int, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:4]] != [
            "symbol",
            "date",
            "time",
            "price",
        ]:
            raise PriceDataError(f"{path}: expected header symbol,date,time,price")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                sym, date_s, time_s, price_s = row[:4]
                date = dt.date.fromisoformat(date_s.strip())
                hh, mm = time_s.strip().split(":")
                time = dt.time(int(hh), int(mm))
                price = float(price_s)
            except (ValueError, IndexError) as exc:
                raise PriceDataError(f"{path}:{lineno}: malformed row: {row!r}") from exc
            if sym.strip() != symbol:
                continue
            if not math.isfinite(price) or price <= 0:
                raise PriceDataError(f"{path}:{lineno}: nonpositive price {price_s}")
            idx = slot.get(time)
            if idx is None:
                continue  # outside the regular session
            per_day.setdefault(date, {})[idx] = price

    days = []
    for date in sorted(per_day):
        observed = per_day[date]
        missing = n_grid - len(observed)
        if missing > max_missing_frac * n_grid and not include_partial_days:
            logger.warning(
                "%s %s: dropped, %d/%d slots missing", symbol, date, missing, n_grid
            )
            continue
        prices = np.empty(n_grid)
        prices.fill(np.nan)
        for i, p in observed.items():
            prices[i] = p
        # forward-fill, then back-fill a leading gap
        last = np.nan
        for i in range(n_grid):
            if np.isnan(prices[i]):
                prices[i] = last
            else:
                last = prices[i]
        first = prices[~np.isnan(prices)][0]
        prices[np.isnan(prices)] = first
        if missing:
            logger.info("%s %s: imputed %d slots", symbol, date, missing)
        days.append(TradingDay(date=date, prices=prices, imputed=missing))

    return IntradayPanel(symbol=symbol, days=tuple(days), session_minutes=n_grid)


def intraday_returns(day: TradingDay, step: int = 1, offset: int = 0) -> np.ndarray:
    """Log returns of ``day`` subsampled every ``step`` minutes from ``offset``.

    For 1-minute prices and ``step=5`` there are 5 valid offsets ("grids").
    """
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    if not 0 <= offset < step:
        raise ValueError(f"offset must be in [0, {step}), got {offset}")
    sub = np.log(day.prices[offset::step])
    return np.diff(sub)


def overnight_return(prev: TradingDay, cur: TradingDay) -> float:
    """Close-to-open log return between two consecutive trading days."""
    if prev.date >= cur.date:
        raise ValueError(f"prev.date {prev.date} must precede cur.date {cur.date}")
    return math.log(cur.open) - math.log(prev.close)
