"""Shared fixtures and small builders for the test suite."""

import datetime as dt

import numpy as np
import pytest

from volcast.market_data import IntradayPanel, TradingDay


def make_day(date, returns, open_price=100.0):
    """TradingDay from a vector of intraday log returns."""
    log_prices = np.log(open_price) + np.concatenate([[0.0], np.cumsum(returns)])
    return TradingDay(date=date, prices=np.exp(log_prices))


def make_panel(n_days, n_returns=100, daily_vol=0.01, seed=0, symbol="TST"):
    """Constant-volatility GBM-style panel for estimator tests."""
    rng = np.random.default_rng(seed)
    days = []
    price = 100.0
    date = dt.date(2020, 1, 6)
    for _ in range(n_days):
        r = rng.normal(0.0, daily_vol / np.sqrt(n_returns), n_returns)
        days.append(make_day(date, r, open_price=price))
        price = days[-1].close
        date += dt.timedelta(days=1)
        while date.weekday() >= 5:
            date += dt.timedelta(days=1)
    return IntradayPanel(symbol=symbol, days=tuple(days), session_minutes=n_returns + 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
