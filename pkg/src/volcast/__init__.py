"""Realized-volatility forecasting with attention and sentiment features.

The package is organised as a pipeline:

- :mod:`volcast.market_data` loads and calendar-aligns 1-minute prices.
- :mod:`volcast.realized` computes daily realized measures (RV, jump split,
  semivariances, signed jumps).
- :mod:`volcast.attention` builds daily attention/sentiment index series from
  pre-downloaded raw files (search-volume batches, document corpora,
  announcement schedules).
- :mod:`volcast.features` assembles model-ready regressor rows.
- :mod:`volcast.models` hosts the forecasting model families (WLS-HAR,
  adaptive LASSO, complete subset regression, random forest).
- :mod:`volcast.backtest` runs rolling-window forecasts.
- :mod:`volcast.evaluation` computes losses, comparison tests and reports.
- :mod:`volcast.synth` generates synthetic ground-truth data for testing.
"""

__version__ = "0.1.0"
