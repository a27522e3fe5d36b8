import numpy as np
import pandas as pd
import pytest

from volcast import backtest as bt
from volcast.models.registry import ModelSpec


def make_matrix(n=130, seed=0, horizon=1):
    """Small feature matrix with an autocorrelated log-variance target."""
    rng = np.random.default_rng(seed)
    h = np.zeros(n + horizon)
    for t in range(1, n + horizon):
        h[t] = 0.9 * h[t - 1] + rng.normal(scale=0.3)
    rv = np.exp(h)
    idx = pd.bdate_range("2015-01-02", periods=n)
    frame = pd.DataFrame(index=idx)
    frame["rv_d"] = h[:n]
    frame["rv_w"] = pd.Series(h[:n]).rolling(5, min_periods=1).mean().to_numpy()
    frame["rv_m"] = pd.Series(h[:n]).rolling(22, min_periods=1).mean().to_numpy()
    for j in range(3):
        frame[f"z{j}"] = rng.normal(size=n)
    target_raw = np.array([rv[i + 1 : i + 1 + horizon].mean() for i in range(n)])
    frame["target_raw"] = target_raw
    frame["target"] = np.log(target_raw)
    frame.attrs["roles"] = {}
    return frame


BASE = ("intercept", "rv_d", "rv_w")
CANDS = ("rv_m", "z0", "z1", "z2")

SPECS = [
    ModelSpec("HAR", "wls", BASE + ("rv_m",)),
    ModelSpec("ALA", "ala", BASE, CANDS, hyper={"lambda_init": 1.0, "lambda_adap": 1.0}),
    ModelSpec("CSR", "csr", BASE, CANDS),
    ModelSpec("RF", "rf", BASE, CANDS, hyper={"z": 2, "max_depth": 3, "n_trees": 5}),
]

CFG = bt.BacktestConfig(estimation_window=50, calibration_window=25, horizons=(1,), seed=1)


def test_retransform():
    assert bt.retransform(0.0, 0.0) == 1.0
    assert bt.retransform(1.0, 0.5) == pytest.approx(np.exp(1.25))
    with pytest.raises(ValueError):
        bt.retransform(0.0, -1.0)


def test_insanity_filter():
    window = np.array([1.0, 2.0, 5.0])
    assert bt.insanity_filter(3.0, window) == (3.0, False)
    assert bt.insanity_filter(0.5, window) == (1.0, True)
    assert bt.insanity_filter(9.0, window) == (5.0, True)
    with pytest.raises(ValueError):
        bt.insanity_filter(1.0, np.array([]))


def test_first_forecast_row():
    """First emitted forecast is for the (est + cal + h)-th target row."""
    matrix = make_matrix(n=100)
    records, _ = bt.run_stock({1: matrix}, SPECS[:1], CFG, "AAA")
    first = CFG.estimation_window + CFG.calibration_window + 1 - 1  # 0-based info row
    assert records[0].date == matrix.index[first]
    assert len(records) == len(matrix) - first


def test_all_families_emit(caplog):
    matrix = make_matrix()
    records, audits = bt.run_stock({1: matrix}, SPECS, CFG, "AAA")
    by_model = pd.DataFrame([r.__dict__ for r in records]).groupby("model").size()
    expected = len(matrix) - (CFG.estimation_window + CFG.calibration_window)
    assert (by_model == expected).all()
    assert set(by_model.index) == {"HAR", "ALA", "CSR", "RF"}
    assert "CSR" in audits and 1 in audits["CSR"]
    date, subsets = audits["CSR"][1][0]
    assert all(len(s) == 2 and all(isinstance(c, str) for c in s) for s in subsets)


def test_too_few_rows_warns(caplog):
    matrix = make_matrix(n=60)
    with caplog.at_level("WARNING"):
        records, _ = bt.run_stock({1: matrix}, SPECS[:1], CFG, "AAA")
    assert records == []
    assert "no forecasts" in caplog.text


def test_forecasts_positive_and_filtered_in_range():
    matrix = make_matrix()
    records, _ = bt.run_stock({1: matrix}, SPECS, CFG, "AAA")
    for r in records:
        assert r.forecast_var > 0
        i = matrix.index.get_loc(r.date)
        window = matrix["target_raw"].iloc[i - CFG.estimation_window : i]
        assert window.min() - 1e-12 <= r.forecast_var <= window.max() + 1e-12


@pytest.mark.parametrize("spec", SPECS, ids=[s.name for s in SPECS])
def test_no_look_ahead(spec):
    """Perturbing data after a forecast's information date leaves every
    forecast up to that date bit-identical."""
    matrix = make_matrix()
    h = 1
    records, _ = bt.run_stock({h: matrix}, [spec], CFG, "AAA")
    cutoff_pos = CFG.estimation_window + CFG.calibration_window + 10
    cutoff_date = matrix.index[cutoff_pos]

    rigged = matrix.copy()
    rng = np.random.default_rng(99)
    feat_cols = ["rv_d", "rv_w", "rv_m", "z0", "z1", "z2"]
    rigged.iloc[cutoff_pos + 1 :, [rigged.columns.get_loc(c) for c in feat_cols]] = (
        rng.normal(scale=10.0, size=(len(matrix) - cutoff_pos - 1, len(feat_cols)))
    )
    # targets dated after the cutoff live in rows >= cutoff_pos - h + 1
    tr = rigged["target_raw"].to_numpy().copy()
    tr[cutoff_pos - h + 1 :] = rng.lognormal(2.0, 1.0, len(matrix) - cutoff_pos + h - 1)
    rigged["target_raw"] = tr
    rigged["target"] = np.log(rigged["target_raw"])
    rigged.attrs["roles"] = {}

    rigged_records, _ = bt.run_stock({h: rigged}, [spec], CFG, "AAA")
    base = {r.date: r for r in records if r.date <= cutoff_date}
    other = {r.date: r for r in rigged_records if r.date <= cutoff_date}
    assert set(base) == set(other) and len(base) == 11
    for date, r in base.items():
        o = other[date]
        assert (r.forecast_var, r.forecast_log, r.filtered) == (
            o.forecast_var,
            o.forecast_log,
            o.filtered,
        ), f"{spec.name} {date}"


def test_identical_stocks_identical_forecasts():
    matrix = make_matrix()
    frame, _ = bt.run_backtest({"AAA": {1: matrix}, "BBB": {1: matrix}}, SPECS[:2], CFG)
    a = frame[frame["symbol"] == "AAA"].drop(columns="symbol").reset_index(drop=True)
    b = frame[frame["symbol"] == "BBB"].drop(columns="symbol").reset_index(drop=True)
    pd.testing.assert_frame_equal(a, b)


def test_run_backtest_deterministic_and_sorted():
    data = {"BBB": {1: make_matrix(seed=5)}, "AAA": {1: make_matrix(seed=6)}}
    f1, _ = bt.run_backtest(data, SPECS, CFG)
    f2, _ = bt.run_backtest(data, SPECS, CFG)
    pd.testing.assert_frame_equal(f1, f2)
    assert list(f1.columns) == list(bt.FORECAST_COLUMNS)
    key = f1[["symbol", "model", "date"]].apply(tuple, axis=1)
    assert key.is_monotonic_increasing


def test_run_backtest_parallel_matches_serial():
    data = {"AAA": {1: make_matrix(seed=5)}, "BBB": {1: make_matrix(seed=6)}}
    serial, _ = bt.run_backtest(data, SPECS[:2], CFG, jobs=1)
    parallel, _ = bt.run_backtest(data, SPECS[:2], CFG, jobs=2)
    pd.testing.assert_frame_equal(serial, parallel)


def test_multi_horizon():
    matrices = {1: make_matrix(horizon=1), 5: make_matrix(horizon=5)}
    cfg = bt.BacktestConfig(estimation_window=50, calibration_window=25, horizons=(1, 5))
    records, _ = bt.run_stock(matrices, SPECS[:1], cfg, "AAA")
    horizons = {r.horizon for r in records}
    assert horizons == {1, 5}
    # the five-step loop starts later: est + cal + h - 1
    h5 = [r for r in records if r.horizon == 5]
    assert h5[0].date == matrices[5].index[50 + 25 + 5 - 1]
