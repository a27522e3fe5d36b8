import datetime as dt

import numpy as np
import pandas as pd
import pytest

from volcast import attention as att


def _batch(batch_id, start, values):
    dates = tuple(start + dt.timedelta(days=i) for i in range(len(values)))
    return att.SviBatch(batch_id=batch_id, dates=dates, values=np.asarray(values, float))


def test_svi_batch_validation():
    with pytest.raises(att.FeatureInputError):
        _batch("b", dt.date(2020, 1, 1), [0, 101])
    with pytest.raises(att.FeatureInputError):
        att.SviBatch("b", (dt.date(2020, 1, 1),), np.array([1.0, 2.0]))


def test_document_validation():
    with pytest.raises(att.FeatureInputError):
        att.DailyDocument(dt.date(2020, 1, 1), "t", pos=1.2, neg=0.0)


def test_stitch_worked_example():
    """Overlap values (25, 5) vs (100, 21): pointwise ratios 4 and 4.2, the
    stitching constant is the ratio of overlap averages 15/60.5."""
    b1 = _batch("1", dt.date(2020, 1, 1), [50, 40, 25, 5])
    b2 = _batch("2", dt.date(2020, 1, 3), [100, 21, 80, 60])
    out = att.stitch_batches([b1, b2], min_overlap=2)
    assert out.loc[dt.date(2020, 1, 3)] == 25  # overlap keeps scaled values
    c = np.mean([25, 5]) / np.mean([100, 21])
    assert c == pytest.approx(15 / 60.5)
    assert out.loc[dt.date(2020, 1, 5)] == pytest.approx(80 * c)
    assert out.loc[dt.date(2020, 1, 6)] == pytest.approx(60 * c)
    # the pointwise overlap ratios the constant averages over
    assert 100 / 25 == pytest.approx(4.0)
    assert 21 / 5 == pytest.approx(4.2)


def test_stitch_identical_overlap_keeps_scale():
    b1 = _batch("1", dt.date(2020, 1, 1), [10, 20, 30])
    b2 = _batch("2", dt.date(2020, 1, 2), [20, 30, 40])
    out = att.stitch_batches([b1, b2], min_overlap=2)
    np.testing.assert_allclose(out.to_numpy(), [10, 20, 30, 40])


def test_stitch_requires_overlap():
    b1 = _batch("1", dt.date(2020, 1, 1), [10, 20])
    b3 = _batch("3", dt.date(2020, 2, 1), [5, 5])
    with pytest.raises(att.FeatureInputError, match="overlap"):
        att.stitch_batches([b1, b3])


def test_extend_overlap_widens_to_first_nonzero_pair():
    prev = np.array([0.0, 0.0, 5.0, 7.0])
    new = np.array([0.0, 0.0, 10.0, 3.0])
    assert att.extend_overlap(prev, new, 2) == 3
    assert att.extend_overlap(prev, new, 1) == 3
    with pytest.raises(att.FeatureInputError):
        att.extend_overlap(np.zeros(4), new * 0, 2)
    with pytest.raises(att.FeatureInputError):
        att.extend_overlap(np.zeros(3), np.zeros(4), 2)


def test_stitch_degenerate_overlap_extends():
    b1 = _batch("1", dt.date(2020, 1, 1), [4, 0, 0, 6, 8])
    b2 = _batch("2", dt.date(2020, 1, 2), [0, 0, 3, 4, 10])
    # min_overlap 2 has no nonzero pair; widened to 3 where (6, 3) pairs up
    out = att.stitch_batches([b1, b2], min_overlap=2)
    c = np.mean([0, 0, 6]) / np.mean([0, 0, 3])
    assert out.loc[dt.date(2020, 1, 6)] == pytest.approx(10 * c)


def test_keyword_group_average():
    idx = pd.Index([dt.date(2020, 1, 1), dt.date(2020, 1, 2)])
    s1 = pd.Series([1.0, 3.0], index=idx)
    s2 = pd.Series([3.0, 5.0], index=idx)
    np.testing.assert_allclose(att.keyword_group_average([s1, s2]).to_numpy(), [2, 4])
    with pytest.raises(att.FeatureInputError):
        att.keyword_group_average([s1, s2.iloc[:1]])
    with pytest.raises(att.FeatureInputError):
        att.keyword_group_average([])


def _calendar():
    # Mon 6th .. Fri 10th Jan 2020
    return pd.DatetimeIndex([pd.Timestamp(2020, 1, d) for d in (6, 7, 8, 9, 10)])


def test_daily_counts_weekend_rollover_and_dedupe():
    docs = [
        att.DailyDocument(dt.date(2020, 1, 4), "general", 0.5, 0.5, "a"),  # Saturday
        att.DailyDocument(dt.date(2020, 1, 5), "general", 0.5, 0.5, "b"),  # Sunday
        att.DailyDocument(dt.date(2020, 1, 6), "general", 0.5, 0.5, "c"),
        att.DailyDocument(dt.date(2020, 1, 6), "general", 0.5, 0.5, "c"),  # duplicate
        att.DailyDocument(dt.date(2020, 1, 6), "macro", 0.5, 0.5, "d"),  # other topic
    ]
    counts = att.daily_counts(docs, "general", _calendar())
    assert counts.loc[pd.Timestamp(2020, 1, 6)] == 3
    assert counts.iloc[1:].sum() == 0


def test_daily_sentiment_zero_days_and_average():
    docs = [
        att.DailyDocument(dt.date(2020, 1, 7), "general", 0.8, 0.1, "a"),
        att.DailyDocument(dt.date(2020, 1, 7), "general", 0.4, 0.3, "b"),
    ]
    sent = att.daily_sentiment(docs, "general", "pos", _calendar())
    assert sent.loc[pd.Timestamp(2020, 1, 7)] == pytest.approx(0.6)
    assert sent.loc[pd.Timestamp(2020, 1, 6)] == 0.0  # no documents -> neutral 0
    with pytest.raises(ValueError):
        att.daily_sentiment(docs, "general", "positive", _calendar())


def test_align_announcements_window():
    cal = _calendar()
    schedule = [
        (dt.datetime(2020, 1, 8, 8, 30), "cpi", 12.0),  # before the 8th's close
        (dt.datetime(2020, 1, 9, 17, 0), "fomc", 3.0),  # after the 9th's close
    ]
    dummies, analysts = att.align_announcements(schedule, cal)
    # close(7th) < 8th 08:30 <= close(8th): the 7th flags the upcoming announcement
    assert dummies.loc[pd.Timestamp(2020, 1, 7), "cpi"] == 1.0
    assert dummies["cpi"].sum() == 1.0
    # 9th 17:00 falls in the window after the 9th's close
    assert dummies.loc[pd.Timestamp(2020, 1, 9), "fomc"] == 1.0
    assert analysts.loc[pd.Timestamp(2020, 1, 8), "cpi"] == 12.0


def test_readers_roundtrip(tmp_path):
    svi = tmp_path / "svi.csv"
    svi.write_text(
        "batch_id,date,value\nb1,2020-01-02,50\nb1,2020-01-01,40\nb0,2019-12-31,10\n"
    )
    batches = att.read_svi_batches(svi)
    assert [b.batch_id for b in batches] == ["b0", "b1"]
    assert batches[1].dates[0] == dt.date(2020, 1, 1)  # sorted within batch

    docs = tmp_path / "docs.csv"
    docs.write_text("date,topic,pos,neg\n2020-01-01,general,0.5,0.25\n")
    loaded = att.read_documents(docs)
    assert loaded[0].neg == 0.25 and loaded[0].doc_id is None

    pv = tmp_path / "pv.csv"
    pv.write_text("date,page,views\n2020-01-02,main,7\n2020-01-01,main,3\n2020-01-01,other,9\n")
    series = att.read_pageviews(pv, "main")
    np.testing.assert_allclose(series.to_numpy(), [3, 7])

    sched = tmp_path / "s.csv"
    sched.write_text("datetime,variable,analyst_count\n2020-01-08T08:30:00,cpi,12\n")
    entries = att.read_schedule(sched)
    assert entries[0][1] == "cpi" and entries[0][2] == 12.0

    with pytest.raises(att.FeatureInputError):
        att.read_svi_batches(docs)


def test_build_features_manifest(tmp_path):
    import json

    (tmp_path / "svi.csv").write_text(
        "batch_id,date,value\n"
        + "\n".join(f"b0,2020-01-{d:02d},{10 + d}" for d in range(1, 11))
    )
    (tmp_path / "docs.csv").write_text(
        "date,topic,pos,neg,doc_id\n2020-01-06,general,0.5,0.3,x\n"
    )
    (tmp_path / "sched.csv").write_text(
        "datetime,variable,analyst_count\n2020-01-08T08:30:00,cpi,4\n"
    )
    manifest = {
        "features": [
            {"name": "svi", "role": "attention_general", "source": {"type": "svi", "paths": ["svi.csv"]}},
            {"name": "n_docs", "role": "attention_general", "source": {"type": "count", "path": "docs.csv", "topic": "general"}},
            {"name": "neg", "role": "sentiment_general", "source": {"type": "sentiment", "path": "docs.csv", "topic": "general", "polarity": "neg"}},
            {"name": "analysts", "role": "analyst", "source": {"type": "analyst", "path": "sched.csv", "variable": "cpi"}},
        ],
        "schedule": "sched.csv",
    }
    (tmp_path / "manifest.json").write_text(json.dumps(manifest))
    frame = att.build_features(tmp_path / "manifest.json", _calendar())
    assert list(frame.columns) == ["svi", "n_docs", "neg", "analysts", "dummy_cpi"]
    assert frame.attrs["roles"]["dummy_cpi"] == "dummy"
    assert frame.loc[pd.Timestamp(2020, 1, 6), "n_docs"] == 1
    assert frame.loc[pd.Timestamp(2020, 1, 6), "neg"] == pytest.approx(0.3)
    assert frame.loc[pd.Timestamp(2020, 1, 7), "dummy_cpi"] == 1.0
    assert frame.loc[pd.Timestamp(2020, 1, 8), "analysts"] == 4.0
    # days before the calendar start (1st-3rd) and the weekend (4th, 5th)
    # all fold into Monday the 6th by averaging
    assert frame.loc[pd.Timestamp(2020, 1, 6), "svi"] == pytest.approx(np.mean([11, 12, 13, 14, 15, 16]))

    bad = dict(manifest, features=[{"name": "x", "role": "r", "source": {"type": "nope"}}])
    (tmp_path / "bad.json").write_text(json.dumps(bad))
    with pytest.raises(att.FeatureInputError, match="unknown source"):
        att.build_features(tmp_path / "bad.json", _calendar())
