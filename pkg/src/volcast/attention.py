"""Daily attention and sentiment index construction.

The toolkit never scrapes: it consumes pre-downloaded raw files.

- Search-volume batches (``batch_id,date,value``): 0-100 normalized windows of
  at most 270 days that must be stitched onto a common scale.
- Document corpora (``date,topic,pos,neg[,doc_id]``): per-document sentiment
  scores in [0, 1], aggregated into daily counts and daily mean sentiments.
- Page view files (``date,page,views``).
- Announcement schedules (``datetime,variable,analyst_count``) yielding
  next-day announcement dummies and analyst-attention series.

A feature manifest (JSON) declares every output column; nothing is hardcoded.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


class FeatureInputError(ValueError):
    """Raised for inconsistent raw feature inputs."""


@dataclass(frozen=True)
class SviBatch:
    """One downloaded search-volume window, values normalized to 0-100."""

    batch_id: str
    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if len(values) != len(self.dates):
            raise FeatureInputError(f"batch {self.batch_id}: dates/values mismatch")
        if np.any(values < 0) or np.any(values > 100):
            raise FeatureInputError(f"batch {self.batch_id}: values outside [0, 100]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def start_date(self) -> dt.date:
        return self.dates[0]

    def as_series(self) -> pd.Series:
        return pd.Series(self.values, index=pd.Index(self.dates, name="date"))


@dataclass(frozen=True)
class DailyDocument:
    """One document (tweet, article) with sentiment scores in [0, 1]."""

    date: dt.date
    topic: str
    pos: float
    neg: float
    doc_id: str | None = None

    def __post_init__(self):
        if not (0.0 <= self.pos <= 1.0 and 0.0 <= self.neg <= 1.0):
            raise FeatureInputError(f"sentiment outside [0, 1]: {self}")


def extend_overlap(
    prev_vals: np.ndarray, new_vals: np.ndarray, width: int
) -> int:
    """Widen a degenerate overlap window until it contains a nonzero pair.

    ``prev_vals`` and ``new_vals`` are the two batches' values over the full
    shared date range, chronological.  Starting from the first ``width`` days,
    one day is added at a time; returns the first width whose window contains
    a date where both values are nonzero.  Raises if the shared range is
    exhausted.
    """
    n = len(prev_vals)
    if len(new_vals) != n:
        raise FeatureInputError("overlap arrays must have equal length")
    width = min(width, n)
    nonzero = (np.asarray(prev_vals) != 0) & (np.asarray(new_vals) != 0)
    while width <= n:
        if nonzero[:width].any():
            return width
        width += 1
    raise FeatureInputError("no nonzero pair in the full overlapping period")


def stitch_batches(batches: list[SviBatch], min_overlap: int = 10) -> pd.Series:
    """Merge overlapping search-volume batches onto a common scale.

    The first batch is kept as-is.  Each subsequent batch is multiplied by
    the ratio of average values through the overlapping period (widened from
    ``min_overlap`` days if it contains no nonzero pair); the overlap region
    keeps the already-scaled values.
    """
    if not batches:
        raise FeatureInputError("no batches to stitch")
    out = batches[0].as_series().astype(float)
    for batch in batches[1:]:
        new = batch.as_series().astype(float)
        shared = out.index.intersection(new.index)
        if len(shared) == 0:
            raise FeatureInputError(f"batch {batch.batch_id} does not overlap")
        prev_vals = out.loc[shared].to_numpy()
        new_vals = new.loc[shared].to_numpy()
        try:
            width = extend_overlap(prev_vals, new_vals, min_overlap)
        except FeatureInputError as exc:
            raise FeatureInputError(
                f"batch {batch.batch_id}: degenerate overlap ({exc})"
            ) from exc
        denom = new_vals[:width].mean()
        if denom == 0:
            raise FeatureInputError(f"batch {batch.batch_id}: zero overlap mean")
        c = prev_vals[:width].mean() / denom
        tail = new.loc[new.index.difference(out.index)] * c
        out = pd.concat([out, tail]).sort_index()
    out.index.name = "date"
    return out


def keyword_group_average(series: list[pd.Series]) -> pd.Series:
    """Pointwise mean of keyword series sharing one date range."""
    if not series:
        raise FeatureInputError("no series to average")
    first = series[0].index
    for s in series[1:]:
        if not s.index.equals(first):
            raise FeatureInputError("keyword series have misaligned dates")
    return pd.concat(series, axis=1).mean(axis=1)


def _next_trading_day(calendar: pd.DatetimeIndex, date: dt.date) -> pd.Timestamp | None:
    """Earliest calendar day >= date, or None when past the calendar end."""
    ts = pd.Timestamp(date)
    pos = calendar.searchsorted(ts)
    return calendar[pos] if pos < len(calendar) else None


def _map_to_calendar(dates: list[dt.date], calendar: pd.DatetimeIndex) -> list:
    mapped = []
    for d in dates:
        t = _next_trading_day(calendar, d)
        mapped.append(t)
    return mapped


def daily_counts(
    docs: list[DailyDocument], topic: str, calendar: pd.DatetimeIndex
) -> pd.Series:
    """Unique documents per trading day for one topic.

    Weekend and holiday documents accumulate onto the next trading day.
    Days without documents count zero.
    """
    selected = _dedupe([d for d in docs if d.topic == topic])
    counts = pd.Series(0.0, index=calendar)
    for doc, day in zip(selected, _map_to_calendar([d.date for d in selected], calendar)):
        if day is not None:
            counts.loc[day] += 1
    return counts


def daily_sentiment(
    docs: list[DailyDocument],
    topic: str,
    polarity: str,
    calendar: pd.DatetimeIndex,
) -> pd.Series:
    """Mean positive or negative score over a day's topic documents.

    Zero-document days emit 0 (neutral under the downstream ln(1+x) rule).
    Non-trading-day documents are averaged into the next trading day.
    """
    if polarity not in ("pos", "neg"):
        raise ValueError(f"polarity must be 'pos' or 'neg', got {polarity!r}")
    selected = _dedupe([d for d in docs if d.topic == topic])
    total = pd.Series(0.0, index=calendar)
    count = pd.Series(0.0, index=calendar)
    for doc, day in zip(selected, _map_to_calendar([d.date for d in selected], calendar)):
        if day is None:
            continue
        total.loc[day] += getattr(doc, polarity)
        count.loc[day] += 1
    out = total.where(count == 0, total / count.replace(0, np.nan))
    return out.fillna(0.0)


def _dedupe(docs: list[DailyDocument]) -> list[DailyDocument]:
    seen: set[str] = set()
    out = []
    for d in docs:
        if d.doc_id is not None:
            if d.doc_id in seen:
                continue
            seen.add(d.doc_id)
        out.append(d)
    return out


def align_announcements(
    schedule: list[tuple[dt.datetime, str, float]],
    calendar: pd.DatetimeIndex,
    session_close: dt.time = dt.time(16, 0),
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Announcement dummies and analyst-attention series per variable.

    The dummy for variable ``m`` on day ``t`` is 1 when an announcement of
    ``m`` falls after day ``t``'s close and no later than the next trading
    day's close, i.e. the next trading period is an announcement period.
    Analyst counts are assigned to the (trading-day mapped) announcement date.
    """
    variables = sorted({m for _, m, _ in schedule})
    dummies = pd.DataFrame(0.0, index=calendar, columns=variables)
    analysts = pd.DataFrame(0.0, index=calendar, columns=variables)
    closes = pd.DatetimeIndex(
        [pd.Timestamp.combine(day, session_close) for day in calendar]
    )
    for when, var, count in schedule:
        ts = pd.Timestamp(when)
        # day t such that close(t) < ts <= close(t+1)
        pos = closes.searchsorted(ts, side="left")  # index of first close >= ts
        if pos == 0:
            logger.warning("announcement %s %s precedes the calendar", when, var)
        else:
            dummies.iloc[pos - 1, dummies.columns.get_loc(var)] = 1.0
        day = _next_trading_day(calendar, ts.date())
        if day is None:
            logger.warning("announcement %s %s is past the calendar", when, var)
        else:
            analysts.loc[day, var] = count
    return dummies, analysts


# ---------------------------------------------------------------------------
# raw-file readers


def read_svi_batches(path) -> list[SviBatch]:
    """Read an SVI batch CSV (``batch_id,date,value``) into ordered batches."""
    frame = pd.read_csv(path, dtype={"batch_id": str})
    required = {"batch_id", "date", "value"}
    if not required.issubset(frame.columns):
        raise FeatureInputError(f"{path}: expected columns {sorted(required)}")
    batches = []
    for batch_id, group in frame.groupby("batch_id", sort=False):
        group = group.sort_values("date")
        dates = tuple(dt.date.fromisoformat(str(d)) for d in group["date"])
        batches.append(
            SviBatch(batch_id=str(batch_id), dates=dates, values=group["value"].to_numpy())
        )
    batches.sort(key=lambda b: b.start_date)
    return batches


def read_documents(path) -> list[DailyDocument]:
    """Read a document CSV (``date,topic,pos,neg[,doc_id]``)."""
    frame = pd.read_csv(path)
    required = {"date", "topic", "pos", "neg"}
    if not required.issubset(frame.columns):
        raise FeatureInputError(f"{path}: expected columns {sorted(required)}")
    has_id = "doc_id" in frame.columns
    return [
        DailyDocument(
            date=dt.date.fromisoformat(str(row.date)),
            topic=str(row.topic),
            pos=float(row.pos),
            neg=float(row.neg),
            doc_id=str(row.doc_id) if has_id else None,
        )
        for row in frame.itertuples()
    ]


def read_pageviews(path, page: str) -> pd.Series:
    """Read one page's view counts from a pageview CSV (``date,page,views``)."""
    frame = pd.read_csv(path)
    frame = frame[frame["page"] == page]
    idx = pd.DatetimeIndex(pd.to_datetime(frame["date"]), name="date")
    return pd.Series(frame["views"].to_numpy(dtype=float), index=idx).sort_index()


def read_schedule(path) -> list[tuple[dt.datetime, str, float]]:
    """Read an announcement schedule CSV (``datetime,variable,analyst_count``)."""
    frame = pd.read_csv(path)
    required = {"datetime", "variable", "analyst_count"}
    if not required.issubset(frame.columns):
        raise FeatureInputError(f"{path}: expected columns {sorted(required)}")
    return [
        (pd.Timestamp(row.datetime).to_pydatetime(), str(row.variable), float(row.analyst_count))
        for row in frame.itertuples()
    ]


# ---------------------------------------------------------------------------
# manifest-driven feature table


def _resolve(path, base_dir):
    from pathlib import Path

    p = Path(path)
    return p if p.is_absolute() else Path(base_dir) / p


def _calendar_accumulate(series: pd.Series, calendar: pd.DatetimeIndex, how: str) -> pd.Series:
    """Map a calendar-dated series onto trading days (sum or mean of the
    days that fold into each trading day)."""
    days = _map_to_calendar([d.date() for d in series.index], calendar)
    frame = pd.DataFrame({"day": days, "value": series.to_numpy()}).dropna()
    grouped = frame.groupby("day")["value"].agg(how)
    out = pd.Series(0.0, index=calendar)
    out.loc[grouped.index] = grouped.to_numpy()
    return out


def build_features(
    manifest_path, calendar: pd.DatetimeIndex, base_dir=None
) -> pd.DataFrame:
    """Build the wide daily feature table declared by a JSON manifest.

    Each manifest entry has ``name``, ``role`` (``attention_general``,
    ``attention_macro``, ``sentiment_general``, ``sentiment_macro``,
    ``analyst``) and a ``source`` describing the raw file:

    - ``{"type": "svi", "paths": [...]}`` stitched per file, then averaged;
    - ``{"type": "count", "path": ..., "topic": ...}``;
    - ``{"type": "sentiment", "path": ..., "topic": ..., "polarity": ...}``;
    - ``{"type": "pageview", "path": ..., "page": ...}``;
    - ``{"type": "analyst", "path": ..., "variable": ...}``.

    A top-level ``"schedule"`` path adds one announcement dummy column per
    variable (named ``dummy_<variable>``, role ``dummy``).

    Returns the feature frame; column roles are stored in ``frame.attrs["roles"]``.
    """
    from pathlib import Path

    manifest_path = Path(manifest_path)
    if base_dir is None:
        base_dir = manifest_path.parent
    manifest = json.loads(manifest_path.read_text())

    columns: dict[str, pd.Series] = {}
    roles: dict[str, str] = {}
    doc_cache: dict[str, list[DailyDocument]] = {}

    def docs_for(path) -> list[DailyDocument]:
        key = str(path)
        if key not in doc_cache:
            doc_cache[key] = read_documents(path)
        return doc_cache[key]

    for entry in manifest.get("features", []):
        name, role, source = entry["name"], entry["role"], entry["source"]
        kind = source["type"]
        if kind == "svi":
            paths = source.get("paths") or [source["path"]]
            stitched = [
                stitch_batches(
                    read_svi_batches(_resolve(p, base_dir)),
                    min_overlap=source.get("min_overlap", 10),
                )
                for p in paths
            ]
            daily = keyword_group_average(stitched)
            daily.index = pd.DatetimeIndex(daily.index)
            series = _calendar_accumulate(daily, calendar, "mean")
        elif kind == "count":
            series = daily_counts(docs_for(_resolve(source["path"], base_dir)), source["topic"], calendar)
        elif kind == "sentiment":
            series = daily_sentiment(
                docs_for(_resolve(source["path"], base_dir)),
                source["topic"],
                source["polarity"],
                calendar,
            )
        elif kind == "pageview":
            views = read_pageviews(_resolve(source["path"], base_dir), source["page"])
            series = _calendar_accumulate(views, calendar, "sum")
        elif kind == "analyst":
            schedule = read_schedule(_resolve(source["path"], base_dir))
            _, analysts = align_announcements(schedule, calendar)
            var = source["variable"]
            if var not in analysts.columns:
                raise FeatureInputError(f"{name}: variable {var!r} not in schedule")
            series = analysts[var]
        else:
            raise FeatureInputError(f"{name}: unknown source type {kind!r}")
        columns[name] = series
        roles[name] = role

    if "schedule" in manifest:
        schedule = read_schedule(_resolve(manifest["schedule"], base_dir))
        dummies, _ = align_announcements(schedule, calendar)
        for var in dummies.columns:
            col = f"dummy_{var}"
            columns[col] = dummies[var]
            roles[col] = "dummy"

    frame = pd.DataFrame(columns, index=calendar)
    frame.index.name = "date"
    frame.attrs["roles"] = roles
    return frame
