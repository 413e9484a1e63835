"""Daily step series and the preprocessing transforms the forecasters use."""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

SECONDS_PER_DAY = 86400
_EPOCH = dt.date(1970, 1, 1)


class SeriesError(ValueError):
    pass


def utc_day(timestamp: float) -> dt.date:
    return _EPOCH + dt.timedelta(days=int(timestamp // SECONDS_PER_DAY))


@dataclass(frozen=True)
class UnevenSeries:
    """Measurements at commit times.

    Timestamps must be non-decreasing; equal timestamps keep input order,
    which is the commit order produced by mining.
    """

    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        vs = np.asarray(self.values, dtype=np.float64)
        if ts.shape != vs.shape or ts.ndim != 1:
            raise SeriesError("timestamps and values must be 1-d and equally long")
        if ts.size and np.any(np.diff(ts) < 0):
            raise SeriesError("timestamps must be non-decreasing")
        if not np.all(np.isfinite(vs)):
            raise SeriesError("values must be finite")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vs)

    @classmethod
    def from_points(cls, points) -> "UnevenSeries":
        points = list(points)
        return cls(np.array([p[0] for p in points], dtype=np.int64),
                   np.array([p[1] for p in points], dtype=np.float64))

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class DailySeries:
    start_day: dt.date
    values: np.ndarray

    def __post_init__(self):
        vs = np.asarray(self.values, dtype=np.float64)
        if vs.ndim != 1 or vs.size < 1:
            raise SeriesError("a daily series needs at least one value")
        if not np.all(np.isfinite(vs)):
            raise SeriesError("values must be finite")
        object.__setattr__(self, "values", vs)

    def __len__(self) -> int:
        return self.values.size

    @property
    def end_day(self) -> dt.date:
        return self.start_day + dt.timedelta(days=len(self) - 1)

    def dates(self) -> list[dt.date]:
        return [self.start_day + dt.timedelta(days=i) for i in range(len(self))]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "value"])
            for day, v in zip(self.dates(), self.values):
                w.writerow([day.isoformat(), repr(float(v))])

    @classmethod
    def read_csv(cls, path) -> "DailySeries":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise SeriesError(f"{path}: no rows")
        days = [dt.date.fromisoformat(r["date"]) for r in rows]
        if any((b - a).days != 1 for a, b in zip(days, days[1:])):
            raise SeriesError(f"{path}: dates are not consecutive days")
        return cls(days[0], np.array([float(r["value"]) for r in rows]))


def to_daily(series: UnevenSeries) -> DailySeries:
    """Step-interpolate commit measurements to one value per UTC day.

    The last commit of a day wins; days without commits repeat the previous
    day. Values are never blended.
    """
    if len(series) == 0:
        raise SeriesError("empty series")
    days = series.timestamps // SECONDS_PER_DAY
    first = int(days[0])
    offset = days - first
    last_of_day = np.r_[offset[1:] != offset[:-1], True]
    n = int(offset[-1]) + 1
    src = np.full(n, -1, dtype=np.int64)
    src[offset[last_of_day]] = np.flatnonzero(last_of_day)
    src = np.maximum.accumulate(src)
    return DailySeries(_EPOCH + dt.timedelta(days=first), series.values[src])


def _as_date(d) -> dt.date:
    if isinstance(d, dt.datetime):
        return d.date()
    if isinstance(d, dt.date):
        return d
    return dt.date.fromisoformat(str(d))


@dataclass(frozen=True)
class SplitSeries:
    train: DailySeries
    validation: DailySeries
    test: DailySeries
    boundaries: tuple[dt.date, dt.date]


def split_by_dates(d: DailySeries, b1, b2) -> SplitSeries:
    """Train = days <= b1, validation = (b1, b2], test = days > b2."""
    b1, b2 = _as_date(b1), _as_date(b2)
    start, last = d.start_day, d.end_day
    if not start <= b1 <= last:
        raise SeriesError(f"boundary b1={b1} outside series range {start}..{last}")
    if b2 <= b1:
        raise SeriesError(f"boundary b2={b2} must be after b1={b1}")
    if b1 == last:
        raise SeriesError("empty segment: validation and test")
    if b2 > last:
        raise SeriesError(f"boundary b2={b2} outside series range {start}..{last}")
    if b2 == last:
        raise SeriesError("empty segment: test")
    i1 = (b1 - start).days + 1
    i2 = (b2 - start).days + 1
    v = d.values
    return SplitSeries(
        DailySeries(start, v[:i1]),
        DailySeries(b1 + dt.timedelta(days=1), v[i1:i2]),
        DailySeries(b2 + dt.timedelta(days=1), v[i2:]),
        (b1, b2),
    )


def month_period(text: str) -> tuple[dt.date, dt.date]:
    """``"1/2016-3/2016"`` -> (2016-01-01, 2016-03-31)."""
    try:
        lo, hi = (part.strip() for part in text.split("-"))
        m1, y1 = (int(x) for x in lo.split("/"))
        m2, y2 = (int(x) for x in hi.split("/"))
        first = dt.date(y1, m1, 1)
        nxt = dt.date(y2 + (m2 == 12), m2 % 12 + 1, 1)
    except ValueError as exc:
        raise SeriesError(f"cannot parse month period {text!r}") from exc
    return first, nxt - dt.timedelta(days=1)


def boundaries_from_periods(train: str, validation: str) -> tuple[dt.date, dt.date]:
    """Split boundaries from month-period labels such as ``"1/2013-12/2015"``."""
    t_lo, t_hi = month_period(train)
    v_lo, v_hi = month_period(validation)
    if v_lo != t_hi + dt.timedelta(days=1):
        raise SeriesError("validation period must start right after the training period")
    return t_hi, v_hi


# ---------------------------------------------------------------- transforms

@dataclass(frozen=True)
class Differencing:
    order: int
    heads: tuple[float, ...]


def difference(values, d: int) -> tuple[np.ndarray, Differencing]:
    """d-fold first differences plus the leading values needed to undo them."""
    if d not in (0, 1, 2):
        raise SeriesError(f"differencing order must be 0, 1 or 2, got {d}")
    x = np.asarray(values, dtype=np.float64)
    if x.size <= d:
        raise SeriesError(f"series of length {x.size} too short for d={d}")
    heads = []
    for _ in range(d):
        heads.append(float(x[0]))
        x = np.diff(x)
    return x, Differencing(d, tuple(heads))


def undifference(diffed, info: Differencing) -> np.ndarray:
    x = np.asarray(diffed, dtype=np.float64)
    for head in reversed(info.heads):
        x = np.concatenate(([head], head + np.cumsum(x)))
    return x


def integrate_forecast(forecast, history, d: int) -> np.ndarray:
    """Undo d-fold differencing of a forecast continuing ``history``."""
    fc = np.asarray(forecast, dtype=np.float64)
    hist = np.asarray(history, dtype=np.float64)
    levels = [hist]
    for _ in range(d):
        levels.append(np.diff(levels[-1]))
    for k in range(d, 0, -1):
        fc = levels[k - 1][-1] + np.cumsum(fc)
    return fc


@dataclass(frozen=True)
class NormalizationParams:
    min: float
    max: float

    def __post_init__(self):
        if self.max < self.min:
            raise SeriesError("max must be >= min")


def normalize(values) -> tuple[np.ndarray, NormalizationParams]:
    """Min-max scale to [0, 1]; a constant series maps to zeros."""
    x = np.asarray(values, dtype=np.float64)
    lo, hi = float(x.min()), float(x.max())
    params = NormalizationParams(lo, hi)
    if hi == lo:
        return np.zeros_like(x), params
    return (x - lo) / (hi - lo), params


def apply_normalization(values, params: NormalizationParams) -> np.ndarray:
    x = np.asarray(values, dtype=np.float64)
    if params.max == params.min:
        return x - params.min
    return (x - params.min) / (params.max - params.min)


def denormalize(scaled, params: NormalizationParams) -> np.ndarray:
    x = np.asarray(scaled, dtype=np.float64)
    if params.max == params.min:
        return x + params.min
    return x * (params.max - params.min) + params.min


@dataclass(frozen=True)
class LaggedDataset:
    lag: int
    windows: np.ndarray
    targets: np.ndarray

    @property
    def rows(self):
        return list(zip(self.windows, self.targets))

    def __len__(self) -> int:
        return self.targets.size


def make_lagged(values, lag: int) -> LaggedDataset:
    x = np.asarray(values, dtype=np.float64)
    if lag < 1:
        raise SeriesError("lag must be >= 1")
    if x.size <= lag:
        raise SeriesError(f"series of length {x.size} too short for lag {lag}")
    windows = sliding_window_view(x[:-1], lag).copy()
    return LaggedDataset(lag, windows, x[lag:].copy())

