"""Instrument price histories: CSV loading, validation, alignment, resampling.

The canonical CSV layout is ``timestamp,open,high,low,close,volume`` with
ISO-8601 UTC timestamps (``2019-08-01T00:00:00Z``). Timestamps are stored
internally as epoch seconds; duplicated timestamps are a hard error rather
than last-wins.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Iterable, Sequence

from .errors import (
    EmptyFile,
    EmptyIntersection,
    GranularityMismatch,
    MalformedRow,
    NonMonotonicTime,
    NonPositiveValue,
    OhlcViolation,
    TooShort,
)

CSV_HEADER = ("timestamp", "open", "high", "low", "close", "volume")
GRANULARITIES = ("daily", "hourly")


def parse_utc_instant(text: str) -> int:
    """Parse an ISO-8601 UTC instant to epoch seconds."""
    raw = text.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise MalformedRow(f"bad timestamp {text!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.astimezone(timezone.utc).timestamp())


def iso_instant(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def ts_date(ts: int) -> str:
    """Calendar date (UTC) of an epoch-second timestamp."""
    return datetime.fromtimestamp(ts, tz=timezone.utc).date().isoformat()


@dataclass(frozen=True)
class PricePoint:
    """One OHLCV bar; prices positive, low <= open/close <= high."""

    ts: int
    open: float
    high: float
    low: float
    close: float
    volume: float

    def ohlc_ok(self) -> bool:
        return (
            self.low <= self.open <= self.high
            and self.low <= self.close <= self.high
            and self.low <= self.high
        )


@dataclass
class MarketSeries:
    """A validated, strictly time-ordered price history for one instrument."""

    symbol: str
    granularity: str
    points: list[PricePoint]

    def __len__(self) -> int:
        return len(self.points)

    def timestamps(self) -> list[int]:
        return [p.ts for p in self.points]

    def closes(self) -> list[float]:
        return [p.close for p in self.points]

    def slice_dates(self, from_date: str | None = None, to_date: str | None = None) -> "MarketSeries":
        """Restrict to bars whose UTC calendar date falls in [from, to]."""
        kept = [
            p
            for p in self.points
            if (from_date is None or ts_date(p.ts) >= from_date)
            and (to_date is None or ts_date(p.ts) <= to_date)
        ]
        return replace(self, points=kept)

    def daily_closes(self) -> list[tuple[str, float]]:
        """Last close of each calendar day (resampling for hourly data)."""
        out: list[tuple[str, float]] = []
        for p in self.points:
            d = ts_date(p.ts)
            if out and out[-1][0] == d:
                out[-1] = (d, p.close)
            else:
                out.append((d, p.close))
        return out


def _parse_row(row: Sequence[str], line_no: int) -> PricePoint:
    if len(row) != 6:
        raise MalformedRow(f"row {line_no}: expected 6 fields, got {len(row)}")
    ts = parse_utc_instant(row[0])
    try:
        o, h, lo, c, v = (float(x) for x in row[1:6])
    except ValueError as exc:
        raise MalformedRow(f"row {line_no}: bad number in {row!r}") from exc
    if min(o, h, lo, c) <= 0:
        raise MalformedRow(f"row {line_no}: non-positive price")
    if v < 0:
        raise MalformedRow(f"row {line_no}: negative volume")
    point = PricePoint(ts=ts, open=o, high=h, low=lo, close=c, volume=v)
    if not point.ohlc_ok():
        raise OhlcViolation(f"row {line_no}: low/high bounds violated ({row!r})")
    return point


def parse_market_csv(text: str, symbol: str, granularity: str = "daily") -> MarketSeries:
    """Parse and validate CSV content into a time-sorted MarketSeries."""
    if granularity not in GRANULARITIES:
        raise MalformedRow(f"unsupported granularity {granularity!r}")
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r]
    if not rows:
        raise EmptyFile("no content")
    header = tuple(h.strip() for h in rows[0])
    if header != CSV_HEADER:
        raise MalformedRow(f"bad header {rows[0]!r}, expected {','.join(CSV_HEADER)}")
    if len(rows) == 1:
        raise EmptyFile("header only, no data rows")
    points = [_parse_row(row, i) for i, row in enumerate(rows[1:], start=2)]
    points.sort(key=lambda p: p.ts)
    for prev, cur in zip(points, points[1:]):
        if cur.ts == prev.ts:
            raise NonMonotonicTime(f"duplicate timestamp {iso_instant(cur.ts)}")
    return MarketSeries(symbol=symbol, granularity=granularity, points=points)


def load_market_csv(path: str, symbol: str, granularity: str = "daily") -> MarketSeries:
    """Load a market CSV file; see parse_market_csv for validation rules."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_market_csv(fh.read(), symbol, granularity)


def align_series(a: MarketSeries, b: MarketSeries) -> tuple[MarketSeries, MarketSeries]:
    """Restrict both series to their common timestamps, order preserved."""
    if a.granularity != b.granularity:
        raise GranularityMismatch(f"{a.granularity} vs {b.granularity}")
    common = set(a.timestamps()) & set(b.timestamps())
    if not common:
        raise EmptyIntersection(f"{a.symbol} and {b.symbol} share no timestamps")
    return (
        replace(a, points=[p for p in a.points if p.ts in common]),
        replace(b, points=[p for p in b.points if p.ts in common]),
    )


def align_many(series: Sequence[MarketSeries]) -> list[MarketSeries]:
    """Align any number of series on the intersection of their timestamps."""
    if not series:
        return []
    grans = {s.granularity for s in series}
    if len(grans) > 1:
        raise GranularityMismatch(", ".join(sorted(grans)))
    common = set(series[0].timestamps())
    for s in series[1:]:
        common &= set(s.timestamps())
    if not common:
        raise EmptyIntersection("no common timestamps across " + ", ".join(s.symbol for s in series))
    return [replace(s, points=[p for p in s.points if p.ts in common]) for s in series]


def simple_returns(series: "MarketSeries | Iterable[float]") -> list[float]:
    """Period-over-period fractional returns, r_t = v_t / v_{t-1} - 1."""
    values = series.closes() if isinstance(series, MarketSeries) else list(series)
    if len(values) < 2:
        raise TooShort(f"need >= 2 points, got {len(values)}")
    if any(v <= 0 for v in values):
        raise NonPositiveValue("returns undefined for values <= 0")
    return [values[i] / values[i - 1] - 1.0 for i in range(1, len(values))]
