"""Shared fixture builders for the test suite."""
from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from tradao.market_data import MarketSeries, PricePoint

EPOCH_DAY = 86_400


def day_ts(start: str, offset: int = 0) -> int:
    """Epoch seconds of midnight UTC `offset` days after `start`."""
    base = datetime.fromisoformat(start).replace(tzinfo=timezone.utc)
    return int((base + timedelta(days=offset)).timestamp())


def make_series(
    symbol: str,
    closes,
    start: str = "2019-01-01",
    granularity: str = "daily",
    step: int = EPOCH_DAY,
) -> MarketSeries:
    """A valid series with flat bars (open=high=low=close) on consecutive days."""
    t0 = day_ts(start)
    points = [
        PricePoint(ts=t0 + i * step, open=float(c), high=float(c), low=float(c), close=float(c), volume=100.0)
        for i, c in enumerate(closes)
    ]
    return MarketSeries(symbol=symbol, granularity=granularity, points=points)


def random_walk(rng: np.random.Generator, n: int, start: float = 100.0, drift: float = 0.0002, vol: float = 0.01):
    """Positive geometric random walk."""
    steps = rng.normal(drift, vol, size=n - 1)
    return start * np.exp(np.concatenate([[0.0], np.cumsum(steps)]))


def csv_lines(rows) -> str:
    header = "timestamp,open,high,low,close,volume"
    return "\n".join([header, *rows]) + "\n"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20190801)
