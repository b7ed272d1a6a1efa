"""Performance measures, category scores, and cross-instance normalization.

Nine measures are computed per backtest record, grouped into six categories:

    profitability  {yield_ann, md}        consistency  {sharpe, sortino}
    recovery       {max_dd_days, avg_dd_days}
    robustness     {var99, vol_ann}       prediction   {win_rate}
    activeness     {activeness}

plus ``activeness`` (transactions per trading day) carried alongside so the
activeness category can be scored. Conventions: 252 trading days per year,
zero risk-free rate, sample (n-1) standard deviation. Metrics that are
undefined for a record (constant returns, no trades, ...) are recorded as
absent with a machine-readable reason — never as a silent zero — and are
excluded from that metric's min-max pool during normalization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .backtest import BacktestRecord, RoundTrip, round_trips
from .errors import (
    EmptyInstanceSet,
    EmptyPeriod,
    EmptySeries,
    NoDownside,
    NonPositiveNav,
    NoTrades,
    TooShort,
    TradaoError,
    ZeroVariance,
)
from .market_data import simple_returns

TRADING_DAYS_PER_YEAR = 252
RISK_FREE_DAILY = 0.0

# Parallel-coordinate axis order: the left five read higher-is-better, the
# right four lower-is-better.
METRIC_AXES = (
    "yield_ann",
    "sharpe",
    "win_rate",
    "sortino",
    "var99",
    "md",
    "avg_dd_days",
    "max_dd_days",
    "vol_ann",
)
AXIS_LABELS = {
    "yield_ann": "Yield",
    "sharpe": "Sharpe",
    "win_rate": "WinRate",
    "sortino": "Sortino",
    "var99": "VaR99",
    "md": "MD",
    "avg_dd_days": "AvgDD",
    "max_dd_days": "MaxDD",
    "vol_ann": "Vol",
    "activeness": "Activeness",
}
LOWER_IS_BETTER = frozenset({"md", "avg_dd_days", "max_dd_days", "vol_ann"})

CATEGORY_MEMBERS: dict[str, tuple[str, ...]] = {
    "profitability": ("yield_ann", "md"),
    "consistency": ("sharpe", "sortino"),
    "recovery": ("max_dd_days", "avg_dd_days"),
    "robustness": ("var99", "vol_ann"),
    "prediction": ("win_rate",),
    "activeness": ("activeness",),
}

ALL_METRICS = METRIC_AXES + ("activeness",)


@dataclass(frozen=True)
class MetricValue:
    """A metric that is either present or absent with a reason."""

    value: float | None = None
    absent: str | None = None

    @classmethod
    def of(cls, value: float) -> "MetricValue":
        return cls(value=float(value))

    @classmethod
    def miss(cls, reason: str) -> "MetricValue":
        return cls(absent=reason)

    @property
    def ok(self) -> bool:
        return self.value is not None

    def to_json(self) -> dict:
        return {"value": self.value} if self.ok else {"absent": self.absent}

    @classmethod
    def from_json(cls, data: dict) -> "MetricValue":
        if "value" in data and data["value"] is not None:
            return cls.of(float(data["value"]))
        return cls.miss(str(data.get("absent", "Unknown")))


@dataclass(frozen=True)
class MetricVector:
    yield_ann: MetricValue
    md: MetricValue
    sharpe: MetricValue
    sortino: MetricValue
    max_dd_days: MetricValue
    avg_dd_days: MetricValue
    var99: MetricValue
    vol_ann: MetricValue
    win_rate: MetricValue
    activeness: MetricValue

    def as_dict(self) -> dict[str, MetricValue]:
        return {name: getattr(self, name) for name in ALL_METRICS}

    def to_json(self) -> dict:
        return {name: mv.to_json() for name, mv in self.as_dict().items()}

    @classmethod
    def from_json(cls, data: dict) -> "MetricVector":
        return cls(**{name: MetricValue.from_json(data[name]) for name in ALL_METRICS})


@dataclass(frozen=True)
class CategoryScores:
    activeness: float
    consistency: float
    prediction: float
    profitability: float
    recovery: float
    robustness: float

    def as_dict(self) -> dict[str, float]:
        return {
            "activeness": self.activeness,
            "consistency": self.consistency,
            "prediction": self.prediction,
            "profitability": self.profitability,
            "recovery": self.recovery,
            "robustness": self.robustness,
        }


# ---------------------------------------------------------------------------
# The nine measures
# ---------------------------------------------------------------------------

def annualized_yield(returns: Sequence[float]) -> float:
    """Mean daily return scaled to a year."""
    if len(returns) == 0:
        raise EmptySeries("no returns")
    return float(np.mean(returns)) * TRADING_DAYS_PER_YEAR


def max_drawdown(nav: Sequence[float]) -> float:
    """Largest fractional decline from a running peak."""
    values = np.asarray(nav, dtype=float)
    if values.size == 0:
        raise EmptySeries("no NAV values")
    if np.any(values <= 0):
        raise NonPositiveNav("drawdown undefined for NAV <= 0")
    peaks = np.maximum.accumulate(values)
    return float(np.max((peaks - values) / peaks))


def sharpe(returns: Sequence[float]) -> float:
    """(mean - rf) / sample std, annualized by sqrt(252)."""
    r = np.asarray(returns, dtype=float)
    if r.size < 2:
        raise TooShort(f"need >= 2 returns, got {r.size}")
    sd = float(np.std(r, ddof=1))
    if sd == 0:
        raise ZeroVariance("constant returns")
    return (float(np.mean(r)) - RISK_FREE_DAILY) / sd * math.sqrt(TRADING_DAYS_PER_YEAR)


def sortino(returns: Sequence[float]) -> float:
    """Like Sharpe but risk is the downside deviation sqrt(mean(min(r,0)^2))."""
    r = np.asarray(returns, dtype=float)
    if r.size < 2:
        raise TooShort(f"need >= 2 returns, got {r.size}")
    downside = np.minimum(r, 0.0)
    dd = math.sqrt(float(np.mean(downside**2)))
    if dd == 0:
        raise NoDownside("no negative returns")
    return (float(np.mean(r)) - RISK_FREE_DAILY) / dd * math.sqrt(TRADING_DAYS_PER_YEAR)


def drawdown_durations(nav: Sequence[float]) -> dict:
    """Drawdown episode durations in calendar entries of the daily series.

    An episode runs from the day after a peak is left until the day the peak
    is first re-attained or exceeded; an episode still open at the series
    end counts up to the last day. Returns max, average (0 if no episodes),
    and the episode duration list.
    """
    values = list(nav)
    if not values:
        raise EmptySeries("no NAV values")
    if any(v <= 0 for v in values):
        raise NonPositiveNav("durations undefined for NAV <= 0")
    episodes: list[int] = []
    peak = values[0]
    peak_i = 0
    in_dd = False
    for j, v in enumerate(values):
        if v >= peak:
            if in_dd:
                episodes.append(j - peak_i)
                in_dd = False
            peak = v
            peak_i = j
        else:
            in_dd = True
    if in_dd:
        episodes.append(len(values) - 1 - peak_i)
    return {
        "max_dd_days": max(episodes) if episodes else 0,
        "avg_dd_days": float(np.mean(episodes)) if episodes else 0.0,
        "episodes": episodes,
    }


def var99(returns: Sequence[float]) -> float:
    """Empirical 1% quantile of daily returns (signed; higher is better)."""
    r = np.asarray(returns, dtype=float)
    if r.size < 2:
        raise TooShort(f"need >= 2 returns, got {r.size}")
    return float(np.quantile(r, 0.01))


def volatility(returns: Sequence[float]) -> float:
    """Sample standard deviation of daily returns, annualized."""
    r = np.asarray(returns, dtype=float)
    if r.size < 2:
        raise TooShort(f"need >= 2 returns, got {r.size}")
    return float(np.std(r, ddof=1)) * math.sqrt(TRADING_DAYS_PER_YEAR)


def win_rate(trips: Sequence[RoundTrip]) -> float:
    """Fraction of round trips with positive PnL; zero PnL is not a win."""
    if not trips:
        raise NoTrades("no round trips")
    wins = sum(1 for t in trips if t.realized_pnl > 0)
    return wins / len(trips)


def activeness(record: BacktestRecord) -> float:
    """Transactions per trading day."""
    days = len(record.nav_series)
    if days == 0:
        raise EmptyPeriod("record has no trading days")
    return len(record.transactions) / days


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------

def _attempt(fn, *args) -> MetricValue:
    try:
        return MetricValue.of(fn(*args))
    except TradaoError as exc:
        return MetricValue.miss(exc.code)


def compute_metrics(record: BacktestRecord) -> MetricVector:
    """All measures for one record; undefined ones become absent-with-reason."""
    navs = [v for _, v in record.nav_series]
    try:
        returns: list[float] | None = simple_returns(navs)
        returns_reason = ""
    except TradaoError as exc:
        returns = None
        returns_reason = exc.code

    def from_returns(fn) -> MetricValue:
        if returns is None:
            return MetricValue.miss(returns_reason)
        return _attempt(fn, returns)

    durations = _attempt(lambda nv: drawdown_durations(nv)["max_dd_days"], navs)
    avg_duration = _attempt(lambda nv: drawdown_durations(nv)["avg_dd_days"], navs)
    return MetricVector(
        yield_ann=from_returns(annualized_yield),
        md=_attempt(max_drawdown, navs),
        sharpe=from_returns(sharpe),
        sortino=from_returns(sortino),
        max_dd_days=durations,
        avg_dd_days=avg_duration,
        var99=from_returns(var99),
        vol_ann=from_returns(volatility),
        win_rate=_attempt(lambda txs: win_rate(round_trips(txs)), record.transactions),
        activeness=_attempt(activeness, record),
    )


def normalize_scores(
    vectors: Sequence[MetricVector],
    lower_is_better: frozenset[str] = LOWER_IS_BETTER,
) -> tuple[list[dict[str, float]], list[CategoryScores]]:
    """Min-max every metric across the instance set onto [0, 100].

    Lower-is-better metrics are inverted so 100 is always best. A metric
    whose min equals its max degenerates to 50; absent metrics score 0 and
    never pollute the pool. Category scores are plain means of their member
    metric scores.
    """
    if not vectors:
        raise EmptyInstanceSet("no instances to normalize")

    bounds: dict[str, tuple[float, float] | None] = {}
    for name in ALL_METRICS:
        pool = [getattr(v, name).value for v in vectors if getattr(v, name).ok]
        bounds[name] = (min(pool), max(pool)) if pool else None

    maps: list[dict[str, float]] = []
    for v in vectors:
        scores: dict[str, float] = {}
        for name in ALL_METRICS:
            mv = getattr(v, name)
            if not mv.ok or bounds[name] is None:
                scores[name] = 0.0
                continue
            lo, hi = bounds[name]
            if lo == hi:
                scores[name] = 50.0
            else:
                frac = (mv.value - lo) / (hi - lo)
                if name in lower_is_better:
                    frac = 1.0 - frac
                scores[name] = frac * 100.0
        maps.append(scores)

    categories = [
        CategoryScores(
            **{
                cat: float(np.mean([m[member] for member in members]))
                for cat, members in CATEGORY_MEMBERS.items()
            }
        )
        for m in maps
    ]
    return maps, categories
