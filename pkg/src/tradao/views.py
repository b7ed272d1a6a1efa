"""Cash-usage and trading-history view data.

Liquidity statuses are a pure function of (cash, thresholds) so the UI can
re-derive them when the user drags the threshold sliders; trade summaries
aggregate fills per calendar day and carry end-of-day outstanding inventory
for every day in range (the background shading needs the no-trade days too).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .backtest import BacktestRecord, Transaction
from .errors import InvalidPeriod, InvalidThresholds, UnknownSymbol
from .market_data import MarketSeries, ts_date

DEFAULT_WARNING_FRACTION = 0.20
DEFAULT_DANGER_FRACTION = 0.05


@dataclass(frozen=True)
class LiquidityThresholds:
    warning_level: float
    danger_level: float

    def __post_init__(self) -> None:
        if self.danger_level > self.warning_level:
            raise InvalidThresholds(
                f"danger {self.danger_level} above warning {self.warning_level}"
            )

    @classmethod
    def defaults(cls, initial_capital: float) -> "LiquidityThresholds":
        return cls(
            warning_level=DEFAULT_WARNING_FRACTION * initial_capital,
            danger_level=DEFAULT_DANGER_FRACTION * initial_capital,
        )


def classify_cash(cash: float, thresholds: LiquidityThresholds) -> str:
    if cash < thresholds.danger_level:
        return "danger"
    if cash < thresholds.warning_level:
        return "warning"
    return "ok"


@dataclass(frozen=True)
class CashUsagePoint:
    date: str
    nav: float
    available_cash: float
    status: str

    def to_json(self) -> dict:
        return {
            "date": self.date,
            "nav": self.nav,
            "available_cash": self.available_cash,
            "status": self.status,
        }


def _check_range(from_date: str | None, to_date: str | None) -> None:
    if from_date is not None and to_date is not None and from_date > to_date:
        raise InvalidPeriod(f"from {from_date} after to {to_date}")


def cash_usage(
    record: BacktestRecord,
    thresholds: LiquidityThresholds,
    from_date: str | None = None,
    to_date: str | None = None,
) -> list[CashUsagePoint]:
    """One classified point per trading day in range."""
    _check_range(from_date, to_date)
    points = [
        CashUsagePoint(date=d, nav=nav, available_cash=cash, status=classify_cash(cash, thresholds))
        for (d, nav), (_, cash) in zip(record.nav_series, record.cash_series)
        if (from_date is None or d >= from_date) and (to_date is None or d <= to_date)
    ]
    if not points:
        raise InvalidPeriod("no trading days in range")
    return points


@dataclass(frozen=True)
class BreachEpisode:
    level: str
    start_date: str
    end_date: str

    def to_json(self) -> dict:
        return {"level": self.level, "start_date": self.start_date, "end_date": self.end_date}


def liquidity_breaches(points: Sequence[CashUsagePoint]) -> list[BreachEpisode]:
    """Maximal consecutive runs of warning/danger status."""
    episodes: list[BreachEpisode] = []
    run_status: str | None = None
    run_start = ""
    run_end = ""
    for p in points:
        if p.status == run_status:
            run_end = p.date
            continue
        if run_status in ("warning", "danger"):
            episodes.append(BreachEpisode(run_status, run_start, run_end))
        run_status = p.status
        run_start = run_end = p.date
    if run_status in ("warning", "danger"):
        episodes.append(BreachEpisode(run_status, run_start, run_end))
    return episodes


@dataclass(frozen=True)
class DailyTradeSummary:
    date: str
    symbol: str
    net_volume: float
    vwap: float | None
    buy_high: float | None
    buy_low: float | None
    sell_high: float | None
    sell_low: float | None
    outstanding_inventory: float

    def to_json(self) -> dict:
        return {
            "date": self.date,
            "symbol": self.symbol,
            "net_volume": self.net_volume,
            "vwap": self.vwap,
            "buy_high": self.buy_high,
            "buy_low": self.buy_low,
            "sell_high": self.sell_high,
            "sell_low": self.sell_low,
            "outstanding_inventory": self.outstanding_inventory,
        }


def daily_trade_summaries(
    record: BacktestRecord,
    symbol: str,
    from_date: str | None = None,
    to_date: str | None = None,
) -> list[DailyTradeSummary]:
    """Per-day aggregation of one symbol's fills plus end-of-day inventory.

    Net volume is buys minus sells; the average price is volume-weighted
    across both sides; price extremes are per side. Days without trades
    still appear, carrying the inventory level only.
    """
    _check_range(from_date, to_date)
    fills: dict[str, list[Transaction]] = {}
    for t in record.transactions:
        if t.symbol == symbol:
            fills.setdefault(ts_date(t.ts), []).append(t)

    out: list[DailyTradeSummary] = []
    inventory = 0.0
    for d, _ in record.nav_series:
        for t in fills.get(d, ()):
            inventory += t.size if t.side == "buy" else -t.size
        if (from_date is not None and d < from_date) or (to_date is not None and d > to_date):
            continue
        day = fills.get(d, [])
        buys = [t for t in day if t.side == "buy"]
        sells = [t for t in day if t.side == "sell"]
        total_size = sum(t.size for t in day)
        out.append(
            DailyTradeSummary(
                date=d,
                symbol=symbol,
                net_volume=sum(t.size for t in buys) - sum(t.size for t in sells),
                vwap=sum(t.price * t.size for t in day) / total_size if day else None,
                buy_high=max(t.price for t in buys) if buys else None,
                buy_low=min(t.price for t in buys) if buys else None,
                sell_high=max(t.price for t in sells) if sells else None,
                sell_low=min(t.price for t in sells) if sells else None,
                outstanding_inventory=inventory,
            )
        )
    if not out:
        raise InvalidPeriod("no trading days in range")
    return out


def market_overlay(
    market: Mapping[str, MarketSeries],
    symbols: Sequence[str],
    from_date: str | None = None,
    to_date: str | None = None,
) -> dict[str, list[list]]:
    """Percent-change series per symbol, rebased to 100 at the range start."""
    _check_range(from_date, to_date)
    out: dict[str, list[list]] = {}
    for sym in symbols:
        if sym not in market:
            raise UnknownSymbol(sym)
        daily = [
            (d, c)
            for d, c in market[sym].daily_closes()
            if (from_date is None or d >= from_date) and (to_date is None or d <= to_date)
        ]
        if not daily:
            raise InvalidPeriod(f"{sym} has no data in range")
        base = daily[0][1]
        out[sym] = [[d, 100.0 * c / base] for d, c in daily]
    return out
