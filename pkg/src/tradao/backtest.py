"""Event-driven backtest execution.

Signals fill at the same bar's close plus a per-unit commission; positions
mark to market at the last bar of every calendar day; all open positions are
force-closed on the final bar so NAV ends fully realized. Cash and positions
may both go negative (leverage and short inventory are legal states — the
liquidity views exist to surface them).
"""
from __future__ import annotations

import hashlib
import json
import uuid
from collections import deque
from dataclasses import dataclass, field, replace

from .errors import EmptyPeriod, InvalidParams, MissingSymbol
from .market_data import MarketSeries, align_many, align_series, ts_date
from .models import (
    ModelOutput,
    ModelParams,
    MovingAverageParams,
    PairsTradingParams,
    ResidualSeries,
    Signal,
    VariableSeries,
    params_to_dict,
    run_model,
    symbols_of,
)


@dataclass(frozen=True)
class Transaction:
    ts: int
    symbol: str
    side: str  # buy | sell
    size: float
    price: float
    cash_delta: float  # -price*size for buys, +price*size for sells, net of commission


@dataclass
class PortfolioState:
    cash: float
    positions: dict[str, float] = field(default_factory=dict)
    nav: float = 0.0

    def mark(self, prices: dict[str, float]) -> float:
        self.nav = self.cash + sum(q * prices[s] for s, q in sorted(self.positions.items()))
        return self.nav


@dataclass(frozen=True)
class ExecutionConfig:
    initial_capital: float = 1_000_000.0
    commission_per_unit: float = 0.0


@dataclass
class BacktestRecord:
    instance_id: str
    params: ModelParams
    period: tuple[str, str]
    transactions: list[Transaction]
    nav_series: list[tuple[str, float]]
    cash_series: list[tuple[str, float]]
    variable_series: list[VariableSeries]
    residuals: ResidualSeries
    initial_capital: float

    def trading_days(self) -> list[str]:
        return [d for d, _ in self.nav_series]


def new_instance_id(params: ModelParams, period: tuple[str, str], config: ExecutionConfig) -> str:
    """Content-addressed prefix plus a random suffix."""
    payload = json.dumps(
        {
            "params": params_to_dict(params),
            "period": list(period),
            "config": [config.initial_capital, config.commission_per_unit],
        },
        sort_keys=True,
    )
    digest = hashlib.sha256(payload.encode()).hexdigest()[:12]
    return f"{digest}-{uuid.uuid4().hex[:6]}"


def apply_transaction(state: PortfolioState, t: Transaction) -> PortfolioState:
    """Pure state transition; negative cash and positions are legal."""
    if t.price <= 0:
        raise InvalidParams("transaction price must be > 0")
    positions = dict(state.positions)
    signed = t.size if t.side == "buy" else -t.size
    positions[t.symbol] = positions.get(t.symbol, 0.0) + signed
    return PortfolioState(cash=state.cash + t.cash_delta, positions=positions, nav=state.nav)


def _make_transaction(ts: int, symbol: str, side: str, size: float, price: float, commission: float) -> Transaction:
    gross = price * size
    cash_delta = (-gross if side == "buy" else gross) - commission * size
    return Transaction(ts=ts, symbol=symbol, side=side, size=size, price=price, cash_delta=cash_delta)


def _prepare_series(
    params: ModelParams, market: dict[str, MarketSeries], period: tuple[str, str]
) -> dict[str, MarketSeries]:
    """Slice to the period and align across the model's instruments."""
    symbols = symbols_of(params)
    for sym in symbols:
        if sym not in market:
            raise MissingSymbol(sym)
    sliced = {}
    for sym in symbols:
        s = market[sym].slice_dates(period[0], period[1])
        if not s.points:
            raise EmptyPeriod(f"{sym} has no bars in [{period[0]}, {period[1]}]")
        sliced[sym] = s
    if isinstance(params, MovingAverageParams):
        return sliced
    if isinstance(params, PairsTradingParams):
        a, b = align_series(sliced[params.symbol_a], sliced[params.symbol_b])
        return {a.symbol: a, b.symbol: b}
    aligned = align_many([sliced[s] for s in symbols])
    return {s.symbol: s for s in aligned}


def run_backtest(
    params: ModelParams,
    market: dict[str, MarketSeries],
    period: tuple[str, str],
    config: ExecutionConfig = ExecutionConfig(),
    instance_id: str | None = None,
) -> BacktestRecord:
    """Run one parameter configuration against historical data."""
    if config.initial_capital <= 0:
        raise InvalidParams("initial_capital must be > 0")
    if period[0] > period[1]:
        raise EmptyPeriod(f"empty period [{period[0]}, {period[1]}]")

    aligned = _prepare_series(params, market, period)
    output: ModelOutput = run_model(params, aligned)

    driving = aligned[symbols_of(params)[0]]
    calendar = driving.timestamps()
    prices: dict[str, dict[int, float]] = {
        sym: {p.ts: p.close for p in s.points} for sym, s in aligned.items()
    }

    by_ts: dict[int, list[Signal]] = {}
    for sig in output.signals:
        by_ts.setdefault(sig.ts, []).append(sig)

    state = PortfolioState(cash=config.initial_capital)
    transactions: list[Transaction] = []
    nav_series: list[tuple[str, float]] = []
    cash_series: list[tuple[str, float]] = []

    def execute(ts: int, symbol: str, side: str, size: float) -> None:
        nonlocal state
        t = _make_transaction(ts, symbol, side, size, prices[symbol][ts], config.commission_per_unit)
        transactions.append(t)
        state = apply_transaction(state, t)

    for i, ts in enumerate(calendar):
        for sig in by_ts.get(ts, ()):  # fills at this bar's close
            if sig.direction == "close":
                held = state.positions.get(sig.symbol, 0.0)
                if held == 0.0:
                    continue
                side = "sell" if held > 0 else "buy"
                execute(ts, sig.symbol, side, min(sig.size, abs(held)))
            else:
                execute(ts, sig.symbol, sig.direction, sig.size)

        last_bar = i == len(calendar) - 1
        if last_bar:
            for sym, qty in sorted(state.positions.items()):
                if qty != 0.0:
                    execute(ts, sym, "sell" if qty > 0 else "buy", abs(qty))
        if last_bar or ts_date(calendar[i + 1]) != ts_date(ts):
            state.mark({sym: prices[sym][ts] for sym in state.positions})
            nav_series.append((ts_date(ts), state.nav))
            cash_series.append((ts_date(ts), state.cash))

    return BacktestRecord(
        instance_id=instance_id or new_instance_id(params, period, config),
        params=params,
        period=period,
        transactions=transactions,
        nav_series=nav_series,
        cash_series=cash_series,
        variable_series=output.variables,
        residuals=output.residuals,
        initial_capital=config.initial_capital,
    )


# ---------------------------------------------------------------------------
# Round trips
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RoundTrip:
    symbol: str
    realized_pnl: float


def round_trips(transactions: list[Transaction]) -> list[RoundTrip]:
    """FIFO-match opposing fills per symbol into realized round trips.

    Each matched (open lot, closing fill) portion yields one round trip;
    commission is allocated pro-rata through the fills' own cash deltas.
    Unmatched remainders are ignored (run_backtest force-closes them).
    """
    # unit_cash: per-unit cost for buys (incl. commission), per-unit
    # proceeds for sells (net of commission)
    books: dict[str, deque] = {}
    trips: list[RoundTrip] = []
    for t in transactions:
        unit_cash = abs(t.cash_delta) / t.size if t.side == "buy" else t.cash_delta / t.size
        book = books.setdefault(t.symbol, deque())
        remaining = t.size
        while remaining > 1e-12 and book and book[0][0] != t.side:
            side, qty, unit = book[0]
            matched = min(qty, remaining)
            if side == "buy":  # closing a long with this sell
                pnl = (unit_cash - unit) * matched
            else:  # covering a short with this buy
                pnl = (unit - unit_cash) * matched
            trips.append(RoundTrip(symbol=t.symbol, realized_pnl=pnl))
            remaining -= matched
            if qty - matched > 1e-12:
                book[0] = (side, qty - matched, unit)
            else:
                book.popleft()
        if remaining > 1e-12:
            book.append((t.side, remaining, unit_cash))
    return trips


# ---------------------------------------------------------------------------
# JSON encoding (the canonical interchange format)
# ---------------------------------------------------------------------------

def transaction_to_json(t: Transaction) -> dict:
    from .market_data import iso_instant

    return {
        "timestamp": iso_instant(t.ts),
        "symbol": t.symbol,
        "side": t.side,
        "size": t.size,
        "price": t.price,
        "cash_delta": t.cash_delta,
    }


def transaction_from_json(data: dict) -> Transaction:
    from .market_data import parse_utc_instant

    return Transaction(
        ts=parse_utc_instant(data["timestamp"]),
        symbol=str(data["symbol"]),
        side=str(data["side"]),
        size=float(data["size"]),
        price=float(data["price"]),
        cash_delta=float(data["cash_delta"]),
    )


def record_to_json(record: BacktestRecord) -> dict:
    from .market_data import iso_instant

    return {
        "instance_id": record.instance_id,
        "params": params_to_dict(record.params),
        "period": {"from": record.period[0], "to": record.period[1]},
        "initial_capital": record.initial_capital,
        "transactions": [transaction_to_json(t) for t in record.transactions],
        "nav_series": [[d, v] for d, v in record.nav_series],
        "cash_series": [[d, v] for d, v in record.cash_series],
        "variable_series": [
            {
                "name": vs.name,
                "points": [[iso_instant(t), v] for t, v in zip(vs.timestamps, vs.values)],
            }
            for vs in record.variable_series
        ],
        "residuals": list(record.residuals.values),
    }


def record_from_json(data: dict) -> BacktestRecord:
    from .market_data import parse_utc_instant
    from .models import params_from_dict

    return BacktestRecord(
        instance_id=str(data["instance_id"]),
        params=params_from_dict(data["params"]),
        period=(str(data["period"]["from"]), str(data["period"]["to"])),
        transactions=[transaction_from_json(t) for t in data["transactions"]],
        nav_series=[(str(d), float(v)) for d, v in data["nav_series"]],
        cash_series=[(str(d), float(v)) for d, v in data["cash_series"]],
        variable_series=[
            VariableSeries(
                name=str(vs["name"]),
                timestamps=[parse_utc_instant(p[0]) for p in vs["points"]],
                values=[float(p[1]) for p in vs["points"]],
            )
            for vs in data["variable_series"]
        ],
        residuals=ResidualSeries([float(v) for v in data["residuals"]]),
        initial_capital=float(data["initial_capital"]),
    )
