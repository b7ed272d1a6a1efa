"""Durable JSON store and the run/ingest orchestration.

Layout under the data directory:

    market/<SYMBOL>.json       one file per instrument
    records/<id>.json          one file per backtest record
    strategies/<id>.json       index file per strategy (tree + node refs)

Files are written canonically (sorted keys, 2-space indent, UTF-8) so a
save/load cycle is byte-stable and fixtures diff cleanly. Writes are
serialized behind a lock; reads are lock-free over immutable values.
"""
from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone

from .backtest import (
    BacktestRecord,
    ExecutionConfig,
    new_instance_id,
    record_from_json,
    record_to_json,
    run_backtest,
)
from .errors import (
    SchemaViolation,
    TradaoError,
    UnknownInstance,
    UnknownParent,
    UnknownStrategy,
    UnknownSymbol,
)
from .evolution import AlgorithmInstance, EvolutionTree
from .market_data import MarketSeries, PricePoint, iso_instant, parse_market_csv, parse_utc_instant
from .metrics import MetricVector, compute_metrics
from .models import ModelParams, params_from_dict, params_to_dict, symbols_of


def canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _now_iso() -> str:
    return datetime.now(tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class StrategyEntry:
    strategy_id: str
    model: str
    symbols: tuple[str, ...]
    created_at: str
    tree: EvolutionTree


@dataclass
class RunRequest:
    params: ModelParams
    period: tuple[str, str]
    config: ExecutionConfig = ExecutionConfig()
    strategy_id: str | None = None
    parent_id: str | None = None
    label: str | None = None

    @classmethod
    def from_json(cls, data: dict) -> "RunRequest":
        if not isinstance(data, dict):
            raise SchemaViolation("run request must be an object")
        for key in ("params", "period"):
            if key not in data:
                raise SchemaViolation(f"missing field {key!r}")
        period = data["period"]
        if not isinstance(period, dict) or "from" not in period or "to" not in period:
            raise SchemaViolation('period must be {"from": ..., "to": ...}')
        cfg = data.get("config", {})
        if not isinstance(cfg, dict):
            raise SchemaViolation("config must be an object")
        try:
            config = ExecutionConfig(
                initial_capital=float(cfg.get("initial_capital", 1_000_000.0)),
                commission_per_unit=float(cfg.get("commission_per_unit", 0.0)),
            )
        except (TypeError, ValueError) as exc:
            raise SchemaViolation(f"bad config: {exc}") from exc
        try:
            params = params_from_dict(data["params"])
        except TradaoError as exc:
            raise SchemaViolation(str(exc)) from exc
        return cls(
            params=params,
            period=(str(period["from"]), str(period["to"])),
            config=config,
            strategy_id=data.get("strategy_id"),
            parent_id=data.get("parent_id"),
            label=data.get("label"),
        )


def market_to_json(series: MarketSeries) -> dict:
    return {
        "symbol": series.symbol,
        "granularity": series.granularity,
        "points": [[iso_instant(p.ts), p.open, p.high, p.low, p.close, p.volume] for p in series.points],
    }


def market_from_json(data: dict) -> MarketSeries:
    return MarketSeries(
        symbol=str(data["symbol"]),
        granularity=str(data["granularity"]),
        points=[
            PricePoint(
                ts=parse_utc_instant(row[0]),
                open=float(row[1]),
                high=float(row[2]),
                low=float(row[3]),
                close=float(row[4]),
                volume=float(row[5]),
            )
            for row in data["points"]
        ],
    )


def strategy_to_json(entry: StrategyEntry) -> dict:
    return {
        "strategy_id": entry.strategy_id,
        "model": entry.model,
        "symbols": list(entry.symbols),
        "created_at": entry.created_at,
        "root": entry.tree.root_id,
        "nodes": [
            {
                "id": n.id,
                "label": n.label,
                "parent": n.parent_id,
                "params": params_to_dict(n.params),
                "metrics": n.metrics.to_json(),
                "record": n.record_ref,
                "created_at": n.created_at,
            }
            for n in entry.tree.nodes.values()
        ],
    }


def strategy_from_json(data: dict) -> StrategyEntry:
    entry = StrategyEntry(
        strategy_id=str(data["strategy_id"]),
        model=str(data["model"]),
        symbols=tuple(data["symbols"]),
        created_at=str(data["created_at"]),
        tree=EvolutionTree(str(data["strategy_id"]), str(data["model"])),
    )
    for node in data["nodes"]:
        entry.tree.add_instance(
            instance_id=str(node["id"]),
            parent_id=node["parent"],
            params=params_from_dict(node["params"]),
            record_ref=str(node["record"]),
            metrics=MetricVector.from_json(node["metrics"]),
            label=str(node["label"]),
            created_at=str(node["created_at"]),
        )
    return entry


REQUIRED_RECORD_FIELDS = (
    "instance_id",
    "params",
    "period",
    "initial_capital",
    "transactions",
    "nav_series",
    "cash_series",
    "variable_series",
    "residuals",
)


def validate_record_payload(payload: dict) -> BacktestRecord:
    """Schema-check an interchange record; raises SchemaViolation."""
    if not isinstance(payload, dict):
        raise SchemaViolation("record must be an object")
    missing = [f for f in REQUIRED_RECORD_FIELDS if f not in payload]
    if missing:
        raise SchemaViolation(f"record missing fields: {', '.join(missing)}")
    try:
        record = record_from_json(payload)
    except TradaoError as exc:
        raise SchemaViolation(f"bad record: {exc}") from exc
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise SchemaViolation(f"bad record: {exc!r}") from exc
    if not record.nav_series:
        raise SchemaViolation("record has an empty nav_series")
    if len(record.nav_series) != len(record.cash_series):
        raise SchemaViolation("nav_series and cash_series must share the trading calendar")
    return record


class Store:
    """File-backed store with in-memory caches and write-through persistence."""

    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        self._lock = threading.Lock()
        self.market: dict[str, MarketSeries] = {}
        self.strategies: dict[str, StrategyEntry] = {}
        self._records: dict[str, BacktestRecord] = {}
        for sub in ("market", "records", "strategies"):
            os.makedirs(os.path.join(data_dir, sub), exist_ok=True)
        self._load_all()

    # -- paths and io ---------------------------------------------------------

    def _path(self, kind: str, key: str) -> str:
        return os.path.join(self.data_dir, kind, f"{key}.json")

    def _write(self, kind: str, key: str, payload: dict) -> None:
        path = self._path(kind, key)
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(canonical_json(payload))
        os.replace(tmp, path)

    def _read(self, kind: str, key: str) -> dict:
        with open(self._path(kind, key), "r", encoding="utf-8") as fh:
            return json.load(fh)

    def _load_all(self) -> None:
        for name in sorted(os.listdir(os.path.join(self.data_dir, "market"))):
            if name.endswith(".json"):
                series = market_from_json(self._read("market", name[:-5]))
                self.market[series.symbol] = series
        entries = []
        for name in sorted(os.listdir(os.path.join(self.data_dir, "strategies"))):
            if name.endswith(".json"):
                entries.append(strategy_from_json(self._read("strategies", name[:-5])))
        entries.sort(key=lambda e: (e.created_at, e.strategy_id))
        self.strategies = {e.strategy_id: e for e in entries}

    def resave_all(self) -> None:
        """Re-serialize everything (used to verify byte-stable round trips)."""
        with self._lock:
            for series in self.market.values():
                self._write("market", series.symbol, market_to_json(series))
            for entry in self.strategies.values():
                self._write("strategies", entry.strategy_id, strategy_to_json(entry))
            for name in os.listdir(os.path.join(self.data_dir, "records")):
                if name.endswith(".json"):
                    record = self.get_record(name[:-5])
                    self._write("records", record.instance_id, record_to_json(record))

    # -- market ----------------------------------------------------------------

    def ingest_market_csv(self, text: str, symbol: str, granularity: str = "daily") -> MarketSeries:
        series = parse_market_csv(text, symbol, granularity)
        with self._lock:
            self.market[symbol] = series
            self._write("market", symbol, market_to_json(series))
        return series

    def get_market(self, symbol: str) -> MarketSeries:
        if symbol not in self.market:
            raise UnknownSymbol(symbol)
        return self.market[symbol]

    def list_markets(self) -> list[dict]:
        out = []
        for symbol in sorted(self.market):
            s = self.market[symbol]
            out.append(
                {
                    "symbol": symbol,
                    "granularity": s.granularity,
                    "points": len(s.points),
                    "first": iso_instant(s.points[0].ts),
                    "last": iso_instant(s.points[-1].ts),
                }
            )
        return out

    # -- lookups ----------------------------------------------------------------

    def get_strategy(self, strategy_id: str) -> StrategyEntry:
        if strategy_id not in self.strategies:
            raise UnknownStrategy(strategy_id)
        return self.strategies[strategy_id]

    def list_strategies(self) -> list[StrategyEntry]:
        return sorted(self.strategies.values(), key=lambda e: (e.created_at, e.strategy_id))

    def find_instance(self, instance_id: str) -> tuple[StrategyEntry, AlgorithmInstance]:
        for entry in self.strategies.values():
            if instance_id in entry.tree:
                return entry, entry.tree.nodes[instance_id]
        raise UnknownInstance(instance_id)

    def has_instance(self, instance_id: str) -> bool:
        return any(instance_id in e.tree for e in self.strategies.values())

    def get_record(self, record_id: str) -> BacktestRecord:
        if record_id not in self._records:
            if not os.path.exists(self._path("records", record_id)):
                raise UnknownInstance(record_id)
            self._records[record_id] = record_from_json(self._read("records", record_id))
        return self._records[record_id]

    def record_of(self, instance_id: str) -> BacktestRecord:
        _, instance = self.find_instance(instance_id)
        return self.get_record(instance.record_ref)

    # -- registration ------------------------------------------------------------

    def _resolve_strategy(
        self, params: ModelParams, strategy_id: str | None, parent_id: str | None
    ) -> StrategyEntry:
        """Pick the target strategy; creates one for parentless new roots."""
        if parent_id is not None:
            parent_entry = None
            for entry in self.strategies.values():
                if parent_id in entry.tree:
                    parent_entry = entry
                    break
            if parent_entry is None:
                raise UnknownParent(parent_id)
            if strategy_id is not None and strategy_id != parent_entry.strategy_id:
                raise UnknownParent(f"{parent_id} is not in strategy {strategy_id}")
            return parent_entry
        if strategy_id is not None:
            return self.get_strategy(strategy_id)
        new_id = f"strat-{uuid.uuid4().hex[:10]}"
        return StrategyEntry(
            strategy_id=new_id,
            model=params.kind,
            symbols=tuple(symbols_of(params)),
            created_at=_now_iso(),
            tree=EvolutionTree(new_id, params.kind),
        )

    def _register(
        self,
        record: BacktestRecord,
        metrics: MetricVector,
        params: ModelParams,
        strategy_id: str | None,
        parent_id: str | None,
        label: str | None,
    ) -> AlgorithmInstance:
        entry = self._resolve_strategy(params, strategy_id, parent_id)
        instance = entry.tree.add_instance(
            instance_id=record.instance_id,
            parent_id=parent_id,
            params=params,
            record_ref=record.instance_id,
            metrics=metrics,
            label=label,
        )
        self.strategies.setdefault(entry.strategy_id, entry)
        self._records[record.instance_id] = record
        self._write("records", record.instance_id, record_to_json(record))
        self._write("strategies", entry.strategy_id, strategy_to_json(entry))
        return instance

    def run_and_register(self, req: RunRequest) -> AlgorithmInstance:
        """Backtest + metrics + tree insertion, persisted all-or-nothing.

        Validation and computation happen before any mutation, so a failing
        request leaves both memory and disk untouched.
        """
        with self._lock:
            for sym in symbols_of(req.params):
                if sym not in self.market:
                    raise UnknownSymbol(sym)
            instance_id = new_instance_id(req.params, req.period, req.config)
            record = run_backtest(
                req.params, self.market, req.period, req.config, instance_id=instance_id
            )
            metrics = compute_metrics(record)
            return self._register(
                record, metrics, req.params, req.strategy_id, req.parent_id, req.label
            )

    def ingest_record(
        self, payload: dict, parent_id: str | None = None, label: str | None = None
    ) -> AlgorithmInstance:
        """Register an externally produced record; idempotent on instance_id."""
        record = validate_record_payload(payload)
        with self._lock:
            if self.has_instance(record.instance_id):
                _, existing = self.find_instance(record.instance_id)
                return existing
            for sym in symbols_of(record.params):
                if sym not in self.market:
                    raise UnknownSymbol(sym)
            metrics = compute_metrics(record)
            return self._register(record, metrics, record.params, None, parent_id, label)
