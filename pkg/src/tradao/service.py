"""REST service exposing the workbench to the UI.

All responses are JSON; client faults map to 4xx with a machine-readable
``code`` (path lookups that miss are 404, everything else 422). Responses
for a fixed store are deterministic: every listing has a stable sort.
"""
from __future__ import annotations

import os

from fastapi import Body, FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import analytics, views
from .backtest import record_to_json
from .errors import TradaoError, UnknownInstance, UnknownStrategy, UnknownSymbol
from .evolution import AlgorithmInstance
from .market_data import iso_instant
from .metrics import normalize_scores
from .models import params_to_dict, symbols_of
from .store import RunRequest, Store, StrategyEntry, market_to_json, strategy_to_json

NOT_FOUND_CODES = {"UnknownInstance", "UnknownStrategy", "UnknownSymbol"}


def _instance_payload(store: Store, entry: StrategyEntry, instance: AlgorithmInstance) -> dict:
    ordered = list(entry.tree.nodes.values())
    score_maps, categories = normalize_scores([n.metrics for n in ordered])
    idx = next(i for i, n in enumerate(ordered) if n.id == instance.id)
    record = store.get_record(instance.record_ref)
    return {
        "id": instance.id,
        "strategy_id": entry.strategy_id,
        "label": instance.label,
        "parent": instance.parent_id,
        "created_at": instance.created_at,
        "params": params_to_dict(instance.params),
        "metrics": instance.metrics.to_json(),
        "scores": {"metrics": score_maps[idx], "categories": categories[idx].as_dict()},
        "record": {
            "record_id": record.instance_id,
            "period": {"from": record.period[0], "to": record.period[1]},
            "initial_capital": record.initial_capital,
            "symbols": symbols_of(record.params),
            "transactions": len(record.transactions),
            "trading_days": len(record.nav_series),
        },
    }


def _tree_payload(entry: StrategyEntry) -> dict:
    """The documented tree JSON, with each node carrying its glyph data so
    the UI never computes relatives/scores itself."""
    payload = strategy_to_json(entry)
    ordered = list(entry.tree.nodes.values())
    score_maps, categories = normalize_scores([n.metrics for n in ordered])
    for i, node_json in enumerate(payload["nodes"]):
        glyph = entry.tree.glyph_data(ordered[i].id)
        node_json["scores"] = {
            "metrics": score_maps[i],
            "categories": categories[i].as_dict(),
        }
        node_json["ring"] = glyph.ring
        node_json["deltas"] = glyph.deltas
    return payload


def create_app(store: Store, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="tradao", docs_url=None, redoc_url=None)

    @app.exception_handler(TradaoError)
    async def _tradao_error(_request: Request, exc: TradaoError) -> JSONResponse:
        status = 404 if exc.code in NOT_FOUND_CODES else 422
        return JSONResponse(status_code=status, content={"code": exc.code, "message": str(exc)})

    # -- strategies / instances ------------------------------------------------

    @app.get("/api/strategies")
    def list_strategies() -> list[dict]:
        return [
            {
                "strategy_id": e.strategy_id,
                "model": e.model,
                "symbols": list(e.symbols),
                "created_at": e.created_at,
                "instances": len(e.tree),
                "root": e.tree.root_id,
            }
            for e in store.list_strategies()
        ]

    @app.get("/api/strategies/{strategy_id}/tree")
    def strategy_tree(strategy_id: str) -> dict:
        return _tree_payload(store.get_strategy(strategy_id))

    @app.get("/api/instances/{instance_id}")
    def instance_detail(instance_id: str) -> dict:
        entry, instance = store.find_instance(instance_id)
        return _instance_payload(store, entry, instance)

    @app.get("/api/instances/{instance_id}/parallel")
    def instance_parallel(instance_id: str) -> dict:
        entry, _ = store.find_instance(instance_id)
        payload = entry.tree.parallel_coordinates(instance_id)
        for row in payload["rows"]:
            row["values"] = {k: v.to_json() for k, v in row["values"].items()}
        return payload

    @app.get("/api/instances/{instance_id}/correlation")
    def instance_correlation(instance_id: str, window: int = Query(30, ge=2)) -> dict:
        entry, instance = store.find_instance(instance_id)
        record = store.get_record(instance.record_ref)
        parent_vars = None
        if instance.parent_id is not None:
            parent_record = store.get_record(entry.tree.nodes[instance.parent_id].record_ref)
            parent_vars = parent_record.variable_series
        grid = analytics.correlation_grid(record.variable_series, parent_vars, window=window)
        return grid.to_json()

    @app.get("/api/instances/{instance_id}/residuals")
    def instance_residuals(instance_id: str, bins: int = Query(20, ge=1)) -> dict:
        record = store.record_of(instance_id)
        return analytics.residual_summary(record.residuals, bins=bins).to_json()

    @app.get("/api/instances/{instance_id}/cash")
    def instance_cash(
        instance_id: str,
        from_date: str | None = Query(None, alias="from"),
        to_date: str | None = Query(None, alias="to"),
        warning: float | None = Query(None),
        danger: float | None = Query(None),
    ) -> dict:
        record = store.record_of(instance_id)
        defaults = views.LiquidityThresholds.defaults(record.initial_capital)
        thresholds = views.LiquidityThresholds(
            warning_level=warning if warning is not None else defaults.warning_level,
            danger_level=danger if danger is not None else defaults.danger_level,
        )
        points = views.cash_usage(record, thresholds, from_date, to_date)
        return {
            "initial_capital": record.initial_capital,
            "thresholds": {
                "warning_level": thresholds.warning_level,
                "danger_level": thresholds.danger_level,
            },
            "points": [p.to_json() for p in points],
            "breaches": [b.to_json() for b in views.liquidity_breaches(points)],
        }

    @app.get("/api/instances/{instance_id}/trades")
    def instance_trades(
        instance_id: str,
        symbol: str | None = Query(None),
        from_date: str | None = Query(None, alias="from"),
        to_date: str | None = Query(None, alias="to"),
    ) -> dict:
        record = store.record_of(instance_id)
        sym = symbol or symbols_of(record.params)[0]
        summaries = views.daily_trade_summaries(record, sym, from_date, to_date)
        return {"symbol": sym, "days": [s.to_json() for s in summaries]}

    @app.get("/api/instances/{instance_id}/record")
    def instance_record(instance_id: str) -> dict:
        return record_to_json(store.record_of(instance_id))

    # -- market ------------------------------------------------------------------

    @app.get("/api/market")
    def list_markets() -> list[dict]:
        return store.list_markets()

    @app.get("/api/market/{symbol}")
    def market_series(
        symbol: str,
        from_date: str | None = Query(None, alias="from"),
        to_date: str | None = Query(None, alias="to"),
    ) -> dict:
        series = store.get_market(symbol).slice_dates(from_date, to_date)
        payload = market_to_json(series)
        payload["points"] = [[iso_instant(p.ts), p.open, p.high, p.low, p.close, p.volume] for p in series.points]
        return payload

    @app.get("/api/market/{symbol}/overlay")
    def market_overlay(
        symbol: str,
        from_date: str | None = Query(None, alias="from"),
        to_date: str | None = Query(None, alias="to"),
    ) -> dict:
        series = views.market_overlay(store.market, [symbol], from_date, to_date)
        return {"symbol": symbol, "points": series[symbol]}

    # -- writes --------------------------------------------------------------------

    @app.post("/api/market", status_code=201)
    async def upload_market(
        request: Request,
        symbol: str = Query(...),
        granularity: str = Query("daily"),
    ) -> dict:
        body = await request.body()
        series = store.ingest_market_csv(body.decode("utf-8"), symbol, granularity)
        return {"symbol": series.symbol, "granularity": series.granularity, "points": len(series.points)}

    @app.post("/api/instances", status_code=201)
    def ingest_instance(payload: dict = Body(...)) -> dict:
        record = payload.get("record", payload)
        instance = store.ingest_record(
            record, parent_id=payload.get("parent_id"), label=payload.get("label")
        )
        entry, instance = store.find_instance(instance.id)
        return _instance_payload(store, entry, instance)

    @app.post("/api/backtests", status_code=201)
    def run_backtest_endpoint(payload: dict = Body(...)) -> dict:
        instance = store.run_and_register(RunRequest.from_json(payload))
        entry, instance = store.find_instance(instance.id)
        return _instance_payload(store, entry, instance)

    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
