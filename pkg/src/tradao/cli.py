"""Command-line entry points: ingest market data, run backtests, serve the UI."""
from __future__ import annotations

import json
import os
import sys

import click

from .errors import TradaoError
from .store import RunRequest, Store, canonical_json, strategy_to_json


def _data_dir(explicit: str | None) -> str:
    return explicit or os.environ.get("TRADAO_DATA", "./data")


data_option = click.option(
    "--data", "data_dir", default=None, help="Data directory (default $TRADAO_DATA or ./data)."
)


@click.group()
def main() -> None:
    """Trading-algorithm optimization workbench."""


@main.command("ingest-market")
@click.argument("csv_path", type=click.Path(exists=True))
@click.option("--symbol", required=True)
@click.option("--granularity", default="daily", type=click.Choice(["daily", "hourly"]))
@data_option
def ingest_market(csv_path: str, symbol: str, granularity: str, data_dir: str | None) -> None:
    """Load and validate a market CSV into the store."""
    store = Store(_data_dir(data_dir))
    with open(csv_path, "r", encoding="utf-8") as fh:
        series = store.ingest_market_csv(fh.read(), symbol, granularity)
    click.echo(f"loaded {len(series.points)} {granularity} bars for {symbol}")


@main.command("run")
@click.option("--params", "params_path", required=True, type=click.Path(exists=True))
@click.option("--from", "from_date", required=True, help="Period start, YYYY-MM-DD.")
@click.option("--to", "to_date", required=True, help="Period end, YYYY-MM-DD.")
@click.option("--parent", "parent_id", default=None)
@click.option("--strategy", "strategy_id", default=None)
@click.option("--label", default=None)
@click.option("--capital", default=1_000_000.0, show_default=True)
@click.option("--commission", default=0.0, show_default=True, help="Commission per unit.")
@data_option
def run(
    params_path: str,
    from_date: str,
    to_date: str,
    parent_id: str | None,
    strategy_id: str | None,
    label: str | None,
    capital: float,
    commission: float,
    data_dir: str | None,
) -> None:
    """Run a backtest from a params JSON file and register the instance."""
    store = Store(_data_dir(data_dir))
    with open(params_path, "r", encoding="utf-8") as fh:
        params_json = json.load(fh)
    req = RunRequest.from_json(
        {
            "params": params_json,
            "period": {"from": from_date, "to": to_date},
            "config": {"initial_capital": capital, "commission_per_unit": commission},
            "parent_id": parent_id,
            "strategy_id": strategy_id,
            "label": label,
        }
    )
    instance = store.run_and_register(req)
    click.echo(
        json.dumps(
            {
                "id": instance.id,
                "strategy_id": instance.strategy_id,
                "label": instance.label,
                "metrics": instance.metrics.to_json(),
            },
            indent=2,
        )
    )


@main.command("metrics")
@click.argument("instance_id")
@data_option
def metrics_cmd(instance_id: str, data_dir: str | None) -> None:
    """Print one instance's metric vector."""
    store = Store(_data_dir(data_dir))
    _, instance = store.find_instance(instance_id)
    click.echo(json.dumps(instance.metrics.to_json(), indent=2, sort_keys=True))


@main.command("tree")
@click.argument("strategy_id")
@data_option
def tree_cmd(strategy_id: str, data_dir: str | None) -> None:
    """Print a strategy's evolution tree JSON."""
    store = Store(_data_dir(data_dir))
    click.echo(canonical_json(strategy_to_json(store.get_strategy(strategy_id))), nl=False)


@main.command("serve")
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--static", "static_dir", default=None, help="Static UI bundle to serve at /.")
@data_option
def serve(port: int, host: str, static_dir: str | None, data_dir: str | None) -> None:
    """Start the REST service (and the UI, when a bundle is available)."""
    import uvicorn

    from .service import create_app

    if static_dir is None and os.path.isdir("frontend/dist"):
        static_dir = "frontend/dist"
    app = create_app(Store(_data_dir(data_dir)), static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)


def cli_main() -> None:
    try:
        main(standalone_mode=True)
    except TradaoError as exc:
        click.echo(f"error [{exc.code}]: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    cli_main()
