"""Trading-algorithm optimization workbench.

Backtests parameterized trading models, tracks each configuration as a node
in a strategy evolution tree, computes performance metrics and diagnostics,
and serves them over REST to an interactive five-view UI.
"""

from .backtest import (
    BacktestRecord,
    ExecutionConfig,
    PortfolioState,
    RoundTrip,
    Transaction,
    apply_transaction,
    round_trips,
    run_backtest,
)
from .errors import TradaoError
from .evolution import AlgorithmInstance, EvolutionTree, GlyphData
from .market_data import MarketSeries, PricePoint, align_series, load_market_csv, simple_returns
from .metrics import CategoryScores, MetricValue, MetricVector, compute_metrics, normalize_scores
from .models import (
    LinearRegressionParams,
    ModelParams,
    MovingAverageParams,
    PairsTradingParams,
    ResidualSeries,
    Signal,
    VariableSeries,
)
from .store import RunRequest, Store

__version__ = "0.1.0"

__all__ = [
    "AlgorithmInstance",
    "BacktestRecord",
    "CategoryScores",
    "EvolutionTree",
    "ExecutionConfig",
    "GlyphData",
    "LinearRegressionParams",
    "MarketSeries",
    "MetricValue",
    "MetricVector",
    "ModelParams",
    "MovingAverageParams",
    "PairsTradingParams",
    "PortfolioState",
    "PricePoint",
    "ResidualSeries",
    "RoundTrip",
    "RunRequest",
    "Signal",
    "Store",
    "TradaoError",
    "Transaction",
    "VariableSeries",
    "align_series",
    "apply_transaction",
    "compute_metrics",
    "load_market_csv",
    "normalize_scores",
    "round_trips",
    "run_backtest",
    "simple_returns",
    "__version__",
]
