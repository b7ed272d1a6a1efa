"""The three demonstration trading models.

Each model turns price history into three things: trade signals, named
internal variable series (feeding the correlation grid), and a residual
series (feeding the residual diagnostics).

* moving-average crossover: long/flat (or short/flat) flips on fast/slow
  crossings; residual is close minus the slow average.
* pairs trading: rolling hedge ratio, spread z-score entries/exits with a
  cooldown; residual is the spread minus its rolling mean.
* rolling multivariate regression: OLS of target returns on factor returns
  over a sliding window; residual is each window's last fitting error.

Warm-up bars (before a window or lookback fills) emit no signals and no
variable values. All functions are pure and deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    InvalidParams,
    RankDeficient,
    TooFewObservations,
    WindowTooLarge,
    ZeroSpreadVariance,
)
from .market_data import MarketSeries, simple_returns

ESTIMATE = "estimate"


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MovingAverageParams:
    symbol: str
    window_fast: int
    window_slow: int
    trade_size: float

    kind: ClassVar[str] = "ma"

    def __post_init__(self) -> None:
        if self.window_fast < 2 or self.window_slow < 2:
            raise InvalidParams("windows must be >= 2")
        if self.window_fast >= self.window_slow:
            raise InvalidParams("window_fast must be < window_slow")
        if self.trade_size <= 0:
            raise InvalidParams("trade_size must be > 0")


@dataclass(frozen=True)
class PairsTradingParams:
    symbol_a: str
    symbol_b: str
    lookback: int
    coeff_1: "float | str"  # hedge-ratio override, or "estimate" for rolling OLS
    diff_thre: float
    exit_thre: float
    cooldown: int
    trade_size: float

    kind: ClassVar[str] = "pairs"

    def __post_init__(self) -> None:
        if self.lookback < 2:
            raise InvalidParams("lookback must be >= 2")
        if isinstance(self.coeff_1, str) and self.coeff_1 != ESTIMATE:
            raise InvalidParams(f"coeff_1 must be a number or {ESTIMATE!r}")
        if self.exit_thre < 0 or self.diff_thre <= self.exit_thre:
            raise InvalidParams("need diff_thre > exit_thre >= 0")
        if self.cooldown < 0:
            raise InvalidParams("cooldown must be >= 0")
        if self.trade_size <= 0:
            raise InvalidParams("trade_size must be > 0")

    @property
    def estimates_coeff(self) -> bool:
        return self.coeff_1 == ESTIMATE


@dataclass(frozen=True)
class LinearRegressionParams:
    target: str
    factors: tuple[str, ...]
    lookback: int
    signal_thre: float
    trade_size: float

    kind: ClassVar[str] = "regression"

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise InvalidParams("need at least one factor")
        if self.lookback < 2:
            raise InvalidParams("lookback must be >= 2")
        if self.signal_thre < 0:
            raise InvalidParams("signal_thre must be >= 0")
        if self.trade_size <= 0:
            raise InvalidParams("trade_size must be > 0")


ModelParams = Union[MovingAverageParams, PairsTradingParams, LinearRegressionParams]

# Ring segments of the evolution glyph, in fixed order per model kind.
# Instrument identifiers are strategy identity, not tunables, so they are
# not ring segments.
RING_PARAMS: dict[str, tuple[str, ...]] = {
    "ma": ("window_fast", "window_slow", "trade_size"),
    "pairs": ("lookback", "coeff_1", "diff_thre", "exit_thre", "cooldown", "trade_size"),
    "regression": ("lookback", "signal_thre", "trade_size"),
}


def symbols_of(params: ModelParams) -> list[str]:
    """All instruments a parameter set needs, primary first."""
    if isinstance(params, MovingAverageParams):
        return [params.symbol]
    if isinstance(params, PairsTradingParams):
        return [params.symbol_a, params.symbol_b]
    return [params.target, *params.factors]


def params_to_dict(params: ModelParams) -> dict:
    if isinstance(params, MovingAverageParams):
        return {
            "model": "ma",
            "symbol": params.symbol,
            "window_fast": params.window_fast,
            "window_slow": params.window_slow,
            "trade_size": params.trade_size,
        }
    if isinstance(params, PairsTradingParams):
        return {
            "model": "pairs",
            "symbol_a": params.symbol_a,
            "symbol_b": params.symbol_b,
            "lookback": params.lookback,
            "coeff_1": params.coeff_1,
            "diff_thre": params.diff_thre,
            "exit_thre": params.exit_thre,
            "cooldown": params.cooldown,
            "trade_size": params.trade_size,
        }
    return {
        "model": "regression",
        "target": params.target,
        "factors": list(params.factors),
        "lookback": params.lookback,
        "signal_thre": params.signal_thre,
        "trade_size": params.trade_size,
    }


def params_from_dict(data: dict) -> ModelParams:
    """Parse the documented JSON shape; raises InvalidParams on bad input."""
    if not isinstance(data, dict):
        raise InvalidParams("params must be an object")
    kind = data.get("model")
    try:
        if kind == "ma":
            return MovingAverageParams(
                symbol=str(data["symbol"]),
                window_fast=int(data["window_fast"]),
                window_slow=int(data["window_slow"]),
                trade_size=float(data["trade_size"]),
            )
        if kind == "pairs":
            coeff = data["coeff_1"]
            return PairsTradingParams(
                symbol_a=str(data["symbol_a"]),
                symbol_b=str(data["symbol_b"]),
                lookback=int(data["lookback"]),
                coeff_1=coeff if isinstance(coeff, str) else float(coeff),
                diff_thre=float(data["diff_thre"]),
                exit_thre=float(data["exit_thre"]),
                cooldown=int(data["cooldown"]),
                trade_size=float(data["trade_size"]),
            )
        if kind == "regression":
            return LinearRegressionParams(
                target=str(data["target"]),
                factors=tuple(str(f) for f in data["factors"]),
                lookback=int(data["lookback"]),
                signal_thre=float(data["signal_thre"]),
                trade_size=float(data["trade_size"]),
            )
    except KeyError as exc:
        raise InvalidParams(f"missing field {exc.args[0]!r} for model {kind!r}") from exc
    except (TypeError, ValueError) as exc:
        raise InvalidParams(f"bad field value: {exc}") from exc
    raise InvalidParams(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# Output containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Signal:
    """One trade instruction; timestamps always exist in the driving series."""

    ts: int
    symbol: str
    direction: str  # buy | sell | close
    size: float


@dataclass
class VariableSeries:
    """A named, time-indexed internal model variable."""

    name: str
    timestamps: list[int]
    values: list[float]

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class ResidualSeries:
    """Model fitting errors in time order."""

    values: list[float]

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class ModelOutput:
    signals: list[Signal]
    variables: list[VariableSeries]
    residuals: ResidualSeries


# ---------------------------------------------------------------------------
# Moving average
# ---------------------------------------------------------------------------

def moving_average(values: Sequence[float], window: int) -> list[float]:
    """Trailing means; output[i] covers values[i .. i+window-1]."""
    n = len(values)
    if window < 1:
        raise InvalidParams("window must be >= 1")
    if window > n:
        raise WindowTooLarge(f"window {window} > series length {n}")
    wins = sliding_window_view(np.asarray(values, dtype=float), window)
    return [float(m) for m in wins.mean(axis=1)]


def ma_signals(
    series: MarketSeries, params: MovingAverageParams
) -> tuple[list[Signal], list[VariableSeries]]:
    """Crossover signals plus the two average series.

    A signal fires whenever the sign of (fast - slow) changes to a new
    nonzero value, the first nonzero sign included; equality bars are
    skipped. Signals therefore alternate buy/sell, keeping at most one
    open position direction at a time.
    """
    closes = series.closes()
    ts = series.timestamps()
    fast = moving_average(closes, params.window_fast)
    slow = moving_average(closes, params.window_slow)
    start = params.window_slow - 1  # first bar where the slow window is full
    fast = fast[start - (params.window_fast - 1):]
    stamps = ts[start:]

    signals: list[Signal] = []
    state = 0  # last nonzero sign of fast - slow
    for i, (f, s) in enumerate(zip(fast, slow)):
        sign = 0 if f == s else (1 if f > s else -1)
        if sign != 0 and sign != state:
            direction = "buy" if sign > 0 else "sell"
            signals.append(Signal(stamps[i], series.symbol, direction, params.trade_size))
            state = sign
    variables = [
        VariableSeries("ma_fast", list(stamps), fast),
        VariableSeries("ma_slow", list(stamps), slow),
    ]
    return signals, variables


def run_ma(series: MarketSeries, params: MovingAverageParams) -> ModelOutput:
    signals, variables = ma_signals(series, params)
    slow = variables[1]
    closes_by_ts = {p.ts: p.close for p in series.points}
    residuals = [closes_by_ts[t] - v for t, v in zip(slow.timestamps, slow.values)]
    return ModelOutput(signals, variables, ResidualSeries(residuals))


# ---------------------------------------------------------------------------
# Ordinary least squares
# ---------------------------------------------------------------------------

def ols_fit(y: Sequence[float], X: Sequence[Sequence[float]]) -> tuple[np.ndarray, ResidualSeries]:
    """OLS with intercept. Returns (coefficients, residuals).

    Coefficients are ordered [intercept, b_1, ..., b_k]. With the intercept
    present, residuals sum to zero up to round-off.
    """
    yv = np.asarray(y, dtype=float)
    n = yv.shape[0]
    k = len(X)
    for col in X:
        if len(col) != n:
            raise TooFewObservations(f"regressor length {len(col)} != {n}")
    if n <= k + 1:
        raise TooFewObservations(f"n={n} too small for {k} regressors plus intercept")
    design = np.column_stack([np.ones(n)] + [np.asarray(col, dtype=float) for col in X])
    if np.linalg.matrix_rank(design) < k + 1:
        raise RankDeficient("design matrix not full rank")
    coef, *_ = np.linalg.lstsq(design, yv, rcond=None)
    residuals = yv - design @ coef
    return coef, ResidualSeries([float(e) for e in residuals])


# ---------------------------------------------------------------------------
# Pairs trading
# ---------------------------------------------------------------------------

def _rolling_slope(a: np.ndarray, b: np.ndarray, window: int) -> np.ndarray:
    """Per-window OLS slope of a on b (intercept included)."""
    aw = sliding_window_view(a, window)
    bw = sliding_window_view(b, window)
    am = aw.mean(axis=1, keepdims=True)
    bm = bw.mean(axis=1, keepdims=True)
    var_b = ((bw - bm) ** 2).sum(axis=1)
    if np.any(var_b == 0):
        raise RankDeficient("hedge ratio undefined: constant prices in a window")
    cov = ((bw - bm) * (aw - am)).sum(axis=1)
    return cov / var_b


@dataclass
class PairsState:
    """Everything pairs_signals needs plus the exposed variable series.

    Variables: coeff_1 (hedge ratio), spread, spread_z, and diff_thre (the
    entry boundary expressed in spread units, rolling mean + diff_thre *
    rolling std) so the boundary's relation to the hedge ratio can be
    inspected over time.
    """

    symbol_a: str
    symbol_b: str
    timestamps: list[int]       # z-score domain
    z: list[float]
    coeff_at_z: list[float]     # hedge ratio aligned with z
    variables: list[VariableSeries]
    residuals: ResidualSeries


def pairs_state(a: MarketSeries, b: MarketSeries, params: PairsTradingParams) -> PairsState:
    """Hedge ratio, spread, and z-score series over two aligned series."""
    if a.timestamps() != b.timestamps():
        raise InvalidParams("pairs_state requires aligned series")
    ts = a.timestamps()
    pa = np.asarray(a.closes(), dtype=float)
    pb = np.asarray(b.closes(), dtype=float)
    L = params.lookback
    n = len(ts)

    if params.estimates_coeff:
        if n >= L:
            coeff = _rolling_slope(pa, pb, L)
        else:
            coeff = np.empty(0)
        c_start = L - 1
    else:
        coeff = np.full(n, float(params.coeff_1))
        c_start = 0

    spread = pa[c_start:] - coeff * pb[c_start:]
    spread_ts = ts[c_start:]

    variables = [
        VariableSeries("coeff_1", list(spread_ts), [float(c) for c in coeff]),
        VariableSeries("spread", list(spread_ts), [float(s) for s in spread]),
    ]

    if len(spread) >= L:
        wins = sliding_window_view(spread, L)
        means = wins.mean(axis=1)
        stds = wins.std(axis=1, ddof=1)
        if np.any(stds == 0):
            bad = int(np.argmax(stds == 0))
            raise ZeroSpreadVariance(f"zero rolling spread std at bar {c_start + L - 1 + bad}")
        tail = spread[L - 1:]
        z = (tail - means) / stds
        boundary = means + params.diff_thre * stds
        resid = tail - means
        z_ts = spread_ts[L - 1:]
        coeff_at_z = coeff[L - 1:]
    else:
        z = np.empty(0)
        boundary = np.empty(0)
        resid = np.empty(0)
        z_ts = []
        coeff_at_z = np.empty(0)

    variables.append(VariableSeries("spread_z", list(z_ts), [float(v) for v in z]))
    variables.append(VariableSeries("diff_thre", list(z_ts), [float(v) for v in boundary]))

    return PairsState(
        symbol_a=a.symbol,
        symbol_b=b.symbol,
        timestamps=list(z_ts),
        z=[float(v) for v in z],
        coeff_at_z=[float(c) for c in coeff_at_z],
        variables=variables,
        residuals=ResidualSeries([float(e) for e in resid]),
    )


def pairs_signals(state: PairsState, params: PairsTradingParams) -> list[Signal]:
    """Threshold entries/exits on the spread z-score.

    Short-spread (z above diff_thre): sell a, buy coeff_1*size of b; the
    mirror below -diff_thre. Both legs exit when |z| drops under exit_thre.
    New entries are suppressed within `cooldown` bars of the last entry,
    and while the hedge ratio is non-positive (no meaningful hedge).
    """
    signals: list[Signal] = []
    position = 0  # 0 flat, +1 long-spread, -1 short-spread
    open_a = open_b = 0.0
    last_entry: int | None = None

    for i, z in enumerate(state.z):
        ts = state.timestamps[i]
        if position != 0:
            if abs(z) < params.exit_thre:
                signals.append(Signal(ts, state.symbol_a, "close", open_a))
                signals.append(Signal(ts, state.symbol_b, "close", open_b))
                position = 0
        else:
            if abs(z) <= params.diff_thre:
                continue
            if last_entry is not None and i - last_entry < params.cooldown:
                continue
            coeff = state.coeff_at_z[i]
            if coeff <= 0:
                continue
            open_a = params.trade_size
            open_b = coeff * params.trade_size
            if z > params.diff_thre:
                signals.append(Signal(ts, state.symbol_a, "sell", open_a))
                signals.append(Signal(ts, state.symbol_b, "buy", open_b))
                position = -1
            else:
                signals.append(Signal(ts, state.symbol_a, "buy", open_a))
                signals.append(Signal(ts, state.symbol_b, "sell", open_b))
                position = 1
            last_entry = i
    return signals


def run_pairs(a: MarketSeries, b: MarketSeries, params: PairsTradingParams) -> ModelOutput:
    state = pairs_state(a, b, params)
    return ModelOutput(pairs_signals(state, params), state.variables, state.residuals)


# ---------------------------------------------------------------------------
# Rolling regression
# ---------------------------------------------------------------------------

def regression_signals(
    target: MarketSeries,
    factors: Sequence[MarketSeries],
    params: LinearRegressionParams,
) -> tuple[list[Signal], list[VariableSeries], ResidualSeries]:
    """Rolling OLS of target returns on factor returns.

    At each step the window [t-L+1 .. t] of returns is fitted; the predicted
    next return plugs the latest factor returns into the fitted line. The
    position follows the prediction: +size above signal_thre, -size below
    -signal_thre, flat in between; emitted signals are the position changes.
    Residuals are each window's fitting error at its last observation.
    """
    all_series = [target, *factors]
    stamps = target.timestamps()
    for s in all_series[1:]:
        if s.timestamps() != stamps:
            raise InvalidParams("regression_signals requires aligned series")

    ry = simple_returns(target.closes())
    rx = [simple_returns(f.closes()) for f in factors]
    ret_ts = stamps[1:]
    L = params.lookback
    m = len(ry)

    names = ["intercept"] + [f"beta_{f.symbol}" for f in factors]
    coef_ts: list[int] = []
    coef_values: list[list[float]] = [[] for _ in names]
    residuals: list[float] = []
    signals: list[Signal] = []
    current = 0.0

    for t in range(L - 1, m):
        lo = t - L + 1
        coef, resid = ols_fit(ry[lo : t + 1], [col[lo : t + 1] for col in rx])
        coef_ts.append(ret_ts[t])
        for j, c in enumerate(coef):
            coef_values[j].append(float(c))
        residuals.append(resid.values[-1])

        predicted = float(coef[0]) + sum(float(coef[j + 1]) * rx[j][t] for j in range(len(rx)))
        if predicted > params.signal_thre:
            desired = params.trade_size
        elif predicted < -params.signal_thre:
            desired = -params.trade_size
        else:
            desired = 0.0
        delta = desired - current
        if delta > 0:
            signals.append(Signal(ret_ts[t], target.symbol, "buy", delta))
        elif delta < 0:
            signals.append(Signal(ret_ts[t], target.symbol, "sell", -delta))
        current = desired

    variables = [
        VariableSeries(name, list(coef_ts), vals) for name, vals in zip(names, coef_values)
    ]
    return signals, variables, ResidualSeries(residuals)


def run_regression(
    target: MarketSeries, factors: Sequence[MarketSeries], params: LinearRegressionParams
) -> ModelOutput:
    signals, variables, residuals = regression_signals(target, factors, params)
    return ModelOutput(signals, variables, residuals)


def run_model(params: ModelParams, series_by_symbol: dict[str, MarketSeries]) -> ModelOutput:
    """Dispatch a parameter set over pre-aligned series."""
    if isinstance(params, MovingAverageParams):
        return run_ma(series_by_symbol[params.symbol], params)
    if isinstance(params, PairsTradingParams):
        return run_pairs(series_by_symbol[params.symbol_a], series_by_symbol[params.symbol_b], params)
    return run_regression(
        series_by_symbol[params.target],
        [series_by_symbol[f] for f in params.factors],
        params,
    )
