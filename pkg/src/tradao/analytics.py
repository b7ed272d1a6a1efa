"""Parameter-correlation and residual diagnostics.

Pairwise Pearson correlation, rolling correlation trends (values always in
[-1, 1], degenerate windows emitted as gaps), univariate histograms, and
residual randomness diagnostics (Durbin-Watson plus a runs test).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    AllZeroResiduals,
    EmptyInput,
    LengthMismatch,
    TooFewVariables,
    TooShort,
    WindowTooLarge,
    ZeroVariance,
)
from .market_data import iso_instant
from .models import ResidualSeries, VariableSeries

DEFAULT_ROLLING_WINDOW = 30
DEFAULT_BINS = 20

# Durbin-Watson rule-of-thumb flags, symmetric about the null value 2.
DW_POSITIVE_AUTOCORR_BELOW = 1.0
DW_NEGATIVE_AUTOCORR_ABOVE = 3.0


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation, clamped into [-1, 1]."""
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.size != yv.size:
        raise LengthMismatch(f"{xv.size} vs {yv.size}")
    if xv.size < 2:
        raise TooShort(f"need >= 2 points, got {xv.size}")
    dx = xv - xv.mean()
    dy = yv - yv.mean()
    sx = float(np.sqrt((dx**2).sum()))
    sy = float(np.sqrt((dy**2).sum()))
    if sx == 0 or sy == 0:
        raise ZeroVariance("constant input")
    r = float((dx * dy).sum()) / (sx * sy)
    return max(-1.0, min(1.0, r))


def rolling_correlation(
    x: Sequence[float], y: Sequence[float], window: int
) -> list[float | None]:
    """Pearson over each trailing window; zero-variance windows become None."""
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.size != yv.size:
        raise LengthMismatch(f"{xv.size} vs {yv.size}")
    if window < 2:
        raise TooShort("window must be >= 2")
    if window > xv.size:
        raise WindowTooLarge(f"window {window} > length {xv.size}")
    xw = sliding_window_view(xv, window)
    yw = sliding_window_view(yv, window)
    dx = xw - xw.mean(axis=1, keepdims=True)
    dy = yw - yw.mean(axis=1, keepdims=True)
    sx = np.sqrt((dx**2).sum(axis=1))
    sy = np.sqrt((dy**2).sum(axis=1))
    out: list[float | None] = []
    num = (dx * dy).sum(axis=1)
    for i in range(xw.shape[0]):
        if sx[i] == 0 or sy[i] == 0:
            out.append(None)
        else:
            out.append(max(-1.0, min(1.0, float(num[i]) / (float(sx[i]) * float(sy[i])))))
    return out


@dataclass
class Histogram:
    edges: list[float]
    densities: list[float]  # probability mass per bin, sums to 1

    def to_json(self) -> dict:
        return {"edges": self.edges, "densities": self.densities}


def histogram(values: Sequence[float], bins: int) -> Histogram:
    """Equal-width bins over [min, max]; a single distinct value gets one bin."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise EmptyInput("no values")
    if bins < 1:
        raise EmptyInput("bins must be >= 1")
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        return Histogram(edges=[lo, hi], densities=[1.0])
    counts, edges = np.histogram(vals, bins=bins, range=(lo, hi))
    return Histogram(
        edges=[float(e) for e in edges],
        densities=[float(c) / vals.size for c in counts],
    )


# ---------------------------------------------------------------------------
# Correlation grid
# ---------------------------------------------------------------------------

@dataclass
class CorrelationGrid:
    variables: list[str]
    scatter: list[dict]       # {x, y, self: [[x,y]..], parent?: [[x,y]..]}
    histograms: list[dict]    # {variable, edges, densities}
    rolling: list[dict]       # {x, y, window, points: [[iso_ts, value|None]..]}

    def to_json(self) -> dict:
        return {
            "variables": self.variables,
            "scatter": self.scatter,
            "histograms": self.histograms,
            "rolling": self.rolling,
        }


def _spread_variance(vs: VariableSeries) -> float:
    """Sample variance after min-max rescaling, so scales are comparable."""
    vals = np.asarray(vs.values, dtype=float)
    if vals.size < 2:
        return 0.0
    lo, hi = float(vals.min()), float(vals.max())
    if lo == hi:
        return 0.0
    scaled = (vals - lo) / (hi - lo)
    return float(np.var(scaled, ddof=1))


def select_grid_variables(variables: Sequence[VariableSeries], k: int = 3) -> list[VariableSeries]:
    """Top-k variable series by rescaled variance, ties broken by name."""
    if len(variables) < k:
        raise TooFewVariables(f"need >= {k} variable series, got {len(variables)}")
    ranked = sorted(variables, key=lambda vs: (-_spread_variance(vs), vs.name))
    return ranked[:k]


def _align_pair(a: VariableSeries, b: VariableSeries) -> tuple[list[int], list[float], list[float]]:
    common = set(a.timestamps) & set(b.timestamps)
    idx_b = {t: v for t, v in zip(b.timestamps, b.values)}
    ts = [t for t in a.timestamps if t in common]
    return ts, [v for t, v in zip(a.timestamps, a.values) if t in common], [idx_b[t] for t in ts]


def correlation_grid(
    variables: Sequence[VariableSeries],
    parent_variables: Sequence[VariableSeries] | None = None,
    window: int = DEFAULT_ROLLING_WINDOW,
    bins: int = DEFAULT_BINS,
) -> CorrelationGrid:
    """The 3x3 grid: scatter pairs, per-variable histograms, rolling trends."""
    chosen = select_grid_variables(variables)
    names = [vs.name for vs in chosen]
    parent_by_name = {vs.name: vs for vs in parent_variables or []}

    scatter: list[dict] = []
    rolling: list[dict] = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        ts, xs, ys = _align_pair(chosen[i], chosen[j])
        cell: dict = {"x": names[i], "y": names[j], "self": [[x, y] for x, y in zip(xs, ys)]}
        if names[i] in parent_by_name and names[j] in parent_by_name:
            _, pxs, pys = _align_pair(parent_by_name[names[i]], parent_by_name[names[j]])
            cell["parent"] = [[x, y] for x, y in zip(pxs, pys)]
        scatter.append(cell)

        corr = rolling_correlation(xs, ys, window)
        points = [[iso_instant(t), v] for t, v in zip(ts[window - 1 :], corr)]
        rolling.append({"x": names[i], "y": names[j], "window": window, "points": points})

    histograms = [
        {"variable": vs.name, **histogram(vs.values, bins).to_json()} for vs in chosen
    ]
    return CorrelationGrid(variables=names, scatter=scatter, histograms=histograms, rolling=rolling)


# ---------------------------------------------------------------------------
# Residual diagnostics
# ---------------------------------------------------------------------------

@dataclass
class ResidualSummary:
    scatter: list[list[float]]  # (ordinal index, residual), input order preserved
    histogram: Histogram
    durbin_watson: float
    runs_z: float
    randomness_flag: str  # random | positive_autocorr | negative_autocorr

    def to_json(self) -> dict:
        return {
            "scatter": self.scatter,
            "histogram": self.histogram.to_json(),
            "diagnostics": {
                "durbin_watson": self.durbin_watson,
                "runs_z": self.runs_z,
                "randomness_flag": self.randomness_flag,
            },
        }


def durbin_watson(residuals: Sequence[float]) -> float:
    """Sum of squared successive differences over the sum of squares."""
    e = np.asarray(residuals, dtype=float)
    if e.size < 2:
        raise TooShort("need >= 2 residuals")
    denom = float((e**2).sum())
    if denom == 0:
        raise AllZeroResiduals("all residuals zero")
    return float((np.diff(e) ** 2).sum()) / denom


def runs_z(residuals: Sequence[float]) -> float:
    """Standardized runs-test statistic on residual signs about zero.

    Zeros are dropped. Degenerate sign sequences (all one side) score 0.
    """
    signs = [1 if e > 0 else -1 for e in residuals if e != 0]
    n1 = sum(1 for s in signs if s > 0)
    n2 = len(signs) - n1
    if n1 == 0 or n2 == 0:
        return 0.0
    runs = 1 + sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    n = n1 + n2
    mean = 2.0 * n1 * n2 / n + 1.0
    var = 2.0 * n1 * n2 * (2.0 * n1 * n2 - n) / (n**2 * (n - 1))
    if var <= 0:
        return 0.0
    return (runs - mean) / math.sqrt(var)


def residual_summary(residuals: ResidualSeries, bins: int = DEFAULT_BINS) -> ResidualSummary:
    """Scatter, distribution, and randomness diagnostics for a residual series."""
    values = list(residuals.values)
    if len(values) < 8:
        raise TooShort(f"need >= 8 residuals for diagnostics, got {len(values)}")
    dw = durbin_watson(values)
    if dw < DW_POSITIVE_AUTOCORR_BELOW:
        flag = "positive_autocorr"
    elif dw > DW_NEGATIVE_AUTOCORR_ABOVE:
        flag = "negative_autocorr"
    else:
        flag = "random"
    return ResidualSummary(
        scatter=[[float(i), float(e)] for i, e in enumerate(values)],
        histogram=histogram(values, bins),
        durbin_watson=dw,
        runs_z=runs_z(values),
        randomness_flag=flag,
    )
