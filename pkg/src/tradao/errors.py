"""Typed errors shared by all modules.

Every error carries a machine-readable ``code`` (its class name) which the
REST layer maps onto 4xx responses. Raise the most specific class available;
never encode failure as a sentinel value.
"""
from __future__ import annotations


class TradaoError(Exception):
    """Base class for all workbench errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# -- market data -------------------------------------------------------------

class MalformedRow(TradaoError):
    """CSV row with an unparseable number or timestamp (or a bad header)."""


class NonMonotonicTime(TradaoError):
    """Duplicate timestamps in a price series."""


class OhlcViolation(TradaoError):
    """A bar whose open/high/low/close ordering is impossible."""


class EmptyFile(TradaoError):
    """A market CSV with no data rows."""


class EmptyIntersection(TradaoError):
    """Two series share no timestamps."""


class GranularityMismatch(TradaoError):
    """Attempt to align series of different granularities."""


class TooShort(TradaoError):
    """A series shorter than the operation requires."""


class NonPositiveValue(TradaoError):
    """Returns requested over a series containing values <= 0."""


# -- trading models ----------------------------------------------------------

class InvalidParams(TradaoError):
    """Model parameters violating their invariants."""


class WindowTooLarge(TradaoError):
    """Rolling window longer than the series it is applied to."""


class RankDeficient(TradaoError):
    """Regression design matrix without full column rank."""


class TooFewObservations(TradaoError):
    """Fewer observations than regression coefficients plus one."""


class ZeroSpreadVariance(TradaoError):
    """Pairs spread with zero rolling standard deviation."""


# -- backtest engine ---------------------------------------------------------

class MissingSymbol(TradaoError):
    """A symbol required by the model is absent from the market store."""


class EmptyPeriod(TradaoError):
    """A backtest period containing no trading bars."""


# -- metrics -----------------------------------------------------------------

class EmptySeries(TradaoError):
    """A metric asked to operate on an empty series."""


class ZeroVariance(TradaoError):
    """A statistic undefined for constant input."""


class NoDownside(TradaoError):
    """Sortino requested over returns with no losses."""


class NonPositiveNav(TradaoError):
    """Drawdown statistics over a NAV series with values <= 0."""


class NoTrades(TradaoError):
    """Win rate requested with no completed round trips."""


class EmptyInstanceSet(TradaoError):
    """Score normalization over zero instances."""


# -- evolution tree ----------------------------------------------------------

class UnknownParent(TradaoError):
    """Referenced parent instance does not exist."""


class SecondRoot(TradaoError):
    """Attempt to insert a second parentless instance."""


class ModelKindMismatch(TradaoError):
    """Instance params of a different model kind than its strategy."""


class UnknownInstance(TradaoError):
    """Referenced algorithm instance does not exist."""


# -- analytics ---------------------------------------------------------------

class LengthMismatch(TradaoError):
    """Paired series of unequal length."""


class EmptyInput(TradaoError):
    """Histogram over an empty value set."""


class TooFewVariables(TradaoError):
    """Correlation grid needs at least three variable series."""


class AllZeroResiduals(TradaoError):
    """Residual diagnostics over an identically-zero series."""


# -- portfolio views ---------------------------------------------------------

class InvalidPeriod(TradaoError):
    """A from/to range that is malformed or outside the record."""


class InvalidThresholds(TradaoError):
    """Liquidity thresholds with danger above warning."""


class UnknownSymbol(TradaoError):
    """Referenced instrument is not loaded."""


# -- app interface -----------------------------------------------------------

class UnknownStrategy(TradaoError):
    """Referenced strategy does not exist."""


class SchemaViolation(TradaoError):
    """A payload that does not match its documented JSON schema."""
