"""Trading models: averages, crossovers, OLS, pairs state machine, regression."""
from __future__ import annotations

import numpy as np
import pytest

from tradao.errors import (
    InvalidParams,
    RankDeficient,
    TooFewObservations,
    WindowTooLarge,
    ZeroSpreadVariance,
)
from tradao.market_data import align_series
from tradao.models import (
    LinearRegressionParams,
    MovingAverageParams,
    PairsTradingParams,
    ma_signals,
    moving_average,
    ols_fit,
    pairs_signals,
    pairs_state,
    regression_signals,
    run_model,
)

from conftest import make_series


class TestParams:
    def test_ma_invariants(self):
        with pytest.raises(InvalidParams):
            MovingAverageParams("A", window_fast=5, window_slow=5, trade_size=1)
        with pytest.raises(InvalidParams):
            MovingAverageParams("A", window_fast=1, window_slow=5, trade_size=1)
        with pytest.raises(InvalidParams):
            MovingAverageParams("A", window_fast=2, window_slow=5, trade_size=0)

    def test_pairs_invariants(self):
        with pytest.raises(InvalidParams):
            PairsTradingParams("A", "B", lookback=10, coeff_1="estimate",
                               diff_thre=0.5, exit_thre=0.5, cooldown=0, trade_size=1)
        with pytest.raises(InvalidParams):
            PairsTradingParams("A", "B", lookback=10, coeff_1="guess",
                               diff_thre=2.0, exit_thre=0.5, cooldown=0, trade_size=1)
        with pytest.raises(InvalidParams):
            PairsTradingParams("A", "B", lookback=10, coeff_1="estimate",
                               diff_thre=2.0, exit_thre=0.5, cooldown=-1, trade_size=1)

    def test_regression_invariants(self):
        with pytest.raises(InvalidParams):
            LinearRegressionParams("Y", factors=(), lookback=10, signal_thre=0.01, trade_size=1)


class TestMovingAverage:
    def test_window_two(self):
        assert moving_average([1, 2, 3], 2) == pytest.approx([1.5, 2.5])

    def test_window_one_identity(self):
        assert moving_average([3.0, 1.0, 4.0], 1) == pytest.approx([3.0, 1.0, 4.0])

    def test_matches_naive_oracle(self, rng):
        values = rng.normal(100, 5, 100).tolist()
        window = 20
        got = moving_average(values, window)
        oracle = [sum(values[i : i + window]) / window for i in range(len(values) - window + 1)]
        assert got == pytest.approx(oracle, rel=1e-12)

    def test_window_too_large(self):
        with pytest.raises(WindowTooLarge):
            moving_average([1, 2], 3)


class TestMaSignals:
    PARAMS = MovingAverageParams("A", window_fast=2, window_slow=4, trade_size=5)

    @staticmethod
    def brute_force_crossings(closes, fast_w, slow_w):
        """Oracle: nonzero sign changes of (fast - slow), first one included."""
        events = []
        state = 0
        for i in range(slow_w - 1, len(closes)):
            fast = sum(closes[i - fast_w + 1 : i + 1]) / fast_w
            slow = sum(closes[i - slow_w + 1 : i + 1]) / slow_w
            sign = 0 if fast == slow else (1 if fast > slow else -1)
            if sign != 0 and sign != state:
                events.append((i, "buy" if sign > 0 else "sell"))
                state = sign
        return events

    def test_monotone_series_at_most_one_buy(self):
        closes = [float(100 + i) for i in range(30)]
        series = make_series("A", closes)
        signals, _ = ma_signals(series, self.PARAMS)
        assert sum(1 for s in signals if s.direction == "sell") == 0
        assert sum(1 for s in signals if s.direction == "buy") <= 1
        ts0 = series.points[0].ts
        assert [((s.ts - ts0) // 86400, s.direction) for s in signals] == self.brute_force_crossings(
            closes, 2, 4
        )

    def test_constant_closes_no_signals(self):
        series = make_series("A", [50.0] * 20)
        signals, variables = ma_signals(series, self.PARAMS)
        assert signals == []
        assert variables[0].values == variables[1].values  # fast == slow throughout

    def test_v_shape_one_sell_then_one_buy(self):
        closes = [104.0, 103.0, 100.0, 96.0, 92.0, 88.0, 86.0, 88.0, 92.0, 97.0, 103.0, 110.0]
        series = make_series("A", closes)
        signals, _ = ma_signals(series, self.PARAMS)
        assert [s.direction for s in signals] == ["sell", "buy"]
        # the buy happens after the trough (index 6)
        ts0 = series.points[0].ts
        buy_bar = (signals[1].ts - ts0) // 86400
        assert buy_bar > 6
        assert [((s.ts - ts0) // 86400, s.direction) for s in signals] == self.brute_force_crossings(
            closes, 2, 4
        )

    def test_signal_timestamps_exist_and_sizes_positive(self, rng):
        closes = (100 * np.exp(np.cumsum(rng.normal(0, 0.03, 120)))).tolist()
        series = make_series("A", closes)
        signals, _ = ma_signals(series, self.PARAMS)
        stamps = set(series.timestamps())
        assert all(s.ts in stamps and s.size > 0 for s in signals)

    def test_variable_series_cover_post_warmup_bars(self):
        series = make_series("A", [float(i + 10) for i in range(10)])
        _, variables = ma_signals(series, self.PARAMS)
        assert [v.name for v in variables] == ["ma_fast", "ma_slow"]
        assert len(variables[0]) == len(variables[1]) == 10 - 4 + 1


class TestOlsFit:
    def test_exact_line(self):
        x = [1.0, 2.0, 3.0, 4.0]
        y = [2 * v for v in x]
        coef, resid = ols_fit(y, [x])
        assert coef == pytest.approx([0.0, 2.0], abs=1e-10)
        assert resid.values == pytest.approx([0.0] * 4, abs=1e-10)

    def test_constant_target(self):
        coef, _ = ols_fit([5.0, 5.0, 5.0, 5.0], [[1.0, 2.0, 3.0, 4.0]])
        assert coef == pytest.approx([5.0, 0.0], abs=1e-10)

    def test_matches_normal_equations_oracle(self, rng):
        n = 200
        x1 = rng.normal(0, 1, n)
        x2 = rng.normal(5, 2, n)
        y = 1.5 + 2.0 * x1 - 0.7 * x2 + rng.normal(0, 0.3, n)
        coef, resid = ols_fit(y.tolist(), [x1.tolist(), x2.tolist()])
        X = np.column_stack([np.ones(n), x1, x2])
        oracle = np.linalg.solve(X.T @ X, X.T @ y)
        assert coef == pytest.approx(oracle, rel=1e-8)
        assert abs(sum(resid.values)) < 1e-9
        for col in (x1, x2):
            assert abs(float(np.dot(resid.values, col))) < 1e-8

    def test_rank_deficient(self):
        x = [1.0, 2.0, 3.0, 4.0, 5.0]
        with pytest.raises(RankDeficient):
            ols_fit([1.0, 2.0, 3.0, 4.0, 5.0], [x, [2 * v for v in x]])

    def test_too_few_observations(self):
        with pytest.raises(TooFewObservations):
            ols_fit([1.0, 2.0], [[1.0, 2.0]])


def pairs_params(**kw) -> PairsTradingParams:
    defaults = dict(
        symbol_a="A",
        symbol_b="B",
        lookback=5,
        coeff_1="estimate",
        diff_thre=2.0,
        exit_thre=0.5,
        cooldown=0,
        trade_size=10,
    )
    defaults.update(kw)
    return PairsTradingParams(**defaults)


class TestPairsState:
    def test_exact_proportionality_zero_variance(self, rng):
        b = make_series("B", (50 + rng.normal(0, 2, 30)).tolist())
        a = make_series("A", [2 * c for c in b.closes()])
        with pytest.raises(ZeroSpreadVariance):
            pairs_state(a, b, pairs_params())

    def test_fixed_coeff_spread_forced(self):
        a = make_series("A", [10.0, 11.0])
        b = make_series("B", [5.0, 5.5])
        state = pairs_state(a, b, pairs_params(coeff_1=2.0))
        spread = next(v for v in state.variables if v.name == "spread")
        assert spread.values == pytest.approx([0.0, 0.0])
        assert state.z == []  # warm-up never completes on 2 bars

    def test_zscore_matches_windowed_oracle(self, rng):
        n, L = 120, 30
        b_vals = 50 + np.cumsum(rng.normal(0, 0.5, n))
        b_vals = np.abs(b_vals) + 10
        a_vals = 2.0 * b_vals + rng.normal(0, 1.0, n)
        a = make_series("A", a_vals.tolist())
        b = make_series("B", b_vals.tolist())
        state = pairs_state(a, b, pairs_params(lookback=L))

        # oracle: per-window slope, spread, mean, std computed independently
        coeff_oracle = []
        for t in range(L - 1, n):
            w = slice(t - L + 1, t + 1)
            slope = np.polyfit(b_vals[w], a_vals[w], 1)[0]
            coeff_oracle.append(slope)
        spread_oracle = [a_vals[L - 1 + i] - c * b_vals[L - 1 + i] for i, c in enumerate(coeff_oracle)]
        z_oracle = []
        for i in range(L - 1, len(spread_oracle)):
            w = spread_oracle[i - L + 1 : i + 1]
            mu = float(np.mean(w))
            sd = float(np.std(w, ddof=1))
            z_oracle.append((spread_oracle[i] - mu) / sd)
        coeff = next(v for v in state.variables if v.name == "coeff_1")
        assert coeff.values == pytest.approx(coeff_oracle, rel=1e-9)
        assert state.z == pytest.approx(z_oracle, rel=1e-9)

        # rolling mean of z approx 0, rolling std approx 1 by construction
        assert abs(np.mean(state.z)) < 1.0
        assert 0.2 < np.std(state.z) < 3.0

    def test_exposes_threshold_boundary_series(self, rng):
        b = make_series("B", (50 + np.cumsum(rng.normal(0, 0.5, 60))).tolist())
        a = make_series("A", (2 * np.asarray(b.closes()) + rng.normal(0, 1, 60)).tolist())
        state = pairs_state(a, b, pairs_params(lookback=10))
        names = [v.name for v in state.variables]
        assert names == ["coeff_1", "spread", "spread_z", "diff_thre"]
        boundary = state.variables[3]
        assert len(boundary) == len(state.z)


class TestPairsSignals:
    @staticmethod
    def build_state(z_path, coeff=1.0):
        """Minimal state for signal-logic tests, bypassing price fitting."""
        from tradao.models import PairsState, ResidualSeries

        ts = [1000 + 60 * i for i in range(len(z_path))]
        return PairsState(
            symbol_a="A",
            symbol_b="B",
            timestamps=ts,
            z=list(z_path),
            coeff_at_z=[coeff] * len(z_path),
            variables=[],
            residuals=ResidualSeries([]),
        )

    def test_no_excursion_no_signals(self):
        state = self.build_state([0.5, -0.8, 1.2, -1.5, 0.3])
        assert pairs_signals(state, pairs_params()) == []

    def test_single_excursion_entry_and_exit_pairs(self):
        state = self.build_state([0.0, 2.5, 1.5, 0.4, 0.1])
        signals = pairs_signals(state, pairs_params())
        assert [(s.symbol, s.direction) for s in signals] == [
            ("A", "sell"),
            ("B", "buy"),
            ("A", "close"),
            ("B", "close"),
        ]
        assert signals[0].ts == signals[1].ts
        assert signals[2].ts == signals[3].ts

    def test_legs_sized_by_hedge_ratio_at_entry(self):
        state = self.build_state([0.0, -2.5, -0.1], coeff=1.7)
        signals = pairs_signals(state, pairs_params())
        assert signals[0].direction == "buy" and signals[0].size == 10
        assert signals[1].direction == "sell" and signals[1].size == pytest.approx(17.0)

    def test_cooldown_suppresses_second_entry(self):
        # two separate excursions, 3 bars apart; cooldown 5 blocks the second
        z = [0.0, 2.5, 0.2, 2.6, 0.2, 0.0, 0.0, 2.7, 0.1]
        with_cd = pairs_signals(self.build_state(z), pairs_params(cooldown=5))
        entries = [s for s in with_cd if s.direction in ("buy", "sell")]
        assert len(entries) == 4  # bars 1 and 7; bar 3 suppressed
        free = pairs_signals(self.build_state(z), pairs_params(cooldown=0))
        assert len([s for s in free if s.direction in ("buy", "sell")]) == 6

    def test_entry_gap_invariant(self, rng):
        z = rng.normal(0, 1.5, 200).tolist()
        params = pairs_params(cooldown=7, diff_thre=1.5)
        signals = pairs_signals(self.build_state(z), params)
        entry_ts = [s.ts for s in signals if s.direction in ("buy", "sell") and s.symbol == "A"]
        bars = [(t - 1000) // 60 for t in entry_ts]
        assert all(b2 - b1 >= 7 for b1, b2 in zip(bars, bars[1:]))

    def test_non_positive_hedge_ratio_skips_entry(self):
        state = self.build_state([0.0, 3.0, 0.0], coeff=-0.5)
        assert pairs_signals(state, pairs_params()) == []


class TestRegressionSignals:
    def regression_input(self, rng, n=120, beta=(0.0, 1.0), noise=0.0):
        x = 100 * np.exp(np.cumsum(rng.normal(0, 0.01, n)))
        rx = np.diff(x) / x[:-1]
        ry = beta[0] + beta[1] * rx + (rng.normal(0, noise, n - 1) if noise else 0.0)
        y = 100 * np.cumprod(np.concatenate([[1.0], 1 + ry]))
        return make_series("Y", y.tolist()), make_series("X", x.tolist())

    def test_zero_target_returns_no_signals(self):
        target = make_series("Y", [100.0] * 60)
        factor = make_series("X", (100 + np.sin(np.arange(60))).tolist())
        params = LinearRegressionParams("Y", ("X",), lookback=20, signal_thre=0.001, trade_size=5)
        signals, _, residuals = regression_signals(target, [factor], params)
        assert signals == []
        assert residuals.values == pytest.approx([0.0] * len(residuals.values), abs=1e-12)

    def test_exact_fit_signals_follow_factor_sign(self, rng):
        target, factor = self.regression_input(rng)
        params = LinearRegressionParams("Y", ("X",), lookback=20, signal_thre=0.005, trade_size=5)
        signals, variables, residuals = regression_signals(target, [factor], params)
        assert residuals.values == pytest.approx([0.0] * len(residuals.values), abs=1e-9)

        rx = np.diff(factor.closes()) / np.asarray(factor.closes()[:-1])
        position = 0.0
        expected = []
        for t in range(19, len(rx)):
            desired = 5.0 if rx[t] > 0.005 else (-5.0 if rx[t] < -0.005 else 0.0)
            if desired != position:
                expected.append(("buy" if desired > position else "sell", abs(desired - position)))
            position = desired
        assert [(s.direction, s.size) for s in signals] == pytest.approx(expected)

    def test_window_coefficients_match_independent_fits(self, rng):
        n, L = 100, 60
        x1 = 100 * np.exp(np.cumsum(rng.normal(0, 0.01, n)))
        x2 = 50 * np.exp(np.cumsum(rng.normal(0, 0.015, n)))
        rx1, rx2 = np.diff(x1) / x1[:-1], np.diff(x2) / x2[:-1]
        ry = 0.3 * rx1 - 0.2 * rx2 + rng.normal(0, 0.002, n - 1)
        y = 100 * np.cumprod(np.concatenate([[1.0], 1 + ry]))
        target = make_series("Y", y.tolist())
        f1, f2 = make_series("X1", x1.tolist()), make_series("X2", x2.tolist())
        params = LinearRegressionParams("Y", ("X1", "X2"), lookback=L, signal_thre=0.002, trade_size=1)
        _, variables, _ = regression_signals(target, [f1, f2], params)

        by_name = {v.name: v for v in variables}
        assert set(by_name) == {"intercept", "beta_X1", "beta_X2"}
        m = len(ry)
        for step, t in enumerate(range(L - 1, m)):
            w = slice(t - L + 1, t + 1)
            coef, _ = ols_fit(ry[w].tolist(), [rx1[w].tolist(), rx2[w].tolist()])
            assert by_name["intercept"].values[step] == pytest.approx(coef[0], rel=1e-8, abs=1e-12)
            assert by_name["beta_X1"].values[step] == pytest.approx(coef[1], rel=1e-8, abs=1e-12)
            assert by_name["beta_X2"].values[step] == pytest.approx(coef[2], rel=1e-8, abs=1e-12)


class TestDeterminism:
    def test_models_are_deterministic(self, rng):
        b = make_series("B", (50 + np.cumsum(rng.normal(0, 0.5, 150))).tolist())
        a = make_series("A", (2 * np.asarray(b.closes()) + rng.normal(0, 1.5, 150)).tolist())
        a2, b2 = align_series(a, b)
        params = pairs_params(lookback=20, diff_thre=1.2)
        first = run_model(params, {"A": a2, "B": b2})
        second = run_model(params, {"A": a2, "B": b2})
        assert first.signals == second.signals
        assert [v.values for v in first.variables] == [v.values for v in second.variables]
        assert first.residuals.values == second.residuals.values
