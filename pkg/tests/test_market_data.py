"""Market-data loading, alignment, and returns."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tradao.errors import (
    EmptyFile,
    EmptyIntersection,
    GranularityMismatch,
    MalformedRow,
    NonMonotonicTime,
    NonPositiveValue,
    OhlcViolation,
    TooShort,
)
from tradao.market_data import (
    align_series,
    load_market_csv,
    parse_market_csv,
    simple_returns,
    ts_date,
)

from conftest import csv_lines, make_series


class TestLoadCsv:
    def test_three_valid_rows_sorted_passthrough(self, tmp_path):
        text = csv_lines(
            [
                "2019-08-01T00:00:00Z,10,12,9,11,100",
                "2019-08-02T00:00:00Z,11,13,10,12,150",
                "2019-08-03T00:00:00Z,12,12.5,11,12,120",
            ]
        )
        path = tmp_path / "m.csv"
        path.write_text(text)
        series = load_market_csv(str(path), "NSXUSD")
        assert len(series.points) == 3
        assert series.closes() == [11.0, 12.0, 12.0]
        assert series.timestamps() == sorted(series.timestamps())

    def test_low_above_high_names_row(self):
        text = csv_lines(
            [
                "2019-08-01T00:00:00Z,10,12,9,11,100",
                "2019-08-02T00:00:00Z,11,10,12,11,100",
            ]
        )
        with pytest.raises(OhlcViolation, match="row 3"):
            parse_market_csv(text, "X")

    def test_shuffled_timestamps_sorted(self):
        rows = [
            "2019-08-03T00:00:00Z,12,12,12,12,1",
            "2019-08-01T00:00:00Z,10,10,10,10,1",
            "2019-08-02T00:00:00Z,11,11,11,11,1",
        ]
        series = parse_market_csv(csv_lines(rows), "X")
        # oracle: python sort over the parsed dates
        assert [ts_date(t) for t in series.timestamps()] == sorted(
            ["2019-08-03", "2019-08-01", "2019-08-02"]
        )

    def test_duplicate_timestamp_rejected(self):
        rows = [
            "2019-08-01T00:00:00Z,10,10,10,10,1",
            "2019-08-01T00:00:00Z,11,11,11,11,1",
        ]
        with pytest.raises(NonMonotonicTime):
            parse_market_csv(csv_lines(rows), "X")

    def test_empty_file(self):
        with pytest.raises(EmptyFile):
            parse_market_csv("", "X")
        with pytest.raises(EmptyFile):
            parse_market_csv("timestamp,open,high,low,close,volume\n", "X")

    def test_bad_header(self):
        with pytest.raises(MalformedRow):
            parse_market_csv("time,open,high,low,close,volume\n2019-08-01T00:00:00Z,1,1,1,1,1\n", "X")

    def test_bad_number_and_timestamp(self):
        with pytest.raises(MalformedRow):
            parse_market_csv(csv_lines(["2019-08-01T00:00:00Z,1,1,1,oops,1"]), "X")
        with pytest.raises(MalformedRow):
            parse_market_csv(csv_lines(["yesterday,1,1,1,1,1"]), "X")

    def test_non_positive_price_rejected(self):
        with pytest.raises(MalformedRow):
            parse_market_csv(csv_lines(["2019-08-01T00:00:00Z,0,1,0,1,1"]), "X")

    @given(
        closes=st.lists(st.floats(min_value=0.1, max_value=1e5, allow_nan=False), min_size=1, max_size=40)
    )
    @settings(max_examples=50, deadline=None)
    def test_ohlc_invariants_hold_on_fuzzed_csv(self, closes):
        rng = np.random.default_rng(7)
        rows = []
        for i, c in enumerate(closes):
            spread = abs(rng.normal(0, 0.01 * c)) + 1e-9
            lo, hi = c - spread, c + spread
            o = min(max(c + rng.normal(0, spread / 2), lo), hi)
            rows.append(f"2019-01-{1 + i:02d}T00:00:00Z,{o},{hi},{max(lo, 1e-12)},{c},{i}")
        if len(rows) > 28:
            rows = rows[:28]  # stay inside one month of valid dates
        series = parse_market_csv(csv_lines(rows), "F")
        assert all(p.ohlc_ok() for p in series.points)


class TestAlign:
    def test_identity_when_equal(self):
        a = make_series("A", [1, 2, 3])
        b = make_series("B", [4, 5, 6])
        a2, b2 = align_series(a, b)
        assert a2.points == a.points and b2.points == b.points

    def test_disjoint_is_error(self):
        a = make_series("A", [1, 2], start="2019-01-01")
        b = make_series("B", [1, 2], start="2019-03-01")
        with pytest.raises(EmptyIntersection):
            align_series(a, b)

    def test_intersection_oracle(self):
        a = make_series("A", [1, 2, 3], start="2019-01-01")  # days 1,2,3
        b = make_series("B", [9, 8, 7], start="2019-01-02")  # days 2,3,4
        a2, b2 = align_series(a, b)
        expected = sorted(set(a.timestamps()) & set(b.timestamps()))
        assert a2.timestamps() == expected
        assert b2.timestamps() == expected
        assert a2.closes() == [2.0, 3.0]
        assert b2.closes() == [9.0, 8.0]

    def test_granularity_mismatch(self):
        a = make_series("A", [1, 2])
        b = make_series("B", [1, 2], granularity="hourly")
        with pytest.raises(GranularityMismatch):
            align_series(a, b)

    def test_idempotent(self):
        a = make_series("A", [1, 2, 3], start="2019-01-01")
        b = make_series("B", [9, 8, 7], start="2019-01-02")
        a2, b2 = align_series(a, b)
        a3, b3 = align_series(a2, b2)
        assert a3.points == a2.points and b3.points == b2.points


class TestSimpleReturns:
    def test_constant_series(self):
        assert simple_returns([100, 100, 100]) == [0.0, 0.0]

    def test_single_step(self):
        assert simple_returns([100, 110]) == pytest.approx([0.10])

    def test_matches_division_oracle(self, rng):
        values = (100 * np.exp(np.cumsum(rng.normal(0, 0.02, 50)))).tolist()
        got = simple_returns(values)
        oracle = [values[i] / values[i - 1] - 1 for i in range(1, len(values))]
        assert got == pytest.approx(oracle, abs=1e-15)

    def test_too_short_and_non_positive(self):
        with pytest.raises(TooShort):
            simple_returns([1.0])
        with pytest.raises(NonPositiveValue):
            simple_returns([1.0, -1.0, 2.0])

    @given(
        scale=st.floats(min_value=1e-3, max_value=1e3),
        values=st.lists(st.floats(min_value=0.5, max_value=2.0), min_size=2, max_size=30),
    )
    @settings(max_examples=60, deadline=None)
    def test_scale_invariance(self, scale, values):
        base = simple_returns(values)
        scaled = simple_returns([scale * v for v in values])
        assert scaled == pytest.approx(base, rel=1e-9, abs=1e-12)

    def test_accepts_market_series(self):
        s = make_series("A", [100, 110, 121])
        assert simple_returns(s) == pytest.approx([0.1, 0.1])
