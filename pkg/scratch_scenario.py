"""Prototype for the engineered case-study fixture (throwaway)."""
import numpy as np

from tradao.backtest import ExecutionConfig, run_backtest
from tradao.metrics import compute_metrics, normalize_scores
from tradao.models import PairsTradingParams
from tradao.analytics import rolling_correlation, residual_summary
from tradao.views import daily_trade_summaries, market_overlay

import sys
sys.path.insert(0, "tests")
from conftest import make_series

N = 365
AUG_START, AUG_END = 212, 242      # 2019-08-01 .. 2019-08-31
SLIDE_START = 222                  # two-index decline begins 2019-08-11


def build_market(seed=20190801):
    rng = np.random.default_rng(seed)
    t = np.arange(N, dtype=float)

    # index skeleton: gentle rise, -10% slide starting mid-August, flat after
    skel = np.empty(N)
    skel[:SLIDE_START] = 25.0 * np.exp(0.0002 * t[:SLIDE_START])
    s0 = skel[SLIDE_START - 1]
    slide = np.linspace(0, 1, AUG_END - SLIDE_START + 1)
    skel[SLIDE_START : AUG_END + 1] = s0 * (1 - 0.10 * slide)
    skel[AUG_END + 1 :] = skel[AUG_END]
    # oscillation keeps the rolling hedge slope well conditioned; the 10-day
    # period divides the 31-day August window so month-over-month phase
    # comparisons stay neutral
    b_clean = skel + 1.5 * np.sin(2 * np.pi * t / 10.0)

    beta = 2.0 + 1.2 * t / (N - 1)

    rel = np.zeros(N)
    eps = np.zeros(AUG_START)
    for i in range(1, AUG_START):
        sigma = 0.05 + 0.10 * i / AUG_START
        eps[i] = 0.90 * eps[i - 1] + rng.normal(0, sigma)
    damp = np.ones(AUG_START)
    damp[190:] = np.linspace(1.0, 0.05, AUG_START - 190)
    eps *= damp
    # dislocation pulses lasting one full oscillation cycle: entries fire on
    # the jump, exits on the drop, at matching phases
    for t0, b in ((120, 2.5), (145, -2.5), (168, 2.5)):
        eps[t0 : t0 + 10] += b
    rel[:AUG_START] = eps

    # gentle first step lets z pass through the exit band before the spike
    rel[212:218] = np.array([0.3, 1.2, 2.6, 4.2, 5.2, 6.0])
    rel[218:226] = np.linspace(6, 0, 8)        # slow snapback, exits can fill
    rel[226:243] = np.linspace(0, -11.6, 17)   # crashes through fair value
    tail = np.arange(AUG_END + 1, N, dtype=float)
    rel[AUG_END + 1 :] = (
        -11.6
        - 0.02 * (tail - AUG_END)
        + 3.0 * np.sin(2 * np.pi * (tail - AUG_END) / 36.0)
        + rng.normal(0, 0.12, len(tail))
    )

    nsx = beta * b_clean + rel + rng.normal(0, 0.06, N)
    spx = b_clean + rng.normal(0, 0.06, N)
    return {
        "NSXUSD": make_series("NSXUSD", nsx.tolist()),
        "SPXUSD": make_series("SPXUSD", spx.tolist()),
    }


PARENT = PairsTradingParams("NSXUSD", "SPXUSD", lookback=60, coeff_1="estimate",
                            diff_thre=2.5, exit_thre=0.5, cooldown=20, trade_size=50)
CHILD = PairsTradingParams("NSXUSD", "SPXUSD", lookback=15, coeff_1="estimate",
                           diff_thre=1.5, exit_thre=0.4, cooldown=3, trade_size=50)
PARENT_PERIOD = ("2019-01-01", "2019-07-31")
CHILD_PERIOD = ("2019-01-01", "2019-12-31")


def corr_series(rec, window=30):
    by_name = {v.name: v for v in rec.variable_series}
    c, b = by_name["coeff_1"], by_name["diff_thre"]
    common = sorted(set(c.timestamps) & set(b.timestamps))
    cv = dict(zip(c.timestamps, c.values))
    bv = dict(zip(b.timestamps, b.values))
    rc = rolling_correlation([cv[t] for t in common], [bv[t] for t in common], window)
    return [v for v in rc if v is not None]


def main():
    market = build_market()
    config = ExecutionConfig(initial_capital=100_000.0)
    parent_rec = run_backtest(PARENT, market, PARENT_PERIOD, config, instance_id="p")
    child_rec = run_backtest(CHILD, market, CHILD_PERIOD, config, instance_id="c")

    pm, cm = compute_metrics(parent_rec), compute_metrics(child_rec)
    maps, cats = normalize_scores([pm, cm])
    print("parent trades:", len(parent_rec.transactions), " child trades:", len(child_rec.transactions))
    for name in ("yield_ann", "md", "win_rate"):
        print(f"  {name}: parent={getattr(pm, name).value} child={getattr(cm, name).value}")
    print("(a) profit strictly below:", cats[1].profitability < cats[0].profitability,
          " prediction strictly below:", cats[1].prediction < cats[0].prediction)

    days = daily_trade_summaries(child_rec, "NSXUSD", "2019-08-01", "2019-08-31")
    inv = [(d.date, d.outstanding_inventory) for d in days]
    neg_days = [d for d, v in inv if v < 0]
    pos_after = [d for d, v in inv if v > 0 and neg_days and d > neg_days[0]]
    print("(b) aug inventory sample:", inv[::3])
    print("(b) flip:", bool(neg_days and pos_after))

    ps = float(np.std(corr_series(parent_rec), ddof=1))
    cs = float(np.std(corr_series(child_rec), ddof=1))
    print(f"(c) corr std parent={ps:.4f} child={cs:.4f} ratio={cs/ps:.2f}")

    child_diag = residual_summary(child_rec.residuals)
    parent_diag = residual_summary(parent_rec.residuals)
    print(f"(d) child DW={child_diag.durbin_watson:.3f} flag={child_diag.randomness_flag}"
          f" | parent DW={parent_diag.durbin_watson:.3f} flag={parent_diag.randomness_flag}")

    overlay = market_overlay(market, ["NSXUSD", "SPXUSD"], "2019-08-01", "2019-08-31")
    print("overlay end-aug:", {k: round(v[-1][1], 1) for k, v in overlay.items()})
    print("final NAV parent:", round(parent_rec.nav_series[-1][1], 1),
          " child:", round(child_rec.nav_series[-1][1], 1))


if __name__ == "__main__":
    main()
