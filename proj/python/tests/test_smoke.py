import json
import math
from statistics import NormalDist

import numpy as np
import pytest

import mfbounds

MARKET = {"s0": 10, "sigma": [0.3, 0.4], "rho_offdiag": 0.5, "maturity": 1.5}
FAST = {"iterations": 3000, "eval_samples": 32768, "slack_samples": 4096}


def bs_call(s0, k, sigma, t):
    v = sigma * math.sqrt(t)
    d1 = (math.log(s0 / k) + 0.5 * v * v) / v
    phi = NormalDist().cdf
    return s0 * phi(d1) - k * phi(d1 - v)


def quantile_atoms(sigma, n, s0=10.0, t=1.5):
    z = [NormalDist().inv_cdf((k - 0.5) / n) for k in range(1, n + 1)]
    return np.array([s0 * math.exp(-0.5 * sigma * sigma * t + sigma * math.sqrt(t) * x) for x in z])


def test_canonical_text_round_trips():
    text = mfbounds.canonical_payoff("pos( max(x1,x2) - 6 )", 2)
    assert text == "(max(x1, x2) - 6)^+"
    assert mfbounds.canonical_payoff(text, 2) == text


def test_parse_error_carries_kind_and_exit_code():
    with pytest.raises(mfbounds.Error) as info:
        mfbounds.canonical_payoff("max(x1, ", 2)
    assert info.value.kind == "parse"
    assert info.value.exit_code == 3


def test_eval_matches_numpy():
    x = np.random.default_rng(1).uniform(5, 15, size=(50, 3))
    got = mfbounds.eval_payoff("(avg(x1, x2, x3) - 10)^+", x)
    np.testing.assert_allclose(got, np.maximum(x.mean(axis=1) - 10, 0), rtol=0, atol=1e-12)


def test_monte_carlo_matches_black_scholes():
    priced = mfbounds.price(MARKET, ["(x1 - 8)^+", "(x1 - 10)^+", "(x2 - 12)^+"], samples=200_000, seed=7)
    expected = [bs_call(10, 8, 0.3, 1.5), bs_call(10, 10, 0.3, 1.5), bs_call(10, 12, 0.4, 1.5)]
    for p, e in zip(priced, expected):
        assert abs(p["price"] - e) <= 3 * p["stderr"]
    assert mfbounds.black_scholes_call(MARKET, 2, 12) == pytest.approx(expected[2], rel=1e-9)


def test_lp_matches_comonotone_and_antitone_pairings():
    n = 10
    a1, a2 = quantile_atoms(0.3, n), quantile_atoms(0.4, n)
    out = mfbounds.lp_bounds(MARKET, [n, n], "x1 * x2")
    assert out["max"]["optimum"] == pytest.approx(np.mean(a1 * a2), abs=1e-9)
    assert out["min"]["optimum"] == pytest.approx(np.mean(a1 * a2[::-1]), abs=1e-9)


def test_feasibility_accepts_independent_price_and_rejects_inflated_one():
    n = 10
    a1, a2 = quantile_atoms(0.3, n), quantile_atoms(0.4, n)
    independent = float(np.mean(a1) * np.mean(a2))
    ok = mfbounds.check_feasibility(MARKET, [n, n], [("x1 * x2", independent, 1e-9)])
    assert ok["feasible"]
    inflated = float(np.mean(a1 * a2)) + 0.5
    bad = mfbounds.check_feasibility(MARKET, [n, n], [("x1 * x2", inflated, 1e-9)])
    assert not bad["feasible"]


def test_constant_payoff_bound_is_the_constant():
    up = mfbounds.train_bound(MARKET, "5", trainer=FAST)
    lo = mfbounds.train_bound(MARKET, "5", direction="lower", trainer=FAST)
    assert up["bound"] == pytest.approx(5.0, abs=0.1)
    assert lo["bound"] == pytest.approx(5.0, abs=0.1)


def test_cli_operations_write_documents(tmp_path):
    config = {
        "seed": 3,
        "market": MARKET,
        "target": {"payoff": "(max(x1, x2) - {K})^+", "strikes": [10]},
        "constraints": [{"payoff": "(avg(x1, x2) - {K})^+", "strikes": [10]}],
        "trainer": {"iterations": 500, "eval_samples": 4096, "slack_samples": 1024},
        "pricing": {"samples": 20000},
    }
    generated = mfbounds.generate(config, tmp_path)
    assert len(generated["instruments"]) == 1
    result = mfbounds.bound(config, tmp_path, direction="upper")
    assert (tmp_path / "result.json").exists()
    row = result["results"][0]
    assert row["strike"] == 10 and "upper" in row and "lower" not in row
    echoed = json.loads(json.dumps(result["config"]))
    assert echoed["seed"] == 3


def test_unknown_config_key_is_a_config_error(tmp_path):
    with pytest.raises(mfbounds.Error) as info:
        mfbounds.generate({"market": MARKET, "bogus": 1}, tmp_path)
    assert info.value.kind == "config"
    assert info.value.exit_code == 2
