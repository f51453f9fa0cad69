import math
from dataclasses import replace

import numpy as np
import pytest

import gravity_distance.dgp as dgp
from gravity_distance.dataset import pair_observations
from gravity_distance.design import ModelSpec, build_design
from gravity_distance.dgp import (
    DGPConfig,
    fibonacci_capitals,
    format_config,
    parse_config,
    planted_coefficients,
    recovery_experiment,
    replication_seed,
    simulate_panel,
)
from gravity_distance.estimators import ols_fit
from gravity_distance.geodesy import GeoPoint, haversine_km

SMALL = dict(sectors=("manufacturing",), years=(2000, 2001, 2002))


def log_flows(panel):
    return np.log([f.value for f in panel.flows])


def test_noiseless_flows_equal_predictor():
    cfg = DGPConfig(sigma=0.0, adjacency_effect=0.5, language_effect=0.25, free_trade_effect=-0.1, **SMALL)
    panel = simulate_panel(cfg)
    for f in panel.flows:
        a, b = panel.macro[(f.reporter, f.year)], panel.macro[(f.partner, f.year)]
        ca, cb = panel.country(f.reporter), panel.country(f.partner)
        expected = math.exp(
            -20.0
            + math.log(a.gdp)
            + math.log(b.gdp)
            - 0.75 * math.log(panel.distance(f.reporter, f.partner))
            + 0.5 * panel.adjacency.adjacent(f.reporter, f.partner)
            + 0.25 * bool(ca.languages & cb.languages)
            - 0.1 * bool(panel.memberships.shared_blocs(f.reporter, f.partner, f.year))
        )
        assert f.value == pytest.approx(expected, rel=1e-13)


def test_seed_determinism():
    a = simulate_panel(DGPConfig(seed=42, **SMALL))
    b = simulate_panel(DGPConfig(seed=42, **SMALL))
    c = simulate_panel(DGPConfig(seed=43, **SMALL))
    assert a.flows == b.flows and a.macro == b.macro
    assert a.flows != c.flows


def test_no_global_random_state():
    np.random.seed(1)
    a = simulate_panel(DGPConfig(seed=9, **SMALL))
    np.random.seed(2)
    np.random.random(100)
    assert simulate_panel(DGPConfig(seed=9, **SMALL)).flows == a.flows


def test_log_eta_mean_matches_lognormal_identity():
    # same seed with sigma=0 gives the deterministic predictor, so the log
    # ratio isolates ln(eta); 57 countries x 16 years x 4 sectors > 1e5 draws
    sigma = 1.0
    noisy = simulate_panel(DGPConfig(n_countries=57, sigma=sigma, seed=3))
    clean = simulate_panel(DGPConfig(n_countries=57, sigma=0.0, seed=3))
    ln_eta = log_flows(noisy) - log_flows(clean)
    assert ln_eta.size >= 100_000
    se = ln_eta.std(ddof=1) / math.sqrt(ln_eta.size)
    assert abs(ln_eta.mean() + sigma**2 / 2) < 3 * se
    assert ln_eta.std() == pytest.approx(sigma, rel=0.02)


def test_zero_share_censoring_rate():
    panel = simulate_panel(DGPConfig(n_countries=30, zero_share=0.3, seed=8, **SMALL))
    share = np.mean([f.value == 0 for f in panel.flows])
    n = len(panel.flows)
    assert abs(share - 0.3) < 3 * math.sqrt(0.3 * 0.7 / n)


def test_oil_series_follows_cost_level():
    levels = {2000: 1.0, 2001: 0.8, 2002: 1.25}
    panel = simulate_panel(DGPConfig(cost_level=levels, oil_base=40.0, **SMALL))
    assert {y: panel.oil[y] for y in panel.oil.years} == {2000: 40.0, 2001: 32.0, 2002: 50.0}


def test_noiseless_ols_recovers_planted_exactly():
    cfg = DGPConfig(sigma=0.0, geography="bundled", adjacency_effect=0.4, language_effect=0.2,
                    free_trade_effect=0.3, **SMALL)
    panel = simulate_panel(cfg)
    spec = ModelSpec()
    for year in cfg.years:
        f = ols_fit(build_design(pair_observations(panel, year, "manufacturing"), spec))
        truth = planted_coefficients(cfg, spec, year)
        for label, value in truth.items():
            assert f.coef(label) == pytest.approx(value, rel=1e-9, abs=1e-9), label


def test_elasticity_path_moves_distance_coefficient():
    cfg = DGPConfig(sigma=0.0, cost_elasticity={2000: 1.0, 2001: 1.2, 2002: 0.8}, **SMALL)
    panel = simulate_panel(cfg)
    for year, rho in cfg.cost_elasticity.items():
        f = ols_fit(build_design(pair_observations(panel, year, "manufacturing"), ModelSpec()))
        assert f.coef("log_dis") == pytest.approx(-0.75 * rho, abs=1e-9)


def test_noiseless_recovery_has_zero_bias():
    cfg = DGPConfig(sigma=0.0, **SMALL)
    rep = recovery_experiment(cfg, ModelSpec(), 3)
    assert rep.failures == 0
    for c in rep.coefficients:
        assert abs(c.bias) < 1e-9 and c.rmse < 1e-9, c
    assert rep["log_dis"].estimates == 9


def test_recovery_counts_failures():
    # two countries give one pair per year: every estimation fails
    rep = recovery_experiment(DGPConfig(n_countries=2, **SMALL), ModelSpec(), 2)
    assert rep.failures == 6 and rep.coefficients == ()
    assert "replication 0, 2000" in rep.failure_reasons[0]


def test_ppml_rmse_shrinks_with_pair_count():
    years = (2000, 2001, 2002, 2003)
    small = recovery_experiment(DGPConfig(n_countries=10, sigma=1.0, sectors=("manufacturing",), years=years, seed=5),
                                ModelSpec.ppml(), 100, workers=4)["log_dis"]
    large = recovery_experiment(DGPConfig(n_countries=20, sigma=1.0, sectors=("manufacturing",), years=years, seed=5),
                                ModelSpec.ppml(), 100, workers=4)["log_dis"]
    assert (small.estimates, large.estimates) == (400, 400)
    assert large.rmse < small.rmse / 1.4
    assert abs(large.bias) < abs(small.bias)
    assert abs(large.bias) < 3 * large.rmse / math.sqrt(large.estimates)


def test_replication_seed_is_position_based():
    seeds = [replication_seed(7, r) for r in range(50)]
    assert len(set(seeds)) == 50
    assert replication_seed(7, 3) == seeds[3]
    assert all(0 <= s < 2**64 for s in seeds)


def test_parallel_recovery_matches_sequential():
    cfg = DGPConfig(sigma=0.7, seed=4, **SMALL)
    a = recovery_experiment(cfg, ModelSpec(), 6, workers=1)
    b = recovery_experiment(cfg, ModelSpec(), 6, workers=3)
    assert a.to_csv() == b.to_csv()


def test_fibonacci_capitals_are_spread():
    pts = fibonacci_capitals(40, seed=1)
    assert len(set(pts)) == 40
    d = [haversine_km(GeoPoint(*pts[a]), GeoPoint(*pts[b])) for a in range(40) for b in range(a)]
    assert min(d) > 1500.0
    assert fibonacci_capitals(40, seed=1) == pts != fibonacci_capitals(40, seed=2)


def test_coincident_geography_is_rejected(monkeypatch):
    monkeypatch.setattr(dgp, "fibonacci_capitals", lambda n, seed: [(10.0, 20.0)] * n)
    with pytest.raises(ValueError, match="coincident capitals"):
        simulate_panel(DGPConfig(**SMALL))


@pytest.mark.parametrize(
    "kw, match",
    [
        (dict(sigma=-1.0), "sigma"),
        (dict(zero_share=1.0), "zero_share"),
        (dict(beta_distance=-0.75), "magnitude"),
        (dict(cost_level={2000: 0.0}), "cost_level"),
        (dict(geography="moon"), "geography"),
        (dict(seed=-1), "seed"),
    ],
)
def test_config_validation(kw, match):
    with pytest.raises(ValueError, match=match):
        DGPConfig(**kw)


def test_config_round_trip():
    cfg = DGPConfig(
        n_countries=12,
        years=tuple(range(1995, 2000)),
        sectors=("manufacturing", "services"),
        cost_level={y: 0.95 ** (y - 1995) for y in range(1995, 2000)},
        sigma=0.3,
        zero_share=0.1,
        seed=2**63 + 5,
    )
    assert parse_config(format_config(cfg)) == cfg


def test_config_path_syntax():
    cfg = parse_config("years = 2000:2002\ncost_level = geometric:-0.1  # falling\ncost_elasticity = 1.5\n")
    assert cfg.cost_level == {2000: 1.0, 2001: 0.9, 2002: pytest.approx(0.81)}
    assert cfg.cost_elasticity == {2000: 1.5, 2001: 1.5, 2002: 1.5}
    with pytest.raises(ValueError, match="unknown config keys"):
        parse_config("sigmaa = 1")
    with pytest.raises(ValueError, match="line 1"):
        parse_config("sigma 1")


def test_planted_truth_absorbs_noise_and_zero_terms():
    cfg = DGPConfig(sigma=0.8, zero_share=0.2, cost_level={2000: 0.5}, **SMALL)
    ols = planted_coefficients(cfg, ModelSpec(), 2000)["_cons"]
    ppml = planted_coefficients(cfg, ModelSpec.ppml(), 2000)["_cons"]
    assert ols == pytest.approx(-20.0 + math.log(2.0) - 0.32)
    assert ppml == pytest.approx(-20.0 + math.log(2.0) + math.log(0.8))
    with pytest.raises(ValueError, match="level response"):
        planted_coefficients(cfg, replace(ModelSpec.ppml(), estimator="ols"), 2000)
