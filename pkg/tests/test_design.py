import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gravity_distance.dataset import PairObservation, pair_observations
from gravity_distance.design import DesignMatrix, ModelSpec, build_design, column_summary, constant_columns

DISAGGREGATED = (
    "_cons", "log_gdpa", "log_gdpb", "log_dis", "adj", "samelanguage", "freetradezone", "populationa", "populationb",
)


def obs(**kw):
    base = dict(
        year=1995, i="AAA", j="BBB", sector="manufacturing", trade_value=5.0,
        gdp_i=math.exp(10), gdp_j=math.exp(10), pop_i=1e6, pop_j=2e6, distance_km=math.exp(8),
        adjacent=0, same_language=0, shared_free_trade=0,
    )
    base.update(kw)
    return PairObservation(**base)


@pytest.fixture
def obs45(ten_country_panel):
    rows = pair_observations(ten_country_panel, 1995, "manufacturing")
    return [replace(o, trade_value=0.0) if k in (3, 17, 40) else o for k, o in enumerate(rows)]


def test_single_row_values():
    d = build_design([obs()], ModelSpec())
    assert d.column_labels == DISAGGREGATED
    np.testing.assert_array_equal(d.rows[0], [1, 10, 10, 8, 0, 0, 0, 1e6, 2e6])
    assert d.response[0] == math.log(5.0)
    assert d.response_label == "log_man"


def test_zero_flows_dropped_under_log(obs45):
    d = build_design(obs45, ModelSpec())
    assert d.n == 42 and d.dropped_zero_count == 3
    assert d.n + d.dropped_zero_count == len(obs45)


def test_zero_flows_kept_for_ppml(obs45):
    d = build_design(obs45, ModelSpec.ppml())
    assert d.n == 45 and d.dropped_zero_count == 0
    assert (d.response == 0).sum() == 3


def test_spec_invariants():
    with pytest.raises(ValueError, match="zero_policy"):
        ModelSpec(response="log", zero_policy="keep")
    with pytest.raises(ValueError, match="level"):
        ModelSpec(estimator="ppml", response="log")
    with pytest.raises(ValueError):
        ModelSpec(sector="fishing")


def test_eq1_columns(ten_country_panel):
    d = build_design(pair_observations(ten_country_panel, 1995, "total"), ModelSpec(specification="eq1_blocs", sector="total"))
    assert d.column_labels == ("_cons", "log_gnp_product", "log_percap_product", "log_dis", "adjacent", "EA", "EC", "NAFTA")
    # AUT joins the EC in 1995; DEU-ITA are both members throughout
    idx = {(i, j): r for r, (i, j, _) in enumerate(d.pair_index)}
    assert d.column("EC")[idx[("AUT", "DEU")]] == 1
    assert d.column("NAFTA")[idx[("CAN", "USA")]] == 1
    assert d.column("EA").sum() == 0  # only one EA member among the ten
    o = pair_observations(ten_country_panel, 1995, "total")[0]
    row = d.rows[0]
    assert row[1] == pytest.approx(math.log(o.gdp_i * o.gdp_j))
    assert row[2] == pytest.approx(math.log(o.gdp_i / o.pop_i * o.gdp_j / o.pop_j))


def test_population_modes():
    o = [obs()]
    assert build_design(o, ModelSpec(population_mode="log")).column_labels[-2:] == ("log_populationa", "log_populationb")
    assert build_design(o, ModelSpec(population_mode="log")).rows[0, -1] == math.log(2e6)
    assert build_design(o, ModelSpec(population_mode="omit")).k == 7


def test_errors():
    with pytest.raises(ValueError, match="empty"):
        build_design([], ModelSpec())
    with pytest.raises(ValueError, match="GDP"):
        build_design([obs(gdp_i=0.0)], ModelSpec())
    with pytest.raises(ValueError, match="distance"):
        build_design([obs(distance_km=0.0)], ModelSpec())
    with pytest.raises(ValueError, match="share one year"):
        build_design([obs(), obs(year=1996)], ModelSpec())


def test_column_summary_flags():
    d = build_design([obs(), obs(j="CCC", gdp_j=math.exp(11))], ModelSpec())
    summary = {s.label: s for s in column_summary(d)}
    assert summary["adj"].zero_variance and not summary["adj"].exempt
    assert summary["_cons"].zero_variance and summary["_cons"].exempt
    assert not summary["log_gdpb"].zero_variance
    assert "_cons" not in constant_columns(d)
    assert "adj" in constant_columns(d)


def test_column_summary_matches_direct_pass(rng):
    X = rng.normal(size=(30, 4))
    X[:, 0] = 1.0
    d = DesignMatrix(("_cons", "a", "b", "c"), X, rng.normal(size=30))
    for s, col in zip(column_summary(d), X.T):
        lo = hi = col[0]
        total = 0.0
        for v in col:
            lo, hi, total = min(lo, v), max(hi, v), total + v
        assert (s.min, s.max) == (lo, hi)
        assert s.mean == pytest.approx(total / len(col), rel=1e-14)


def test_csv_round_trip_bit_exact(obs45):
    d = build_design(obs45, ModelSpec())
    back = DesignMatrix.from_csv(d.to_csv(), d.dropped_zero_count)
    assert back.column_labels == d.column_labels
    assert np.array_equal(back.rows, d.rows) and np.array_equal(back.response, d.response)
    assert back.pair_index == d.pair_index and back.response_label == d.response_label


@settings(max_examples=25, deadline=None)
@given(st.randoms(use_true_random=False))
def test_permutation_equivariance(ten_country_panel, shuffler):
    rows = pair_observations(ten_country_panel, 2001, "services")
    perm = list(range(len(rows)))
    shuffler.shuffle(perm)
    d = build_design(rows, ModelSpec())
    dp = build_design([rows[k] for k in perm], ModelSpec())
    assert np.array_equal(dp.rows, d.rows[perm])
    assert np.array_equal(dp.response, d.response[perm])
