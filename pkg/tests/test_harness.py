import math
from dataclasses import replace

import numpy as np
import pytest

from gravity_distance.dataset import PanelDataset, load_panel
from gravity_distance.design import ModelSpec
from gravity_distance.dgp import DGPConfig, replication_seed, simulate_panel
from gravity_distance.harness import (
    CoefficientSeries,
    SeriesEntry,
    fit_cross_section,
    fit_records,
    run_cross_sections,
    run_sectors,
    series_from_csv,
    series_summary,
    series_to_csv,
)

YEARS = range(1991, 2007)


def series_of(values, start=2000):
    entries = tuple(SeriesEntry(start + k, v, 0.1, 45, 0, True) for k, v in enumerate(values))
    return CoefficientSeries("manufacturing", "ols", entries)


def test_sixteen_year_series(ten_country_panel):
    s = run_cross_sections(ten_country_panel, ModelSpec(), YEARS)
    assert s.years == list(YEARS)
    assert all(e.ok and e.n == 45 for e in s.entries)
    assert set(s.fits) == set(YEARS)


def test_entries_equal_single_year_fits(ten_country_panel):
    s = run_cross_sections(ten_country_panel, ModelSpec.ppml(sector="services"), YEARS)
    for year in (1991, 2000, 2006):
        entry, f, _ = fit_cross_section(ten_country_panel, ModelSpec.ppml(sector="services"), year)
        assert s.entry(year) == entry
        assert entry.coef == f.coef("log_dis") and entry.se == f.se("log_dis")


def test_per_year_independence(ten_country_panel):
    full = run_cross_sections(ten_country_panel, ModelSpec(), YEARS)
    only = PanelDataset(
        ten_country_panel.countries,
        ten_country_panel.macro,
        tuple(f for f in ten_country_panel.flows if f.year == 1997),
        ten_country_panel.memberships,
        ten_country_panel.adjacency,
        ten_country_panel.oil,
    )
    assert run_cross_sections(only, ModelSpec(), [1997]).entries[0] == full.entry(1997)


def test_parallel_matches_sequential(ten_country_panel):
    spec = ModelSpec.ppml(sector="agriculture")
    a = run_cross_sections(ten_country_panel, spec, YEARS, workers=1)
    b = run_cross_sections(ten_country_panel, spec, YEARS, workers=6)
    assert series_to_csv([a]) == series_to_csv([b])


def test_failed_years_are_marked(two_country_panel):
    s = run_cross_sections(two_country_panel, ModelSpec(), [1990, 1991, 1992])
    assert [e.year for e in s.entries] == [1990, 1991, 1992]
    assert not any(e.ok for e in s.entries)
    assert "no flow data" in s.entries[0].status
    assert "cannot identify" in s.entries[1].status
    assert math.isnan(s.entries[1].coef)
    with pytest.raises(ValueError, match="every year"):
        series_summary(s)


def test_empty_year_range(ten_country_panel):
    with pytest.raises(ValueError, match="empty"):
        run_cross_sections(ten_country_panel, ModelSpec(), [])


def test_constant_cost_level_shift_absorbed_by_intercept():
    levels = {y: 0.9 ** (y - 1991) for y in YEARS}
    cfg = DGPConfig(sigma=0.0, cost_level=levels, sectors=("manufacturing",))
    s = run_cross_sections(simulate_panel(cfg), ModelSpec(), YEARS)
    coefs = s.values()
    assert np.ptp(coefs) < 1e-9
    cons = np.array([s.fits[y].coef("_cons") for y in YEARS])
    np.testing.assert_allclose(np.diff(cons), -math.log(0.9), atol=1e-9)


@pytest.mark.slow
def test_planted_elasticity_series_mean():
    base = DGPConfig(sigma=1.0, sectors=("manufacturing",), seed=2024)
    means = []
    for rep in range(200):
        panel = simulate_panel(replace(base, seed=replication_seed(base.seed, rep)))
        s = run_cross_sections(panel, ModelSpec(), YEARS)
        means.append(np.mean(s.values()))
        # each yearly estimate within sampling error (5 SE) of the truth
        assert all(abs(e.coef + 0.75) < 5 * e.se for e in s.entries)
    assert abs(np.mean(means) + 0.75) < 0.05


def test_series_summary_sign_change():
    summ = series_summary(series_of([0.2, 0.1, -0.1, -0.2]))
    assert summ.sign_change_years == [2002]
    assert summ.mean == pytest.approx(0.0, abs=1e-17)
    assert (summ.min, summ.max) == (-0.2, 0.2)
    np.testing.assert_allclose(summ.first_differences, [-0.1, -0.2, -0.1])


def test_series_summary_constant():
    summ = series_summary(series_of([-0.5] * 5))
    assert summ.sign_change_years == []
    assert summ.min == summ.max == summ.mean == -0.5


def test_series_summary_hand_fold():
    vals = [0.31, -0.05, -0.12, 0.07, 0.0, -0.4]
    summ = series_summary(series_of(vals))
    total, lo, hi, flips = 0.0, vals[0], vals[0], []
    for k, v in enumerate(vals):
        total += v
        lo, hi = min(lo, v), max(hi, v)
        if k and vals[k - 1] * v < 0:
            flips.append(2000 + k)
    assert summ.mean == pytest.approx(total / len(vals), rel=1e-15)
    assert (summ.min, summ.max, summ.sign_change_years) == (lo, hi, flips)


def test_summary_skips_failed_years():
    s = series_of([0.2, math.nan, -0.3])
    s = CoefficientSeries(s.sector, s.estimator, tuple(
        e._replace(status="failed: x") if math.isnan(e.coef) else e for e in s.entries))
    assert series_summary(s).sign_change_years == [2002]


def test_csv_columns_and_round_trip(ten_country_panel):
    sets = run_sectors(ten_country_panel, ModelSpec(), YEARS)
    text = series_to_csv(sets.values())
    assert text.splitlines()[0] == "year,sector,estimator,coef,se,n,dropped_zeros,status"
    assert len(text.splitlines()) == 1 + 3 * 16
    back = series_from_csv(text)
    assert [b.entries for b in back] == [s.entries for s in sets.values()]
    records = fit_records(sets.values())
    assert (1995, "agriculture", "ols") in records


def test_series_from_loaded_panel_matches_in_memory(ten_country_panel, ten_country_dir):
    a = run_cross_sections(ten_country_panel, ModelSpec(), YEARS)
    b = run_cross_sections(load_panel(ten_country_dir), ModelSpec(), YEARS)
    assert a.entries == b.entries
