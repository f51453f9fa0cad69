import numpy as np
import pytest

from gravity_distance.dataset import load_panel, write_panel
from gravity_distance.dgp import DGPConfig, simulate_panel

FULL_YEARS = tuple(range(1991, 2007))


@pytest.fixture(scope="session")
def ten_country_config():
    return DGPConfig(
        geography="bundled",
        years=FULL_YEARS,
        sigma=0.5,
        adjacency_effect=0.4,
        language_effect=0.2,
        free_trade_effect=0.3,
        seed=11,
    )


@pytest.fixture(scope="session")
def ten_country_panel(ten_country_config):
    return simulate_panel(ten_country_config)


@pytest.fixture(scope="session")
def ten_country_dir(tmp_path_factory, ten_country_panel):
    root = tmp_path_factory.mktemp("ten_country")
    write_panel(ten_country_panel, root)
    return root


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def write_tables(root, **tables):
    """Write CSV tables given as lists of lines (header first)."""
    root.mkdir(parents=True, exist_ok=True)
    for name, lines in tables.items():
        (root / f"{name}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return root


@pytest.fixture
def two_country_dir(tmp_path):
    years = range(1991, 2007)
    return write_tables(
        tmp_path / "two",
        countries=["iso3,name,capital_lat,capital_lon,languages", "AAA,Alpha,10,20,xx", "BBB,Beta,-5,40,yy;xx"],
        flows=["year,reporter,partner,sector,value_usd"]
        + [f"{y},BBB,AAA,manufacturing,{1000 + y}" for y in years],
        macro=["year,iso3,gdp_usd,population"]
        + [f"{y},{c},{1e9 * (k + 1)},{1e6 * (k + 2)}" for y in years for k, c in enumerate(("AAA", "BBB"))],
        memberships=["bloc,iso3,year_start,year_end", "FTA,AAA,1994,2006", "FTA,BBB,1994,2006"],
        adjacency=["iso3_a,iso3_b"],
        oil=["year,price_usd_per_barrel"] + [f"{y},{20 + y - 1991}" for y in years],
    )


@pytest.fixture
def two_country_panel(two_country_dir):
    return load_panel(two_country_dir)
