"""Synthetic gravity panels with planted coefficients and transport-cost paths.

Flows follow the multiplicative form

    F_ijt = exp(c0 + b_i ln GDP_it + b_j ln GDP_jt - rho_t * b_d * ln D_ij
                - ln a_t + dummy effects) * eta_ijt

with ``ln eta ~ Normal(-sigma^2/2, sigma^2)`` so that ``E[eta] = 1``.
``a_t`` scales the cost of trade at every distance by the same factor,
``rho_t`` scales the distance elasticity itself.  Each flow is then set to
zero independently with probability ``zero_share``.
"""

from __future__ import annotations

import math
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping, NamedTuple

import numpy as np

from .dataset import (
    AdjacencyTable,
    CountryRecord,
    FlowRecord,
    MacroEntry,
    Membership,
    MembershipTable,
    OilSeries,
    PanelDataset,
    bundled_tables,
)
from .design import EQ1_BLOCS, INTERCEPT, ModelSpec
from .geodesy import EARTH_RADIUS_KM
from .harness import run_cross_sections

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class DGPConfig:
    n_countries: int = 10
    geography: str = "fibonacci"
    years: tuple[int, ...] = tuple(range(1991, 2007))
    sectors: tuple[str, ...] = ("total", "agriculture", "manufacturing", "services")
    intercept: float = -20.0
    beta_gdp_i: float = 1.0
    beta_gdp_j: float = 1.0
    beta_distance: float = 0.75
    adjacency_effect: float = 0.0
    language_effect: float = 0.0
    free_trade_effect: float = 0.0
    cost_level: Mapping[int, float] = field(default_factory=dict)
    cost_elasticity: Mapping[int, float] = field(default_factory=dict)
    sigma: float = 1.0
    zero_share: float = 0.0
    log_gdp_mean: float = 26.0
    log_gdp_sd: float = 1.2
    gdp_growth: float = 0.03
    log_pop_mean: float = 17.0
    log_pop_sd: float = 1.0
    pop_growth: float = 0.01
    oil_base: float = 20.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "years", tuple(sorted(self.years)))
        object.__setattr__(self, "cost_level", dict(self.cost_level))
        object.__setattr__(self, "cost_elasticity", dict(self.cost_elasticity))
        if self.geography not in ("fibonacci", "bundled"):
            raise ValueError(f"unknown geography {self.geography!r}")
        if self.geography == "fibonacci" and not 2 <= self.n_countries <= 26**3:
            raise ValueError("n_countries must lie in [2, 17576]")
        if not self.years:
            raise ValueError("at least one year is required")
        if self.beta_distance < 0:
            raise ValueError("beta_distance is an elasticity magnitude and must be >= 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if not 0 <= self.zero_share < 1:
            raise ValueError("zero_share must lie in [0, 1)")
        for name in ("cost_level", "cost_elasticity"):
            for y, v in getattr(self, name).items():
                if not v > 0:
                    raise ValueError(f"{name}[{y}] must be positive, got {v}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def level(self, year: int) -> float:
        return self.cost_level.get(year, 1.0)

    def elasticity_scale(self, year: int) -> float:
        return self.cost_elasticity.get(year, 1.0)


def _iso_code(k: int) -> str:
    letters = string.ascii_uppercase
    return letters[k // 676] + letters[(k // 26) % 26] + letters[k % 26]


def fibonacci_capitals(n: int, seed: int) -> list[tuple[float, float]]:
    """``n`` well-spread (lat, lon) points from a rotated spherical Fibonacci lattice."""
    offset = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,))).uniform(0.0, 2 * math.pi)
    out = []
    for k in range(n):
        z = 1.0 - (2 * k + 1) / n
        lat = math.degrees(math.asin(z))
        lon = math.degrees((offset + k * GOLDEN_ANGLE) % (2 * math.pi))
        if lon > 180.0:
            lon -= 360.0
        out.append((round(lat, 6), round(lon, 6)))
    return out


def _synthetic_tables(config: DGPConfig):
    n = config.n_countries
    pts = fibonacci_capitals(n, config.seed)
    if len(set(pts)) < n:
        raise ValueError("synthetic geography has coincident capitals")
    codes = [_iso_code(k) for k in range(n)]
    countries = [
        CountryRecord(codes[k], f"Synthetic {codes[k]}", lat, lon, languages=frozenset({f"l{k % 3}"}))
        for k, (lat, lon) in enumerate(pts)
    ]
    # each country borders its nearest neighbour
    lat = np.radians([p[0] for p in pts])
    lon = np.radians([p[1] for p in pts])
    xyz = np.column_stack([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])
    gram = xyz @ xyz.T
    np.fill_diagonal(gram, -np.inf)
    adjacency = AdjacencyTable.from_pairs((codes[k], codes[int(np.argmax(gram[k]))]) for k in range(n))
    m = max(1, n // 3)
    first, last = config.years[0], config.years[-1]
    rows = []
    for b, bloc in enumerate(("EC", "NAFTA", "EA")):
        hi = n if b == 2 else min(n, (b + 1) * m)
        rows += [Membership(bloc, codes[k], first, last) for k in range(b * m, hi)]
    return countries, MembershipTable(tuple(rows)), adjacency


def simulate_panel(config: DGPConfig) -> PanelDataset:
    """Draw a full panel (all seven tables) from ``config``.

    All randomness comes from ``config.seed``: equal seeds give identical
    panels.
    """
    if config.geography == "bundled":
        tables = bundled_tables()
        countries, memberships, adjacency = tables["countries"], tables["memberships"], tables["adjacency"]
    else:
        countries, memberships, adjacency = _synthetic_tables(config)
    countries = sorted(countries, key=lambda c: c.iso3)
    codes = [c.iso3 for c in countries]
    panel0 = PanelDataset(tuple(countries), {}, (), memberships, adjacency, OilSeries({}))
    if np.any(panel0.distances[np.triu_indices(len(codes), 1)] <= 1e-9 * EARTH_RADIUS_KM):
        raise ValueError("degenerate geography: coincident capitals")

    macro_rng, noise_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(2))
    n = len(codes)
    base_gdp = macro_rng.normal(config.log_gdp_mean, config.log_gdp_sd, n)
    base_pop = macro_rng.normal(config.log_pop_mean, config.log_pop_sd, n)
    t0 = config.years[0]
    macro = {}
    for y in config.years:
        for k, code in enumerate(codes):
            macro[(code, y)] = MacroEntry(
                float(np.exp(base_gdp[k] + config.gdp_growth * (y - t0))),
                float(np.round(np.exp(base_pop[k] + config.pop_growth * (y - t0)))),
            )

    pairs = panel0.pairs
    flows = []
    for y in config.years:
        slope = config.elasticity_scale(y) * config.beta_distance
        for sector in config.sectors:
            noise = noise_rng.standard_normal(len(pairs))
            censor = noise_rng.random(len(pairs))
            for p, (i, j) in enumerate(pairs):
                blocs = memberships.shared_blocs(i, j, y)
                same_lang = bool(panel0.country(i).languages & panel0.country(j).languages)
                eta = (
                    config.intercept
                    + config.beta_gdp_i * math.log(macro[(i, y)].gdp)
                    + config.beta_gdp_j * math.log(macro[(j, y)].gdp)
                    - slope * math.log(panel0.distance(i, j))
                    - math.log(config.level(y))
                    + config.adjacency_effect * adjacency.adjacent(i, j)
                    + config.language_effect * same_lang
                    + config.free_trade_effect * bool(blocs)
                )
                if config.sigma > 0:
                    eta += config.sigma * noise[p] - config.sigma**2 / 2.0
                value = 0.0 if censor[p] < config.zero_share else math.exp(eta)
                flows.append(FlowRecord(y, i, j, sector, value))

    oil = OilSeries({y: config.oil_base * config.level(y) for y in config.years})
    return PanelDataset(
        countries=tuple(countries),
        macro=macro,
        flows=tuple(flows),
        memberships=memberships,
        adjacency=adjacency,
        oil=oil,
        distances=panel0.distances,
    )


def planted_coefficients(config: DGPConfig, spec: ModelSpec, year: int) -> dict[str, float]:
    """Population values of each coefficient the estimator targets in ``year``.

    Under a log response the intercept absorbs ``E[ln eta] = -sigma^2/2``;
    under PPML with zeros kept it absorbs ``ln(1 - zero_share)``.
    """
    if spec.estimator == "ols" and spec.response != "log":
        raise ValueError("no planted truth for OLS on a level response")
    cons = config.intercept - math.log(config.level(year))
    if spec.response == "log":
        cons -= config.sigma**2 / 2.0
    elif spec.zero_policy == "keep" and config.zero_share > 0:
        cons += math.log(1.0 - config.zero_share)
    slope = -config.elasticity_scale(year) * config.beta_distance
    if spec.specification == "disaggregated":
        truth = {
            INTERCEPT: cons,
            "log_gdpa": config.beta_gdp_i,
            "log_gdpb": config.beta_gdp_j,
            "log_dis": slope,
            "adj": config.adjacency_effect,
            "samelanguage": config.language_effect,
            "freetradezone": config.free_trade_effect,
        }
        if spec.population_mode == "level":
            truth.update(populationa=0.0, populationb=0.0)
        elif spec.population_mode == "log":
            truth.update(log_populationa=0.0, log_populationb=0.0)
        return truth
    if config.beta_gdp_i != config.beta_gdp_j:
        raise ValueError("eq1_blocs spec needs beta_gdp_i == beta_gdp_j to be correctly specified")
    if config.language_effect != 0 or (config.free_trade_effect != 0 and config.geography == "bundled"):
        raise ValueError("eq1_blocs spec omits the language dummy / non-eq1 blocs")
    truth = {
        INTERCEPT: cons,
        "log_gnp_product": config.beta_gdp_i,
        "log_percap_product": 0.0,
        "log_dis": slope,
        "adjacent": config.adjacency_effect,
    }
    truth.update({b: config.free_trade_effect for b in EQ1_BLOCS})
    return truth


def replication_seed(seed: int, replication: int) -> int:
    """Sub-seed for one replication, derived from its position only."""
    return int(np.random.SeedSequence(seed, spawn_key=(replication,)).generate_state(1, np.uint64)[0])


class CoefficientRecovery(NamedTuple):
    label: str
    truth_mean: float
    mean: float
    bias: float
    rmse: float
    coverage: float
    estimates: int


@dataclass(frozen=True)
class RecoveryReport:
    coefficients: tuple[CoefficientRecovery, ...]
    replications: int
    failures: int
    failure_reasons: tuple[str, ...]
    level: float = 0.95

    def __getitem__(self, label: str) -> CoefficientRecovery:
        for c in self.coefficients:
            if c.label == label:
                return c
        raise KeyError(label)

    def to_csv(self) -> str:
        lines = ["coefficient,truth,mean,bias,rmse,coverage,estimates,replications,failures"]
        for c in self.coefficients:
            lines.append(
                f"{c.label},{c.truth_mean!r},{c.mean!r},{c.bias!r},{c.rmse!r},{c.coverage!r},"
                f"{c.estimates},{self.replications},{self.failures}"
            )
        return "\n".join(lines) + "\n"


def _one_replication(config, spec, rep, level):
    from .estimators import inference

    cfg = replace(config, seed=replication_seed(config.seed, rep))
    panel = simulate_panel(cfg)
    series = run_cross_sections(panel, spec, cfg.years)
    rows, failures = [], []
    for e in series.entries:
        if not e.ok:
            failures.append(f"replication {rep}, {e.year}: {e.status}")
            continue
        truth = planted_coefficients(cfg, spec, e.year)
        table = inference(series.fits[e.year], level)
        for r in table.rows:
            t = truth[r.label]
            rows.append((r.label, t, r.coef, r.ci_low <= t <= r.ci_high))
    return rows, failures


def recovery_experiment(
    config: DGPConfig,
    spec: ModelSpec,
    replications: int,
    level: float = 0.95,
    workers: int = 1,
) -> RecoveryReport:
    """Simulate, estimate and score against the planted truth ``replications`` times.

    Every (replication, year) cross-section contributes one estimate per
    coefficient.  Failed estimations are counted in the report.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    reps = range(replications)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda r: _one_replication(config, spec, r, level), reps))
    else:
        results = [_one_replication(config, spec, r, level) for r in reps]

    per_label: dict[str, list[tuple[float, float, bool]]] = {}
    reasons = []
    for rows, failures in results:
        reasons += failures
        for label, truth, est, covered in rows:
            per_label.setdefault(label, []).append((truth, est, covered))
    out = []
    for label, vals in per_label.items():
        truth = np.array([v[0] for v in vals])
        est = np.array([v[1] for v in vals])
        err = est - truth
        out.append(
            CoefficientRecovery(
                label,
                float(truth.mean()),
                float(est.mean()),
                float(err.mean()),
                float(np.sqrt(np.mean(err**2))),
                float(np.mean([v[2] for v in vals])),
                len(vals),
            )
        )
    return RecoveryReport(tuple(out), replications, len(reasons), tuple(reasons), level)


# -- config file ---------------------------------------------------------------


def _parse_years(text: str) -> tuple[int, ...]:
    if ":" in text:
        a, b = text.split(":")
        return tuple(range(int(a), int(b) + 1))
    return tuple(int(v) for v in text.split(","))


def _parse_path(text: str, years) -> dict[int, float]:
    """``0.9`` (constant), ``geometric:-0.05`` or ``1991:1.0,1992:0.95``."""
    text = text.strip()
    if text.startswith("geometric:"):
        rate = float(text.split(":", 1)[1])
        return {y: (1.0 + rate) ** (y - years[0]) for y in years}
    if ":" in text:
        out = {}
        for part in text.split(","):
            y, v = part.split(":")
            out[int(y)] = float(v)
        return out
    return {y: float(text) for y in years}


def parse_config(text: str) -> DGPConfig:
    """Build a config from ``key = value`` lines; ``#`` starts a comment."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    types = {f.name: f.type for f in fields(DGPConfig)}
    unknown = sorted(set(raw) - set(types))
    if unknown:
        raise ValueError(f"unknown config keys {unknown}")
    kw = {}
    years = _parse_years(raw["years"]) if "years" in raw else DGPConfig.years
    for key, value in raw.items():
        if key == "years":
            kw[key] = years
        elif key == "sectors":
            kw[key] = tuple(s.strip() for s in value.split(","))
        elif key in ("cost_level", "cost_elasticity"):
            kw[key] = _parse_path(value, years)
        elif key == "geography":
            kw[key] = value
        elif key in ("n_countries", "seed"):
            kw[key] = int(value)
        else:
            kw[key] = float(value)
    return DGPConfig(**kw)


def load_config(path) -> DGPConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def format_config(config: DGPConfig) -> str:
    lines = []
    for f in fields(DGPConfig):
        v = getattr(config, f.name)
        if f.name == "years":
            v = ",".join(map(str, v))
        elif f.name == "sectors":
            v = ",".join(v)
        elif f.name in ("cost_level", "cost_elasticity"):
            if not v:
                continue
            v = ",".join(f"{y}:{x!r}" for y, x in sorted(v.items()))
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


__all__ = [
    "DGPConfig",
    "CoefficientRecovery",
    "RecoveryReport",
    "fibonacci_capitals",
    "format_config",
    "load_config",
    "parse_config",
    "planted_coefficients",
    "recovery_experiment",
    "replication_seed",
    "simulate_panel",
]
