"""Bilateral trade panel: CSV ingestion, validation and pair observations.

A panel is the union of seven comma-separated tables (see ``SCHEMAS``).
Trade is undirected: one value per unordered country pair, year and sector.
Pairs are labelled canonically with ``i < j`` in iso3 order.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .geodesy import GeoPoint, distance_matrix

SECTORS = ("total", "agriculture", "manufacturing", "services")
DISTANCE_MEASURES = ("capital", "weighted_city")

SCHEMAS = {
    "countries": ("iso3", "name", "capital_lat", "capital_lon", "languages"),
    "cities": ("iso3", "city", "lat", "lon", "gdp_share"),
    "flows": ("year", "reporter", "partner", "sector", "value_usd"),
    "macro": ("year", "iso3", "gdp_usd", "population"),
    "memberships": ("bloc", "iso3", "year_start", "year_end"),
    "adjacency": ("iso3_a", "iso3_b"),
    "oil": ("year", "price_usd_per_barrel"),
}
OPTIONAL_TABLES = frozenset({"cities"})


class DataError(ValueError):
    """Malformed or inconsistent panel input.

    ``source`` is ``"file:line"`` when the problem is tied to one record.
    """

    def __init__(self, message: str, source: str | None = None):
        self.source = source
        super().__init__(f"{source}: {message}" if source else message)


def canonical_pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class City:
    name: str
    lat: float
    lon: float
    gdp_share: float

    @property
    def point(self) -> GeoPoint:
        return GeoPoint(self.lat, self.lon)


@dataclass(frozen=True)
class CountryRecord:
    iso3: str
    name: str
    capital_lat: float
    capital_lon: float
    cities: tuple[City, ...] = ()
    languages: frozenset[str] = frozenset()

    def __post_init__(self):
        if len(self.iso3) != 3:
            raise ValueError(f"iso3 code must have 3 characters, got {self.iso3!r}")
        GeoPoint(self.capital_lat, self.capital_lon)  # range check
        for c in self.cities:
            GeoPoint(c.lat, c.lon)
            if not 0.0 <= c.gdp_share <= 1.0:
                raise ValueError(f"{self.iso3}/{c.name}: gdp_share {c.gdp_share} outside [0, 1]")
        if self.cities:
            total = math.fsum(c.gdp_share for c in self.cities)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"{self.iso3}: city gdp shares sum to {total!r}, not 1")

    @property
    def capital(self) -> GeoPoint:
        return GeoPoint(self.capital_lat, self.capital_lon)


@dataclass(frozen=True)
class MacroEntry:
    gdp: float
    population: float


@dataclass(frozen=True)
class FlowRecord:
    year: int
    reporter: str
    partner: str
    sector: str
    value: float

    @property
    def pair(self) -> tuple[str, str]:
        return canonical_pair(self.reporter, self.partner)


@dataclass(frozen=True)
class Membership:
    bloc: str
    iso3: str
    year_start: int
    year_end: int

    def covers(self, year: int) -> bool:
        return self.year_start <= year <= self.year_end


@dataclass(frozen=True)
class MembershipTable:
    rows: tuple[Membership, ...] = ()

    def blocs_of(self, iso3: str, year: int) -> frozenset[str]:
        return frozenset(m.bloc for m in self.rows if m.iso3 == iso3 and m.covers(year))

    def shared_blocs(self, a: str, b: str, year: int) -> frozenset[str]:
        """Blocs of which both countries are members in ``year``."""
        return self.blocs_of(a, year) & self.blocs_of(b, year)

    @property
    def blocs(self) -> tuple[str, ...]:
        return tuple(sorted({m.bloc for m in self.rows}))


@dataclass(frozen=True)
class AdjacencyTable:
    pairs: frozenset[tuple[str, str]] = frozenset()

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "AdjacencyTable":
        return cls(frozenset(canonical_pair(a, b) for a, b in pairs))

    def adjacent(self, a: str, b: str) -> bool:
        return canonical_pair(a, b) in self.pairs


@dataclass(frozen=True)
class OilSeries:
    prices: Mapping[int, float]

    def __post_init__(self):
        for year, price in self.prices.items():
            if not price > 0:
                raise ValueError(f"oil price for {year} must be positive, got {price}")

    def __getitem__(self, year: int) -> float:
        return self.prices[year]

    def __contains__(self, year: int) -> bool:
        return year in self.prices

    @property
    def years(self) -> list[int]:
        return sorted(self.prices)

    def is_contiguous(self, start: int, end: int) -> bool:
        return all(y in self.prices for y in range(start, end + 1))


@dataclass(frozen=True)
class PairObservation:
    year: int
    i: str
    j: str
    sector: str
    trade_value: float
    gdp_i: float
    gdp_j: float
    pop_i: float
    pop_j: float
    distance_km: float
    adjacent: int
    same_language: int
    shared_free_trade: int
    shared_blocs: frozenset[str] = frozenset()


@dataclass(frozen=True)
class PanelDataset:
    countries: tuple[CountryRecord, ...]
    macro: Mapping[tuple[str, int], MacroEntry]
    flows: tuple[FlowRecord, ...]
    memberships: MembershipTable
    adjacency: AdjacencyTable
    oil: OilSeries
    distance_measure: str = "capital"
    distances: np.ndarray = field(default=None, repr=False)
    _index: dict = field(default=None, init=False, repr=False, compare=False)
    _flow_index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        countries = tuple(sorted(self.countries, key=lambda c: c.iso3))
        object.__setattr__(self, "countries", countries)
        object.__setattr__(self, "flows", tuple(sorted(self.flows, key=lambda f: (f.year, f.sector, f.pair))))
        index = {}
        for pos, c in enumerate(countries):
            if c.iso3 in index:
                raise DataError(f"duplicate country {c.iso3}")
            index[c.iso3] = pos
        object.__setattr__(self, "_index", index)
        if self.distance_measure not in DISTANCE_MEASURES:
            raise DataError(f"unknown distance measure {self.distance_measure!r}")
        dist = self.distances
        if dist is None:
            dist = distance_matrix(countries, self.distance_measure)
        dist = np.array(dist, dtype=float)
        if dist.shape != (len(countries),) * 2:
            raise DataError("distance matrix shape does not match country count")
        if not (np.array_equal(dist, dist.T) and np.all(np.diag(dist) == 0.0)):
            raise DataError("distance matrix must be symmetric with a zero diagonal")
        dist.setflags(write=False)
        object.__setattr__(self, "distances", dist)

        flow_index: dict[tuple[int, str], dict[tuple[str, str], float]] = {}
        for f in self.flows:
            for code in (f.reporter, f.partner):
                if code not in index:
                    raise DataError(f"flow {f.year}/{f.reporter}-{f.partner} names unknown country {code}")
            cell = flow_index.setdefault((f.year, f.sector), {})
            if f.pair in cell:
                raise DataError(f"duplicate flow for {f.year} {f.pair[0]}-{f.pair[1]} {f.sector}")
            cell[f.pair] = f.value
        object.__setattr__(self, "_flow_index", flow_index)
        for m in self.memberships.rows:
            if m.iso3 not in index:
                raise DataError(f"membership {m.bloc} names unknown country {m.iso3}")
        for a, b in self.adjacency.pairs:
            for code in (a, b):
                if code not in index:
                    raise DataError(f"adjacency {a}-{b} names unknown country {code}")

    @property
    def iso3(self) -> tuple[str, ...]:
        return tuple(c.iso3 for c in self.countries)

    @property
    def years(self) -> list[int]:
        return sorted({y for y, _ in self._flow_index})

    @property
    def sectors(self) -> list[str]:
        return [s for s in SECTORS if any(k[1] == s for k in self._flow_index)]

    @property
    def pairs(self) -> list[tuple[str, str]]:
        codes = self.iso3
        return [(a, b) for k, a in enumerate(codes) for b in codes[k + 1:]]

    def country(self, iso3: str) -> CountryRecord:
        return self.countries[self._index[iso3]]

    def distance(self, a: str, b: str) -> float:
        return float(self.distances[self._index[a], self._index[b]])

    def flows_for(self, year: int, sector: str) -> Mapping[tuple[str, str], float]:
        return self._flow_index.get((year, sector), {})

    def missing_macro(self) -> list[tuple[str, int]]:
        """(country, year) cells referenced by a flow but absent from macro."""
        needed = {(code, y) for (y, _), cell in self._flow_index.items() for p in cell for code in p}
        return sorted(k for k in needed if k not in self.macro)


def pair_observations(panel: PanelDataset, year: int, sector: str) -> list[PairObservation]:
    """One observation per unordered pair with a flow record for ``(year, sector)``.

    Pairs without a record are left out; nothing is imputed.  Dummies are
    evaluated at ``year``.
    """
    if sector not in SECTORS:
        raise ValueError(f"unknown sector {sector!r}")
    if year not in panel.years:
        raise ValueError(f"year {year} outside panel coverage {panel.years[:1]}..{panel.years[-1:]}")
    cell = panel.flows_for(year, sector)
    out = []
    for i, j in sorted(cell):
        try:
            mi, mj = panel.macro[(i, year)], panel.macro[(j, year)]
        except KeyError as exc:
            raise DataError(f"missing macro entry for {exc.args[0]}") from None
        ci, cj = panel.country(i), panel.country(j)
        blocs = panel.memberships.shared_blocs(i, j, year)
        out.append(
            PairObservation(
                year=year,
                i=i,
                j=j,
                sector=sector,
                trade_value=cell[(i, j)],
                gdp_i=mi.gdp,
                gdp_j=mj.gdp,
                pop_i=mi.population,
                pop_j=mj.population,
                distance_km=panel.distance(i, j),
                adjacent=int(panel.adjacency.adjacent(i, j)),
                same_language=int(bool(ci.languages & cj.languages)),
                shared_free_trade=int(bool(blocs)),
                shared_blocs=blocs,
            )
        )
    return out


# -- CSV ingestion -----------------------------------------------------------


def _rows(path: Path, table: str):
    """Yield ``(source, row)`` with ``source`` as ``"file:line"``."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {table} table: {exc.strerror}", str(path)) from None
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in SCHEMAS[table] if c not in header]
        if missing:
            raise DataError(f"missing columns {missing}", f"{path}:1")
        for row in reader:
            yield f"{path}:{reader.line_num}", row


def _num(row, key, source, kind=float):
    raw = (row.get(key) or "").strip()
    try:
        value = kind(raw)
    except ValueError:
        raise DataError(f"cannot parse {key}={raw!r}", source) from None
    if kind is float and not math.isfinite(value):
        raise DataError(f"non-finite {key}={raw!r}", source)
    return value


def _read_countries(path, cities_path):
    cities: dict[str, list[City]] = {}
    if cities_path is not None:
        for src, row in _rows(cities_path, "cities"):
            lat, lon = _num(row, "lat", src), _num(row, "lon", src)
            try:
                GeoPoint(lat, lon)
            except ValueError as exc:
                raise DataError(str(exc), src) from None
            cities.setdefault(row["iso3"].strip(), []).append(
                City(row["city"].strip(), lat, lon, _num(row, "gdp_share", src))
            )
    out, seen = [], set()
    for src, row in _rows(path, "countries"):
        code = row["iso3"].strip()
        if code in seen:
            raise DataError(f"duplicate country {code}", src)
        seen.add(code)
        langs = frozenset(x.strip() for x in (row["languages"] or "").split(";") if x.strip())
        try:
            out.append(
                CountryRecord(
                    iso3=code,
                    name=row["name"].strip(),
                    capital_lat=_num(row, "capital_lat", src),
                    capital_lon=_num(row, "capital_lon", src),
                    cities=tuple(cities.pop(code, ())),
                    languages=langs,
                )
            )
        except ValueError as exc:
            raise DataError(str(exc), src) from None
    if cities:
        raise DataError(f"cities listed for unknown countries {sorted(cities)}", str(cities_path))
    return out


def _read_flows(path, known):
    flows, seen = [], {}
    for src, row in _rows(path, "flows"):
        year = _num(row, "year", src, int)
        rep, par = row["reporter"].strip(), row["partner"].strip()
        sector = row["sector"].strip()
        value = _num(row, "value_usd", src)
        for code in (rep, par):
            if code not in known:
                raise DataError(f"flow names unknown country {code}", src)
        if rep == par:
            raise DataError(f"reporter equals partner ({rep})", src)
        if sector not in SECTORS:
            raise DataError(f"unknown sector {sector!r}", src)
        if value < 0:
            raise DataError(f"negative flow value {value} for {year} {rep}-{par} {sector}", src)
        rec = FlowRecord(year, rep, par, sector, value)
        key = (year, rec.pair, sector)
        if key in seen:
            raise DataError(f"duplicate flow for {year} {rec.pair[0]}-{rec.pair[1]} {sector} (first at {seen[key]})", src)
        seen[key] = src
        flows.append(rec)
    return flows


def _read_macro(path, known):
    macro = {}
    for src, row in _rows(path, "macro"):
        year, code = _num(row, "year", src, int), row["iso3"].strip()
        if code not in known:
            raise DataError(f"macro entry names unknown country {code}", src)
        gdp, pop = _num(row, "gdp_usd", src), _num(row, "population", src)
        if gdp <= 0 or pop <= 0:
            raise DataError(f"gdp and population must be positive for {code} {year}", src)
        if (code, year) in macro:
            raise DataError(f"duplicate macro entry for {code} {year}", src)
        macro[(code, year)] = MacroEntry(gdp, pop)
    return macro


def _read_memberships(path, known):
    rows, covered = [], set()
    for src, row in _rows(path, "memberships"):
        bloc, code = row["bloc"].strip(), row["iso3"].strip()
        start, end = _num(row, "year_start", src, int), _num(row, "year_end", src, int)
        if code not in known:
            raise DataError(f"membership names unknown country {code}", src)
        if start > end:
            raise DataError(f"year_start {start} after year_end {end}", src)
        for y in range(start, end + 1):
            if (bloc, code, y) in covered:
                raise DataError(f"{code} listed twice in {bloc} for {y}", src)
            covered.add((bloc, code, y))
        rows.append(Membership(bloc, code, start, end))
    rows.sort(key=lambda m: (m.bloc, m.iso3, m.year_start))
    return MembershipTable(tuple(rows))


def _read_adjacency(path, known):
    pairs = []
    for src, row in _rows(path, "adjacency"):
        a, b = row["iso3_a"].strip(), row["iso3_b"].strip()
        for code in (a, b):
            if code not in known:
                raise DataError(f"adjacency names unknown country {code}", src)
        if a == b:
            raise DataError(f"country {a} adjacent to itself", src)
        pairs.append((a, b))
    return AdjacencyTable.from_pairs(pairs)


def read_oil(path):
    prices = {}
    for src, row in _rows(path, "oil"):
        year, price = _num(row, "year", src, int), _num(row, "price_usd_per_barrel", src)
        if price <= 0:
            raise DataError(f"oil price must be positive, got {price}", src)
        if year in prices:
            raise DataError(f"duplicate oil price for {year}", src)
        prices[year] = price
    return OilSeries(dict(sorted(prices.items())))


def resolve_paths(paths) -> dict[str, Path | None]:
    """Map table names to files.

    ``paths`` is either a directory holding ``<table>.csv`` files or a
    mapping from table name to file path.
    """
    if isinstance(paths, (str, os.PathLike)):
        root = Path(paths)
        if not root.is_dir():
            raise DataError(f"data directory {root} does not exist")
        paths = {t: root / f"{t}.csv" for t in SCHEMAS}
    out = {}
    for table in SCHEMAS:
        p = paths.get(table)
        p = Path(p) if p is not None else None
        if p is None or not p.exists():
            if table in OPTIONAL_TABLES:
                out[table] = None
                continue
            raise DataError(f"required table {table!r} not found" + (f" at {p}" if p else ""))
        out[table] = p
    return out


def load_panel(paths, distance_measure: str = "capital") -> PanelDataset:
    """Read, validate and cross-reference a panel from CSV files.

    Raises
    ------
    DataError
        On parse errors, dangling references, negative flows or invalid
        coordinates.  The message starts with ``file:line`` when the
        problem belongs to one record.
    """
    if distance_measure not in DISTANCE_MEASURES:
        raise ValueError(f"unknown distance measure {distance_measure!r}")
    files = resolve_paths(paths)
    countries = _read_countries(files["countries"], files["cities"])
    known = {c.iso3 for c in countries}
    if distance_measure == "weighted_city":
        bare = [c.iso3 for c in countries if not c.cities]
        if bare:
            raise DataError(
                f"weighted_city distance needs city lists; missing for {bare} "
                "(use distance_measure='capital')"
            )
    return PanelDataset(
        countries=tuple(countries),
        macro=_read_macro(files["macro"], known),
        flows=tuple(_read_flows(files["flows"], known)),
        memberships=_read_memberships(files["memberships"], known),
        adjacency=_read_adjacency(files["adjacency"], known),
        oil=read_oil(files["oil"]),
        distance_measure=distance_measure,
    )


def _fmt(x: float) -> str:
    return repr(float(x)) if not float(x).is_integer() or abs(x) >= 1e16 else str(int(x))


def write_panel(panel: PanelDataset, directory) -> dict[str, Path]:
    """Write ``panel`` in the CSV schemas read by :func:`load_panel`."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    tables = {
        "countries": [
            (c.iso3, c.name, repr(c.capital_lat), repr(c.capital_lon), ";".join(sorted(c.languages)))
            for c in panel.countries
        ],
        "flows": [(f.year, f.reporter, f.partner, f.sector, _fmt(f.value)) for f in panel.flows],
        "macro": [
            (y, code, _fmt(m.gdp), _fmt(m.population))
            for (code, y), m in sorted(panel.macro.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        ],
        "memberships": [(m.bloc, m.iso3, m.year_start, m.year_end) for m in panel.memberships.rows],
        "adjacency": sorted(panel.adjacency.pairs),
        "oil": [(y, repr(panel.oil[y])) for y in panel.oil.years],
    }
    city_rows = [
        (c.iso3, city.name, repr(city.lat), repr(city.lon), repr(city.gdp_share))
        for c in panel.countries
        for city in c.cities
    ]
    if city_rows:
        tables["cities"] = city_rows
    written = {}
    for table, rows in tables.items():
        path = root / f"{table}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SCHEMAS[table])
            w.writerows(rows)
        written[table] = path
    return written


def bundled_path(name: str) -> Path:
    """Path of a CSV shipped in the package ``data`` directory."""
    return Path(str(resources.files("gravity_distance") / "data" / name))


def bundled_tables() -> dict:
    """Countries, memberships, adjacency and oil prices shipped with the package.

    Covers the ten-country sample (USA, CHN, DEU, RUS, ZAF, NOR, BRA, ITA,
    AUT, CAN).  No trade or macro data is bundled.
    """
    countries = _read_countries(bundled_path("countries.csv"), None)
    known = {c.iso3 for c in countries}
    return {
        "countries": countries,
        "memberships": _read_memberships(bundled_path("memberships.csv"), known),
        "adjacency": _read_adjacency(bundled_path("adjacency.csv"), known),
        "oil": read_oil(bundled_path("oil.csv")),
    }
