"""Year-by-year cross-section regressions and distance-coefficient series."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .dataset import DataError, PanelDataset, pair_observations
from .design import DesignMatrix, ModelSpec, build_design
from .estimators import EstimationError, FitResult, fit

DISTANCE_LABEL = "log_dis"
TRADE_SECTORS = ("agriculture", "manufacturing", "services")
SERIES_COLUMNS = ("year", "sector", "estimator", "coef", "se", "n", "dropped_zeros", "status")


class SeriesEntry(NamedTuple):
    year: int
    coef: float
    se: float
    n: int
    dropped_zero_count: int
    converged: bool
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True, eq=False)
class CoefficientSeries:
    """Distance coefficient by year for one sector and estimator.

    ``fits`` and ``designs`` keep the full per-year records; failed years
    appear as entries whose ``status`` carries the reason.
    """

    sector: str
    estimator: str
    entries: tuple[SeriesEntry, ...]
    fits: dict = field(default_factory=dict, repr=False)
    designs: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        years = [e.year for e in self.entries]
        if any(b <= a for a, b in zip(years, years[1:])):
            raise ValueError("series years must be strictly increasing")

    @property
    def years(self) -> list[int]:
        return [e.year for e in self.entries]

    def usable(self) -> list[SeriesEntry]:
        return [e for e in self.entries if e.ok]

    def entry(self, year: int) -> SeriesEntry:
        for e in self.entries:
            if e.year == year:
                return e
        raise KeyError(year)

    def values(self) -> np.ndarray:
        return np.array([e.coef for e in self.entries])


def _fail(year, reason, n=0, dropped=0):
    return SeriesEntry(year, math.nan, math.nan, n, dropped, False, f"failed: {reason}")


def fit_cross_section(panel: PanelDataset, spec: ModelSpec, year: int, **fit_kw):
    """Single-year regression; returns ``(entry, fit_or_None, design_or_None)``."""
    if year not in panel.years:
        return _fail(year, "no flow data for year"), None, None
    try:
        d = build_design(pair_observations(panel, year, spec.sector), spec)
    except (DataError, ValueError) as exc:
        return _fail(year, str(exc)), None, None
    try:
        f = fit(d, spec.estimator, **fit_kw)
    except EstimationError as exc:
        return _fail(year, str(exc), d.n, d.dropped_zero_count), None, d
    if DISTANCE_LABEL in f.labels:
        coef, se = f.coef(DISTANCE_LABEL), f.se(DISTANCE_LABEL)
    else:
        coef, se = math.nan, math.nan
    return SeriesEntry(year, coef, se, f.n, f.dropped_zero_count, f.converged), f, d


def run_cross_sections(
    panel: PanelDataset,
    spec: ModelSpec,
    years: Iterable[int],
    workers: int = 1,
    **fit_kw,
) -> CoefficientSeries:
    """One independent regression per year.

    With ``workers > 1`` years are fitted concurrently; the series is
    assembled in year order, so the output does not depend on scheduling.
    """
    years = sorted(set(years))
    if not years:
        raise ValueError("empty year range")

    def job(y):
        return fit_cross_section(panel, spec, y, **fit_kw)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, years))
    else:
        results = [job(y) for y in years]
    return CoefficientSeries(
        sector=spec.sector,
        estimator=spec.estimator,
        entries=tuple(r[0] for r in results),
        fits={y: r[1] for y, r in zip(years, results) if r[1] is not None},
        designs={y: r[2] for y, r in zip(years, results) if r[2] is not None},
    )


def run_sectors(panel, spec, years, sectors=TRADE_SECTORS, workers=1, **fit_kw):
    """Series for several sectors under one spec, keyed by sector."""
    return {s: run_cross_sections(panel, spec.with_sector(s), years, workers, **fit_kw) for s in sectors}


def fit_records(series_set: Iterable[CoefficientSeries]) -> dict[tuple[int, str, str], FitResult]:
    """All stored fits keyed by ``(year, sector, estimator)``."""
    return {(y, s.sector, s.estimator): f for s in series_set for y, f in s.fits.items()}


class SeriesSummary(NamedTuple):
    mean: float
    min: float
    max: float
    sign_change_years: list[int]
    first_differences: list[float]


def series_summary(s: CoefficientSeries) -> SeriesSummary:
    """Mean, range, sign flips and year-on-year changes over usable years.

    A sign change is recorded at year ``t`` when the coefficient at the
    previous usable year and at ``t`` have strictly opposite signs.
    """
    usable = s.usable()
    if not usable:
        raise ValueError("every year in the series failed")
    if len(usable) < 2:
        raise ValueError("need at least two usable years")
    coefs = [e.coef for e in usable]
    changes = [b.year for a, b in zip(usable, usable[1:]) if a.coef * b.coef < 0]
    diffs = [b - a for a, b in zip(coefs, coefs[1:])]
    return SeriesSummary(math.fsum(coefs) / len(coefs), min(coefs), max(coefs), changes, diffs)


def _cell(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def series_to_csv(series_set: Iterable[CoefficientSeries]) -> str:
    """CSV with columns ``year,sector,estimator,coef,se,n,dropped_zeros,status``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_COLUMNS)
    for s in series_set:
        for e in s.entries:
            w.writerow((e.year, s.sector, s.estimator, _cell(e.coef), _cell(e.se), e.n, e.dropped_zero_count, e.status))
    return buf.getvalue()


def series_from_csv(text: str) -> list[CoefficientSeries]:
    grouped: dict[tuple[str, str], list[SeriesEntry]] = {}
    for row in csv.DictReader(io.StringIO(text)):
        coef = float(row["coef"]) if row["coef"] else math.nan
        se = float(row["se"]) if row["se"] else math.nan
        entry = SeriesEntry(
            int(row["year"]), coef, se, int(row["n"]), int(row["dropped_zeros"]), row["status"] == "ok", row["status"]
        )
        grouped.setdefault((row["sector"], row["estimator"]), []).append(entry)
    return [CoefficientSeries(sec, est, tuple(entries)) for (sec, est), entries in grouped.items()]
