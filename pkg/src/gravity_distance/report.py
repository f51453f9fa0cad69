"""Tidy chart-data export for coefficient and oil-price series."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable

from .dataset import OilSeries
from .harness import CoefficientSeries

OIL_VARIABLE = "oil_price"


def series_variable(s: CoefficientSeries) -> str:
    return f"{s.sector}_{s.estimator}_distance_coef"


def emit_chart_data(series_set: Iterable[CoefficientSeries], oil: OilSeries | None, path) -> Path:
    """Write ``year,variable,value`` rows for every series entry and oil year.

    Failed years are written with an empty value cell.
    """
    series_set = list(series_set)
    if not series_set or not any(s.entries for s in series_set):
        raise ValueError("no series to emit")
    path = Path(path)
    try:
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write chart data to {path}: {exc.strerror}") from None
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("year", "variable", "value"))
        for s in series_set:
            name = series_variable(s)
            for e in s.entries:
                w.writerow((e.year, name, "" if math.isnan(e.coef) else repr(e.coef)))
        if oil is not None:
            for y in oil.years:
                w.writerow((y, OIL_VARIABLE, repr(oil[y])))
    return path


def read_chart_data(path) -> dict[str, dict[int, float]]:
    """Inverse of :func:`emit_chart_data`; blank cells come back as NaN."""
    out: dict[str, dict[int, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            value = float(row["value"]) if row["value"] else math.nan
            out.setdefault(row["variable"], {})[int(row["year"])] = value
    return out
