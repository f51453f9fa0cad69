"""Design matrices for the two gravity specifications.

``disaggregated`` regresses sector trade on log GDPs, log distance, three
0/1 dummies and the two populations; ``eq1_blocs`` uses the GNP product,
the per-capita product, adjacency and one dummy per regional bloc.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .dataset import SECTORS, PairObservation

SPECIFICATIONS = ("disaggregated", "eq1_blocs")
ESTIMATORS = ("ols", "ppml")
EQ1_BLOCS = ("EA", "EC", "NAFTA")
INTERCEPT = "_cons"

RESPONSE_LABELS = {
    "agriculture": "log_Agri",
    "manufacturing": "log_man",
    "services": "log_serv",
    "total": "log_trade",
}


@dataclass(frozen=True)
class ModelSpec:
    specification: str = "disaggregated"
    sector: str = "manufacturing"
    response: str = "log"
    population_mode: str = "level"
    zero_policy: str = "drop"
    estimator: str = "ols"

    def __post_init__(self):
        object.__setattr__(self, "estimator", self.estimator.lower())
        choices = {
            "specification": SPECIFICATIONS,
            "sector": SECTORS,
            "response": ("log", "level"),
            "population_mode": ("level", "log", "omit"),
            "zero_policy": ("drop", "keep"),
            "estimator": ESTIMATORS,
        }
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if self.response == "log" and self.zero_policy != "drop":
            raise ValueError("response='log' requires zero_policy='drop'")
        if self.estimator == "ppml" and self.response != "level":
            raise ValueError("estimator='ppml' requires response='level'")

    @classmethod
    def ppml(cls, **kw) -> "ModelSpec":
        kw.setdefault("zero_policy", "keep")
        return cls(response="level", estimator="ppml", **kw)

    def with_sector(self, sector: str) -> "ModelSpec":
        return replace(self, sector=sector)


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    column_labels: tuple[str, ...]
    rows: np.ndarray
    response: np.ndarray
    dropped_zero_count: int = 0
    pair_index: tuple[tuple[str, str, int], ...] = ()
    response_label: str = "y"

    def __post_init__(self):
        if len(set(self.column_labels)) != len(self.column_labels):
            raise ValueError(f"duplicate column labels in {self.column_labels}")
        X = np.asarray(self.rows, dtype=float)
        y = np.asarray(self.response, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.column_labels) or y.shape != (X.shape[0],):
            raise ValueError(f"inconsistent design shapes X{X.shape}, y{y.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("design contains non-finite entries")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "rows", X)
        object.__setattr__(self, "response", y)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def k(self) -> int:
        return self.rows.shape[1]

    def column(self, label: str) -> np.ndarray:
        return self.rows[:, self.column_labels.index(label)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("i", "j", "year", *self.column_labels, self.response_label))
        index = self.pair_index or (("", "", ""),) * self.n
        for (i, j, year), x, y in zip(index, self.rows, self.response):
            w.writerow((i, j, year, *map(repr, x.tolist()), repr(float(y))))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, dropped_zero_count: int = 0) -> "DesignMatrix":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        labels, response_label = tuple(header[3:-1]), header[-1]
        index, X, y = [], [], []
        for rec in reader:
            if rec[0]:
                index.append((rec[0], rec[1], int(rec[2])))
            X.append([float(v) for v in rec[3:-1]])
            y.append(float(rec[-1]))
        return cls(
            column_labels=labels,
            rows=np.array(X, dtype=float).reshape(len(y), len(labels)),
            response=np.array(y, dtype=float),
            dropped_zero_count=dropped_zero_count,
            pair_index=tuple(index),
            response_label=response_label,
        )


def _population_columns(obs, mode):
    if mode == "omit":
        return [], []
    pa = np.array([o.pop_i for o in obs], dtype=float)
    pb = np.array([o.pop_j for o in obs], dtype=float)
    if mode == "log":
        return ["log_populationa", "log_populationb"], [np.log(pa), np.log(pb)]
    return ["populationa", "populationb"], [pa, pb]


def build_design(obs: Sequence[PairObservation], spec: ModelSpec) -> DesignMatrix:
    """Build the regressor matrix and response for one year/sector cross-section.

    Zero flows are dropped (and counted) under ``zero_policy='drop'``;
    regressors are never rescaled so coefficients are in table units.
    """
    obs = list(obs)
    if not obs:
        raise ValueError("empty observation set")
    if len({(o.year, o.sector) for o in obs}) != 1:
        raise ValueError("observations must share one year and sector")
    for o in obs:
        if not (o.gdp_i > 0 and o.gdp_j > 0):
            raise ValueError(f"non-positive GDP for pair {o.i}-{o.j} in {o.year}")
        if not o.distance_km > 0:
            raise ValueError(f"non-positive distance for pair {o.i}-{o.j}")
        if o.trade_value < 0:
            raise ValueError(f"negative trade for pair {o.i}-{o.j} in {o.year}")
        if spec.population_mode != "omit" and not (o.pop_i > 0 and o.pop_j > 0):
            raise ValueError(f"non-positive population for pair {o.i}-{o.j} in {o.year}")

    dropped = 0
    zeros = [o for o in obs if o.trade_value == 0]
    if zeros:
        if spec.response == "log" and spec.zero_policy == "keep":
            raise ValueError("zero flows cannot enter a log response; use zero_policy='drop'")
        if spec.zero_policy == "drop":
            dropped = len(zeros)
            obs = [o for o in obs if o.trade_value > 0]
            if not obs:
                raise ValueError("every observation has zero trade")

    gi = np.array([o.gdp_i for o in obs], dtype=float)
    gj = np.array([o.gdp_j for o in obs], dtype=float)
    dist = np.array([o.distance_km for o in obs], dtype=float)
    ones = np.ones(len(obs))

    if spec.specification == "disaggregated":
        labels = [INTERCEPT, "log_gdpa", "log_gdpb", "log_dis", "adj", "samelanguage", "freetradezone"]
        cols = [
            ones,
            np.log(gi),
            np.log(gj),
            np.log(dist),
            np.array([o.adjacent for o in obs], dtype=float),
            np.array([o.same_language for o in obs], dtype=float),
            np.array([o.shared_free_trade for o in obs], dtype=float),
        ]
        plabels, pcols = _population_columns(obs, spec.population_mode)
        labels += plabels
        cols += pcols
    else:
        pi = np.array([o.pop_i for o in obs], dtype=float)
        pj = np.array([o.pop_j for o in obs], dtype=float)
        if not (np.all(pi > 0) and np.all(pj > 0)):
            raise ValueError("per-capita terms need positive populations")
        labels = [INTERCEPT, "log_gnp_product", "log_percap_product", "log_dis", "adjacent", *EQ1_BLOCS]
        cols = [
            ones,
            np.log(gi * gj),
            np.log((gi / pi) * (gj / pj)),
            np.log(dist),
            np.array([o.adjacent for o in obs], dtype=float),
            *(np.array([bloc in o.shared_blocs for o in obs], dtype=float) for bloc in EQ1_BLOCS),
        ]

    trade = np.array([o.trade_value for o in obs], dtype=float)
    y = np.log(trade) if spec.response == "log" else trade
    base = RESPONSE_LABELS[spec.sector]
    return DesignMatrix(
        column_labels=tuple(labels),
        rows=np.column_stack(cols),
        response=y,
        dropped_zero_count=dropped,
        pair_index=tuple((o.i, o.j, o.year) for o in obs),
        response_label=base if spec.response == "log" else base[4:],
    )


class ColumnSummary(NamedTuple):
    label: str
    min: float
    max: float
    mean: float
    zero_variance: bool
    exempt: bool


def column_summary(d: DesignMatrix) -> list[ColumnSummary]:
    """Per-column range and mean; constant columns are flagged.

    The intercept is constant by construction and carries ``exempt=True``.
    """
    if d.n == 0:
        raise ValueError("empty design")
    out = []
    for label, col in zip(d.column_labels, d.rows.T):
        lo, hi = float(col.min()), float(col.max())
        out.append(ColumnSummary(label, lo, hi, float(col.mean()), lo == hi, label == INTERCEPT))
    return out


def constant_columns(d: DesignMatrix) -> list[str]:
    """Labels of zero-variance columns other than the intercept."""
    return [s.label for s in column_summary(d) if s.zero_variance and not s.exempt]
