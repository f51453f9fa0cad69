"""Distance-coefficient response to oil prices over sub-periods."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .dataset import OilSeries
from .harness import CoefficientSeries


class Undefined(NamedTuple):
    """Explicit no-value with the reason it could not be computed."""

    reason: str

    def __bool__(self):
        return False


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float | Undefined:
    """Pearson correlation, or :class:`Undefined` if either series is constant."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-d sequences of equal length")
    if len(x) < 2:
        raise ValueError("pearson needs at least two points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        which = "first" if sxx == 0 else "second"
        return Undefined(f"{which} series is constant")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class WindowSpec:
    windows: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for start, end in self.windows:
            if not start < end:
                raise ValueError(f"window {start}:{end} must have start < end")

    @classmethod
    def parse(cls, text: str) -> "WindowSpec":
        """``"1993:1995,1995:1998"`` -> two inclusive windows."""
        out = []
        for part in text.split(","):
            try:
                a, b = part.strip().split(":")
                out.append((int(a), int(b)))
            except ValueError:
                raise ValueError(f"bad window {part!r}; expected START:END") from None
        return cls(tuple(out))


class WindowResult(NamedTuple):
    start: int
    end: int
    delta_coef: float
    delta_oil: float
    ratio: float | Undefined
    r: float | Undefined
    years: int
    status: str = "ok"


@dataclass(frozen=True)
class SensitivityReport:
    sector: str
    estimator: str
    windows: tuple[WindowResult, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("sector", "estimator", "start", "end", "delta_coef", "delta_oil", "ratio", "pearson_r", "years", "status"))
        for r in self.windows:
            w.writerow(
                (
                    self.sector,
                    self.estimator,
                    r.start,
                    r.end,
                    _cell(r.delta_coef),
                    _cell(r.delta_oil),
                    _cell(r.ratio),
                    _cell(r.r),
                    r.years,
                    r.status,
                )
            )
        return buf.getvalue()

    def render(self) -> str:
        lines = [f"Oil-price sensitivity of the distance coefficient ({self.sector}, {self.estimator})"]
        for r in self.windows:
            if isinstance(r.ratio, Undefined):
                ratio = f"undefined ({r.ratio.reason})"
            else:
                ratio = f"{r.ratio:+.6f} per USD"
            corr = f"undefined ({r.r.reason})" if isinstance(r.r, Undefined) else f"{r.r:+.3f}"
            lines.append(
                f"  {r.start}-{r.end}: dcoef {_short(r.delta_coef)}, doil {_short(r.delta_oil)} USD/bbl, "
                f"ratio {ratio}, r {corr}, {r.years} years [{r.status}]"
            )
        return "\n".join(lines) + "\n"


def _cell(x) -> str:
    if isinstance(x, Undefined) or x is None or math.isnan(x):
        return ""
    return repr(round(float(x), 12))


def _short(x: float) -> str:
    return "n/a" if math.isnan(x) else f"{x:+.4f}"


def window_sensitivity(series: CoefficientSeries, oil: OilSeries, w: WindowSpec) -> SensitivityReport:
    """Endpoint changes and within-window co-movement for each window.

    ``delta_coef`` and ``delta_oil`` compare the two endpoint years; the
    correlation uses every year in the window with both a coefficient and an
    oil price.  A failed regression inside a window marks the window invalid.
    """
    covered = set(series.years)
    entries = {e.year: e for e in series.entries}
    out = []
    for start, end in w.windows:
        for y in (start, end):
            if y not in covered:
                raise ValueError(f"window {start}:{end} outside coefficient series coverage")
            if y not in oil:
                raise ValueError(f"window {start}:{end} outside oil series coverage")
        d_oil = round(oil[end] - oil[start], 10)
        inside = [entries[y] for y in range(start, end + 1) if y in entries]
        failed = [e.year for e in inside if not e.ok]
        if failed:
            out.append(
                WindowResult(start, end, math.nan, d_oil, Undefined("failed years"), Undefined("failed years"),
                             len(inside), f"invalid: failed years {failed}")
            )
            continue
        d_coef = entries[end].coef - entries[start].coef
        ratio = d_coef / d_oil if d_oil != 0 else Undefined("oil price unchanged")
        both = [e for e in inside if e.year in oil]
        if len(both) >= 2:
            r = pearson([e.coef for e in both], [oil[e.year] for e in both])
        else:
            r = Undefined("fewer than two years with both series")
        out.append(WindowResult(start, end, d_coef, d_oil, ratio, r, len(both)))
    return SensitivityReport(series.sector, series.estimator, tuple(out))
