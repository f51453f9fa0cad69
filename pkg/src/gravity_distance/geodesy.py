"""Great-circle distances between capitals and GDP-weighted city sets."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .dataset import CountryRecord

EARTH_RADIUS_KM = 6371.0088


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 < self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside (-180, 180]")


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in km on a sphere of mean Earth radius.

    The haversine term is symmetrised before the square root so that
    ``haversine_km(a, b) == haversine_km(b, a)`` holds bit for bit.
    """
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlmb = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2.0) ** 2
    h = min(1.0, max(0.0, h))
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(h))


def capital_distance(a: CountryRecord, b: CountryRecord) -> float:
    if a.iso3 == b.iso3:
        return 0.0
    return haversine_km(a.capital, b.capital)


def _merged_cities(country: CountryRecord) -> list[tuple[GeoPoint, float]]:
    # repeated coordinates are merged so duplicate listings cannot change the sum order
    weights: dict[GeoPoint, float] = {}
    for city in country.cities:
        weights[city.point] = weights.get(city.point, 0.0) + city.gdp_share
    return sorted(weights.items(), key=lambda kv: (kv[0].lat, kv[0].lon))


def weighted_city_distance(a: CountryRecord, b: CountryRecord) -> float:
    """Expected great-circle distance between two countries' economic mass.

    Each country's activity is spread over its listed cities with the given
    GDP shares; the result is ``sum_p sum_q w_p w_q d(city_p, city_q)``.

    Raises
    ------
    ValueError
        If either country has no city list; use :func:`capital_distance`
        for such countries instead.
    """
    for c in (a, b):
        if not c.cities:
            raise ValueError(
                f"country {c.iso3} has no city list; fall back to capital_distance"
            )
    ca, cb = _merged_cities(a), _merged_cities(b)
    # order the two operands canonically so d(a, b) and d(b, a) add the same terms
    if a.iso3 > b.iso3:
        ca, cb = cb, ca
    total = 0.0
    for p, wp in ca:
        for q, wq in cb:
            total += wp * wq * haversine_km(p, q)
    return total


def distance_matrix(countries, measure: str = "capital") -> np.ndarray:
    """Symmetric pairwise distance matrix (km) with a zero diagonal."""
    if measure == "capital":
        fn = capital_distance
    elif measure == "weighted_city":
        fn = weighted_city_distance
    else:
        raise ValueError(f"unknown distance measure {measure!r}")
    n = len(countries)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = fn(countries[i], countries[j])
    return out
