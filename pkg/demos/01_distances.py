"""Pair distances for the bundled ten-country panel.

Prints the capital-to-capital great-circle distances and the closest and
farthest pairs, then shows how the GDP-weighted city measure differs from
the capital measure for a country with two listed cities.
"""

from gravity_distance.dataset import City, CountryRecord, bundled_tables
from gravity_distance.geodesy import capital_distance, distance_matrix, weighted_city_distance


def main():
    countries = sorted(bundled_tables()["countries"], key=lambda c: c.iso3)
    codes = [c.iso3 for c in countries]
    D = distance_matrix(countries, "capital")

    print("capital distances (km)")
    print("     " + "".join(f"{c:>8}" for c in codes))
    for code, row in zip(codes, D):
        print(f"{code:<5}" + "".join(f"{v:8.0f}" for v in row))

    pairs = [(D[a, b], codes[a], codes[b]) for a in range(len(codes)) for b in range(a)]
    near, far = min(pairs), max(pairs)
    print(f"\n{len(pairs)} pairs; closest {near[1]}-{near[2]} {near[0]:.0f} km, farthest {far[1]}-{far[2]} {far[0]:.0f} km")

    # Two-city countries: economic mass is spread away from the capital
    a = CountryRecord("USA", "United States", 38.90, -77.04,
                      cities=(City("New York", 40.71, -74.01, 0.6), City("Los Angeles", 34.05, -118.24, 0.4)))
    b = CountryRecord("DEU", "Germany", 52.52, 13.40,
                      cities=(City("Frankfurt", 50.11, 8.68, 0.5), City("Munich", 48.14, 11.58, 0.5)))
    print(f"\nUSA-DEU capital measure      {capital_distance(a, b):8.0f} km")
    print(f"USA-DEU weighted-city measure {weighted_city_distance(a, b):8.0f} km")


if __name__ == "__main__":
    main()
