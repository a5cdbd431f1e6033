"""Spherical geometry: great-circle distance, the compact influence kernel,
and a latitude-banded grid index for bandwidth range queries.

The grid is a candidate prefilter only. Callers must apply the exact
distance predicate to whatever `nearby` returns.
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

EARTH_RADIUS_M = 6_371_000.0
# meters per degree of latitude on the reference sphere
M_PER_DEG_LAT = math.pi * EARTH_RADIUS_M / 180.0
# cos(latitude) is clamped away from zero near the poles so longitude cell
# widths stay finite
_MIN_COS = 0.01
# slack on longitude cell width; covers the sin(x) ~ x shortfall for the
# small angular spans used here
_LON_SLACK = 1.02


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters between two lat/lon points (degrees)."""
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    # clamp guards rounding at antipodes
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def haversine_m_many(
    lats: np.ndarray, lons: np.ndarray, lat: float, lon: float
) -> np.ndarray:
    """Great-circle distances in meters from one point to an array of points.

    Same formula as haversine_m; results may differ from the scalar path in
    the last ulp, so callers must not mix the two on the same comparison.
    """
    p1 = np.radians(lats)
    p2 = math.radians(lat)
    dp = p2 - p1
    dl = math.radians(lon) - np.radians(lons)
    a = np.sin(dp / 2.0) ** 2 + np.cos(p1) * math.cos(p2) * np.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(a)))


def epanechnikov(dist_m: float, bandwidth_m: float) -> float:
    """Compact parabolic kernel: 1 - (d/h)^2 inside the bandwidth, else 0.

    Strictly positive iff dist_m < bandwidth_m.
    """
    if bandwidth_m <= 0.0:
        raise ValueError("bandwidth must be positive")
    u = dist_m / bandwidth_m
    if u >= 1.0:
        return 0.0
    return 1.0 - u * u


class GridIndex:
    """Point index with cells sized to one bandwidth.

    Rows are latitude bands of height bandwidth; within a band, cell width is
    the bandwidth converted to longitude degrees at the band edge nearest the
    pole, so scanning the 3x3 block around a point always yields a superset
    of the true bandwidth disc. Longitude cells wrap modulo the band size, so
    the antimeridian needs no special casing.
    """

    def __init__(self, bandwidth_m: float) -> None:
        if bandwidth_m <= 0.0:
            raise ValueError("bandwidth must be positive")
        self.bandwidth_m = float(bandwidth_m)
        self._dlat_deg = bandwidth_m / M_PER_DEG_LAT
        # (band, cell) -> {key: None}; plain dicts keep insertion order so
        # iteration is reproducible across processes
        self._cells: dict[tuple[int, int], dict[str, None]] = {}
        self._where: dict[str, tuple[int, int]] = {}

    def __len__(self) -> int:
        return len(self._where)

    def __contains__(self, key: str) -> bool:
        return key in self._where

    def _band(self, lat: float) -> int:
        return math.floor(lat / self._dlat_deg)

    def _band_geometry(self, band: int) -> tuple[float, int]:
        """Longitude cell width (degrees) and cell count for a band."""
        edge = max(abs(band * self._dlat_deg), abs((band + 1) * self._dlat_deg))
        cos_edge = max(math.cos(math.radians(min(edge, 90.0))), _MIN_COS)
        dlon = _LON_SLACK * self.bandwidth_m / (M_PER_DEG_LAT * cos_edge)
        if dlon >= 360.0:
            return 360.0, 1
        return dlon, max(1, math.floor(360.0 / dlon))

    def _cell(self, lat: float, lon: float) -> tuple[int, int]:
        band = self._band(lat)
        dlon, n = self._band_geometry(band)
        # normalize into [0, 360) then bucket; modulo keeps the seam closed
        col = math.floor(((lon % 360.0) + 360.0) % 360.0 / dlon) % n
        return band, col

    def add(self, key: str, lat: float, lon: float) -> None:
        if key in self._where:
            raise KeyError(f"duplicate key {key!r}")
        cell = self._cell(lat, lon)
        self._cells.setdefault(cell, {})[key] = None
        self._where[key] = cell

    def remove(self, key: str) -> None:
        cell = self._where.pop(key)
        bucket = self._cells[cell]
        del bucket[key]
        if not bucket:
            del self._cells[cell]

    def nearby(self, lat: float, lon: float) -> Iterator[str]:
        """Keys in the 3x3 cell block around (lat, lon).

        Superset of all indexed points within one bandwidth; callers filter
        with the exact distance.
        """
        band0 = self._band(lat)
        for band in (band0 - 1, band0, band0 + 1):
            dlon, n = self._band_geometry(band)
            col0 = math.floor(((lon % 360.0) + 360.0) % 360.0 / dlon) % n
            if n <= 3:
                cols = range(n)
            else:
                cols = ((col0 - 1) % n, col0, (col0 + 1) % n)
            for col in cols:
                bucket = self._cells.get((band, col))
                if bucket:
                    yield from bucket
