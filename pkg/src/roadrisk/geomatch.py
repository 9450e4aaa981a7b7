"""Spatial matching: KNN joins, hotspot filtering, dataset assembly and splitting."""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from .domain import (
    Car2XEvent,
    FeatureRecord,
    RoadSegment,
    TrafficRecord,
    TrainingSplit,
    WeatherObservation,
    local_time_parts,
    solar_elevation_deg,
)

EARTH_RADIUS_M = 6_371_000.0
_DEG = math.pi / 180.0

DEFAULT_WEATHER_STALENESS_S = 3 * 3600
DEFAULT_TRAFFIC_STALENESS_S = 1 * 3600
DEFAULT_HOTSPOT_CELL_DEG = 0.01
DEFAULT_HOTSPOT_Z = 6.0


class GeomatchError(ValueError):
    """Raised for unusable inputs to the matching stage."""


class DataIntegrityError(GeomatchError):
    """Raised when a store contradicts itself (e.g. one tile at two locations)."""


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters on a sphere of radius 6,371,000 m."""
    phi1 = lat1 * _DEG
    phi2 = lat2 * _DEG
    dphi = (lat2 - lat1) * _DEG
    dlmb = (lon2 - lon1) * _DEG
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def _haversine_to_many(lat: float, lon: float, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    phi = lat * _DEG
    phis = lats * _DEG
    dphi = (lats - lat) * _DEG
    dlmb = (lons - lon) * _DEG
    a = np.sin(dphi / 2.0) ** 2 + math.cos(phi) * np.cos(phis) * np.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(a)))


class SpatialIndex:
    """Immutable nearest-neighbor index over (identifier, lat, lon) points.

    Small point sets are scanned directly; larger ones go through a uniform
    lat/lon grid searched in expanding rings. A ring is only skipped once
    its guaranteed minimum distance exceeds the current k-th best, so grid
    results are always identical to a brute-force scan. Distance ties break
    toward the smaller identifier.
    """

    BRUTE_FORCE_LIMIT = 256

    def __init__(self, points):
        pts = list(points)
        self._ids = [str(p[0]) for p in pts]
        self._lats = np.array([float(p[1]) for p in pts])
        self._lons = np.array([float(p[2]) for p in pts])
        self._n = len(pts)
        self._grid = None
        if self._n >= self.BRUTE_FORCE_LIMIT:
            self._build_grid()

    def __len__(self) -> int:
        return self._n

    def _build_grid(self):
        lat_span = float(self._lats.max() - self._lats.min())
        lon_span = float(self._lons.max() - self._lons.min())
        # aim for about one point per cell
        cell = math.sqrt(max(lat_span, 1e-9) * max(lon_span, 1e-9) / self._n)
        self._cell = max(cell, 1e-9)
        rows = np.floor(self._lats / self._cell).astype(np.int64)
        cols = np.floor(self._lons / self._cell).astype(np.int64)
        grid: dict[tuple[int, int], list[int]] = defaultdict(list)
        for i in range(self._n):
            grid[(int(rows[i]), int(cols[i]))].append(i)
        self._grid = {key: np.array(val, dtype=np.int64) for key, val in grid.items()}
        self._row_range = (int(rows.min()), int(rows.max()))
        self._col_range = (int(cols.min()), int(cols.max()))
        max_abs_lat = float(np.abs(self._lats).max())
        self._max_abs_lat = max_abs_lat

    def nearest(self, lat: float, lon: float, k: int = 1) -> list[str]:
        """Identifiers of the k nearest points, ordered by (distance, identifier)."""
        if self._n == 0:
            raise GeomatchError("nearest() on an empty spatial index")
        if k < 1:
            raise ValueError("k must be >= 1")
        if self._grid is None:
            dists = _haversine_to_many(lat, lon, self._lats, self._lons)
            return self._pick(dists, np.arange(self._n), k)
        return self._nearest_grid(lat, lon, k)

    def _pick(self, dists: np.ndarray, idx: np.ndarray, k: int) -> list[str]:
        order = sorted(range(len(idx)), key=lambda i: (dists[i], self._ids[idx[i]]))
        return [self._ids[idx[i]] for i in order[:k]]

    def _ring_cells(self, qr: int, qc: int, r: int):
        r_lo, r_hi = self._row_range
        c_lo, c_hi = self._col_range
        if r == 0:
            yield (qr, qc)
            return
        for col in range(max(qc - r, c_lo), min(qc + r, c_hi) + 1):
            if r_lo <= qr - r <= r_hi:
                yield (qr - r, col)
            if r_lo <= qr + r <= r_hi:
                yield (qr + r, col)
        for row in range(max(qr - r + 1, r_lo), min(qr + r - 1, r_hi) + 1):
            if c_lo <= qc - r <= c_hi:
                yield (row, qc - r)
            if c_lo <= qc + r <= c_hi:
                yield (row, qc + r)

    def _nearest_grid(self, lat: float, lon: float, k: int) -> list[str]:
        qr = int(math.floor(lat / self._cell))
        qc = int(math.floor(lon / self._cell))
        # a point in ring r is at least (r-1) cells away along one axis;
        # latitude arcs are exact, longitude arcs carry the conservative
        # (2/pi) * cos(max |lat|) factor, so this lower bound never
        # overestimates and ring expansion stays exact
        cos_min = math.cos(min(89.999, max(self._max_abs_lat, abs(lat))) * _DEG)
        meters_per_cell = self._cell * _DEG * EARTH_RADIUS_M * min(1.0, (2.0 / math.pi) * cos_min)
        max_ring = max(
            abs(qr - self._row_range[0]), abs(qr - self._row_range[1]),
            abs(qc - self._col_range[0]), abs(qc - self._col_range[1]),
        )
        found: list[tuple[float, str]] = []
        r = 0
        while r <= max_ring:
            hits = [self._grid[cell] for cell in self._ring_cells(qr, qc, r) if cell in self._grid]
            if hits:
                idx = np.concatenate(hits)
                dists = _haversine_to_many(lat, lon, self._lats[idx], self._lons[idx])
                found.extend((dists[i], self._ids[idx[i]]) for i in range(len(idx)))
                found.sort()
                del found[k:]
            r += 1
            if len(found) >= k and meters_per_cell > 0:
                bound = (r - 1) * meters_per_cell
                if found[k - 1][0] <= bound:
                    break
        return [ident for _, ident in found[:k]]


def extract_unique_tiles(weather) -> list[tuple[str, float, float]]:
    """One (tile_id, lat, lon) entry per distinct tile, in first-seen order."""
    seen: dict[str, tuple[float, float]] = {}
    out = []
    for obs in weather:
        loc = (obs.tile_latitude, obs.tile_longitude)
        prev = seen.get(obs.tile_id)
        if prev is None:
            seen[obs.tile_id] = loc
            out.append((obs.tile_id, loc[0], loc[1]))
        elif prev != loc:
            raise DataIntegrityError(
                f"tile {obs.tile_id} reported at {prev} and {loc}"
            )
    return out


@dataclass(frozen=True)
class HotspotCell:
    """One grid cell flagged for implausible event aggregation."""

    row: int
    col: int
    count: int
    reason: str


@dataclass(frozen=True)
class HotspotReport:
    cell_size_deg: float
    z_threshold: float
    mean_count: float
    std_count: float
    cells: tuple[HotspotCell, ...]
    cell_counts: dict

    def flagged(self) -> set[tuple[int, int]]:
        return {(c.row, c.col) for c in self.cells}


def grid_cell(lat: float, lon: float, cell_size_deg: float) -> tuple[int, int]:
    return (int(math.floor(lat / cell_size_deg)), int(math.floor(lon / cell_size_deg)))


def detect_hotspots(
    events,
    cell_size_deg: float = DEFAULT_HOTSPOT_CELL_DEG,
    z_threshold: float = DEFAULT_HOTSPOT_Z,
) -> HotspotReport:
    """Flag grid cells whose event count exceeds mean + z * stddev.

    Statistics run over the non-empty cells (population stddev); fewer than
    two non-empty cells leave them undefined and raise.
    """
    if cell_size_deg <= 0:
        raise GeomatchError("cell_size_deg must be > 0")
    counts: Counter = Counter(grid_cell(e.latitude, e.longitude, cell_size_deg) for e in events)
    if len(counts) < 2:
        raise GeomatchError("hotspot statistics need at least 2 non-empty cells")
    values = np.array(list(counts.values()), dtype=float)
    mean = float(values.mean())
    std = float(values.std())
    threshold = mean + z_threshold * std
    cells = tuple(
        HotspotCell(
            row=row, col=col, count=n,
            reason=f"count {n} > mean {mean:.2f} + {z_threshold:g} * std {std:.2f}",
        )
        for (row, col), n in sorted(counts.items())
        if n > threshold
    )
    return HotspotReport(
        cell_size_deg=cell_size_deg,
        z_threshold=z_threshold,
        mean_count=mean,
        std_count=std,
        cells=cells,
        cell_counts=dict(counts),
    )


def heatmap_rows(report: HotspotReport) -> list[tuple[float, float, int]]:
    """Non-empty cells as (center_lat, center_lon, count), row-major order."""
    half = report.cell_size_deg / 2.0
    return [
        (row * report.cell_size_deg + half, col * report.cell_size_deg + half, n)
        for (row, col), n in sorted(report.cell_counts.items())
    ]


class MatchFailure(Exception):
    """A single event could not be joined; `reason` names the missing side."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class ConditionMatcher:
    """Joins one position/timestamp to its road, traffic and weather context.

    This is the single matching path: bulk assembly iterates it over all
    events and the prediction service calls it per request, so both see
    identical join semantics. Temporal matching picks the latest record
    at or before the query time, within a staleness cap.
    """

    def __init__(
        self,
        weather,
        roads,
        traffic,
        *,
        weather_staleness_s: int = DEFAULT_WEATHER_STALENESS_S,
        traffic_staleness_s: int = DEFAULT_TRAFFIC_STALENESS_S,
    ):
        roads = list(roads)
        if not roads:
            raise GeomatchError("no road segments loaded")
        tiles = extract_unique_tiles(weather)
        if not tiles:
            raise GeomatchError("no weather tiles loaded")
        self.weather_staleness_s = weather_staleness_s
        self.traffic_staleness_s = traffic_staleness_s
        self._road_index = SpatialIndex(
            (seg.segment_code, seg.center_latitude, seg.center_longitude) for seg in roads
        )
        self._tile_index = SpatialIndex(tiles)
        self._frc = {seg.segment_code: seg.frc_level for seg in roads}
        self._traffic = self._group(traffic, key="segment_code")
        self._weather = self._group(weather, key="tile_id")
        self.latest_traffic_ts = max((t.timestamp for t in self._iter_all(self._traffic)), default=None)
        self.latest_weather_ts = max((w.timestamp for w in self._iter_all(self._weather)), default=None)

    @staticmethod
    def _group(records, key: str) -> dict[str, tuple[list[int], list]]:
        grouped: dict[str, list] = defaultdict(list)
        for rec in records:
            grouped[getattr(rec, key)].append(rec)
        out = {}
        for ident, recs in grouped.items():
            recs.sort(key=lambda r: r.timestamp)
            out[ident] = ([r.timestamp for r in recs], recs)
        return out

    @staticmethod
    def _iter_all(grouped):
        for _, recs in grouped.values():
            yield from recs

    @staticmethod
    def _latest_at_or_before(bucket, ts: float, staleness_s: int):
        if bucket is None:
            return None
        stamps, recs = bucket
        i = bisect_right(stamps, ts) - 1
        if i < 0 or ts - stamps[i] > staleness_s:
            return None
        return recs[i]

    def match(self, latitude: float, longitude: float, timestamp: float):
        """Return (traffic_record, frc_level, weather_observation) or raise MatchFailure."""
        segment = self._road_index.nearest(latitude, longitude, k=1)[0]
        traffic = self._latest_at_or_before(
            self._traffic.get(segment), timestamp, self.traffic_staleness_s
        )
        if traffic is None:
            raise MatchFailure("no_traffic")
        tile = self._tile_index.nearest(latitude, longitude, k=1)[0]
        weather = self._latest_at_or_before(
            self._weather.get(tile), timestamp, self.weather_staleness_s
        )
        if weather is None:
            raise MatchFailure("no_weather")
        return traffic, self._frc[segment], weather

    def feature_record(
        self, event_id: str, label: bool, latitude: float, longitude: float, timestamp: float
    ) -> FeatureRecord:
        traffic, frc, weather = self.match(latitude, longitude, timestamp)
        tod, dow, doy = local_time_parts(timestamp, longitude)
        return FeatureRecord(
            event_id=event_id,
            label=label,
            air_temperature=weather.air_temperature,
            pavement_temperature=weather.pavement_temperature,
            air_pressure=weather.air_pressure,
            precipitation=weather.precipitation,
            visibility=weather.visibility,
            speed_current=traffic.speed_current,
            speed_monthly_avg=traffic.speed_monthly_avg,
            speed_reference=traffic.speed_reference,
            frc_level=frc,
            tod_seconds=tod,
            day_of_week=dow,
            day_of_year=doy,
            daylight=solar_elevation_deg(tod, doy, latitude) > 0.0,
        )


@dataclass(frozen=True)
class AssembleResult:
    records: list[FeatureRecord]
    dropped: dict[str, int]
    total_events: int

    @property
    def survival_rate(self) -> float:
        return len(self.records) / self.total_events if self.total_events else 0.0


def assemble(
    events,
    weather,
    roads,
    traffic,
    hotspots: HotspotReport | None = None,
    *,
    weather_staleness_s: int = DEFAULT_WEATHER_STALENESS_S,
    traffic_staleness_s: int = DEFAULT_TRAFFIC_STALENESS_S,
) -> AssembleResult:
    """Join every event to its conditions, dropping hotspot and unmatchable events."""
    matcher = ConditionMatcher(
        weather, roads, traffic,
        weather_staleness_s=weather_staleness_s,
        traffic_staleness_s=traffic_staleness_s,
    )
    flagged = hotspots.flagged() if hotspots is not None else set()
    cell = hotspots.cell_size_deg if hotspots is not None else None
    dropped: Counter = Counter()
    records = []
    events = sorted(events, key=lambda e: e.event_id)
    for ev in events:
        if flagged and grid_cell(ev.latitude, ev.longitude, cell) in flagged:
            dropped["hotspot"] += 1
            continue
        try:
            records.append(matcher.feature_record(
                ev.event_id, ev.is_emergency_braking, ev.latitude, ev.longitude, ev.timestamp
            ))
        except MatchFailure as fail:
            dropped[fail.reason] += 1
    return AssembleResult(records=records, dropped=dict(dropped), total_events=len(events))


@dataclass(frozen=True)
class SplitResult:
    train: TrainingSplit
    validation: tuple[FeatureRecord, ...]
    test: tuple[FeatureRecord, ...]


def split(records, ratios=(0.70, 0.15, 0.15), seed: int = 0) -> SplitResult:
    """Shuffle and partition records into train/validation/test.

    Validation and test sizes are ratio * n rounded half-up; the remainder
    goes to train.
    """
    records = list(records)
    if not records:
        raise GeomatchError("cannot split an empty dataset")
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise GeomatchError(f"need three non-negative ratios, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise GeomatchError(f"ratios must sum to 1, got {sum(ratios)}")
    n = len(records)
    n_val = int(math.floor(ratios[1] * n + 0.5))
    n_test = int(math.floor(ratios[2] * n + 0.5))
    n_train = n - n_val - n_test
    if n_train < 0:
        raise GeomatchError("rounded validation/test sizes exceed the dataset")
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(n)
    shuffled = [records[i] for i in order]
    return SplitResult(
        train=TrainingSplit(tuple(shuffled[:n_train])),
        validation=tuple(shuffled[n_train:n_train + n_val]),
        test=tuple(shuffled[n_train + n_val:]),
    )
