"""Deterministic synthetic feeds with a planted, recoverable risk signal.

All randomness flows from one 64-bit seed through numpy's PCG64 generator;
each store consumes an independent sub-stream (SeedSequence spawn keys), so
stores could be generated in parallel without changing a single byte.

Labels come from a logistic model over the conditions an event would be
matched to: P(emergency) = sigmoid(score + intercept), with the intercept
calibrated by bisection until the mean probability hits positive_fraction.
Scoring uses the same nearest-center/latest-at-or-before semantics as the
matching stage, so the planted correlations survive the pipeline intact.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .domain import Car2XEvent, RoadSegment, TrafficRecord, WeatherObservation
from .geomatch import _haversine_to_many
from .models.base import sigmoid

SECONDS_PER_HOUR = 3600
SECONDS_PER_DAY = 86400

# frc level -> reference speed (speed limit, km/h)
_REF_SPEED = {1: 110.0, 2: 80.0, 3: 50.0, 4: 30.0}
_FRC_WEIGHTS = (0.15, 0.25, 0.30, 0.30)

_EVENT_JITTER_DEG = 0.004


class DatagenError(ValueError):
    pass


@dataclass(frozen=True)
class HotspotSpec:
    """Extra events emitted at one exact coordinate (factory lots, depots)."""

    latitude: float
    longitude: float
    extra_event_count: int

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0 or not -180.0 <= self.longitude <= 180.0:
            raise DatagenError(f"hotspot coordinates out of range: "
                               f"({self.latitude}, {self.longitude})")
        if self.extra_event_count < 1:
            raise DatagenError(f"extra_event_count must be >= 1, got {self.extra_event_count}")


@dataclass(frozen=True)
class SignalStrengths:
    """Per-standard-deviation log-odds coefficients of the label model.

    warm_threshold_boost adds flat log-odds above 20 degC air temperature,
    afternoon_boost adds a Gaussian bump peaking at 16:00 local time, and
    wet_fast_boost / congestion_boost fire when the road is wet at near-limit
    speed or traffic has collapsed well below it.  The suppressions pull risk
    down in benign regimes: dry-cool-unhurried (calm), dry small-hours
    (night_dry), and dry low-pressure troughs (low_pressure).  Regime
    terms are invisible to a linear model but recoverable by threshold
    splits, which is what separates the tree ensembles from the baselines.
    """

    air_temperature: float = 0.32
    pavement_temperature: float = 0.05
    air_pressure: float = 0.58
    precipitation: float = -0.15
    visibility: float = 0.08
    speed_ratio: float = -0.15
    warm_threshold_boost: float = 0.30
    afternoon_boost: float = 0.35
    wet_fast_boost: float = 1.80
    calm_suppression: float = -1.85
    night_dry_suppression: float = -1.55
    congestion_boost: float = 1.25
    low_pressure_suppression: float = -0.90

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not math.isfinite(v):
                raise DatagenError(f"signal strength {name} must be finite, got {v!r}")


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 20180501
    n_events: int = 110_000
    positive_fraction: float = 0.10
    lat_min: float = 48.0
    lat_max: float = 49.2
    lon_min: float = 8.9
    lon_max: float = 11.9
    n_road_segments: int = 240
    n_weather_tiles: int = 96
    window_start: int = 1_525_132_800  # 2018-05-01T00:00:00Z
    window_days: int = 61
    hotspots: tuple[HotspotSpec, ...] = (
        HotspotSpec(48.708, 9.010, 2500),
        HotspotSpec(48.350, 11.450, 1500),
    )
    signal: SignalStrengths = field(default_factory=SignalStrengths)

    def __post_init__(self):
        if not 0.0 < self.positive_fraction < 1.0:
            raise DatagenError(f"positive_fraction must be in (0,1), got {self.positive_fraction}")
        for name in ("n_events", "n_road_segments", "n_weather_tiles", "window_days"):
            if getattr(self, name) < 1:
                raise DatagenError(f"{name} must be > 0, got {getattr(self, name)}")
        if not (self.lat_min < self.lat_max and self.lon_min < self.lon_max):
            raise DatagenError(
                f"degenerate bounding box: lat [{self.lat_min}, {self.lat_max}], "
                f"lon [{self.lon_min}, {self.lon_max}]"
            )
        object.__setattr__(self, "hotspots", tuple(self.hotspots))

    @property
    def n_hours(self) -> int:
        return self.window_days * 24

    @property
    def window_end(self) -> int:
        return self.window_start + self.window_days * SECONDS_PER_DAY


@dataclass(frozen=True)
class GeneratedStores:
    events: list[Car2XEvent]
    weather: list[WeatherObservation]
    roads: list[RoadSegment]
    traffic: list[TrafficRecord]


def _stream(seed: int, key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(key,))))


def tile_grid_shape(n_tiles: int, lat_span: float, lon_span: float) -> tuple[int, int]:
    """(rows, cols) with rows*cols == n_tiles, aspect closest to the box."""
    target = lon_span / lat_span
    best = None
    for rows in range(1, n_tiles + 1):
        if n_tiles % rows:
            continue
        cols = n_tiles // rows
        badness = abs(math.log(cols / rows) - math.log(target))
        if best is None or badness < best[0]:
            best = (badness, rows, cols)
    return best[1], best[2]


def _make_roads(config: GeneratorConfig, rng: np.random.Generator) -> list[RoadSegment]:
    lats = rng.uniform(config.lat_min, config.lat_max, config.n_road_segments)
    lons = rng.uniform(config.lon_min, config.lon_max, config.n_road_segments)
    frcs = rng.choice(np.arange(1, 5), size=config.n_road_segments, p=_FRC_WEIGHTS)
    return [
        RoadSegment(
            segment_code=f"S{i:04d}",
            center_latitude=float(lats[i]),
            center_longitude=float(lons[i]),
            frc_level=int(frcs[i]),
        )
        for i in range(config.n_road_segments)
    ]


def _ar1(rng: np.random.Generator, shape: tuple[int, int], phi: float, sigma: float) -> np.ndarray:
    """Stationary AR(1) rows: x_t = phi x_(t-1) + sigma sqrt(1-phi^2) eps."""
    n_series, n_steps = shape
    eps = rng.standard_normal((n_series, n_steps))
    out = np.empty((n_series, n_steps))
    out[:, 0] = eps[:, 0] * sigma
    innov = sigma * math.sqrt(1.0 - phi * phi)
    for t in range(1, n_steps):
        out[:, t] = phi * out[:, t - 1] + innov * eps[:, t]
    return out


@dataclass(frozen=True)
class _WeatherArrays:
    tile_ids: list[str]
    tile_lats: np.ndarray
    tile_lons: np.ndarray
    air: np.ndarray        # (n_tiles, n_hours)
    pavement: np.ndarray
    pressure: np.ndarray
    precipitation: np.ndarray
    visibility: np.ndarray


def _make_weather(config: GeneratorConfig, rng: np.random.Generator) -> _WeatherArrays:
    rows, cols = tile_grid_shape(config.n_weather_tiles,
                                 config.lat_max - config.lat_min,
                                 config.lon_max - config.lon_min)
    dlat = (config.lat_max - config.lat_min) / rows
    dlon = (config.lon_max - config.lon_min) / cols
    tile_ids, lats, lons = [], [], []
    for r in range(rows):
        for c in range(cols):
            tile_ids.append(f"T{r * cols + c:03d}")
            lats.append(config.lat_min + (r + 0.5) * dlat)
            lons.append(config.lon_min + (c + 0.5) * dlon)
    n_tiles, n_hours = config.n_weather_tiles, config.n_hours
    hours = np.arange(n_hours)
    day_frac = (hours % 24) / 24.0
    season = 13.0 + 5.0 * (hours / max(1, n_hours - 1))
    diurnal = 4.0 * np.cos(2.0 * math.pi * (day_frac - 15.0 / 24.0))
    tile_offset = rng.normal(0.0, 1.2, size=(n_tiles, 1))
    air = season + diurnal + tile_offset + _ar1(rng, (n_tiles, n_hours), 0.97, 3.0)
    pavement = air + 2.0 + 1.5 * np.maximum(diurnal, 0.0) + _ar1(rng, (n_tiles, n_hours), 0.90, 2.8)
    pressure = 1013.0 + rng.normal(0.0, 1.0, size=(n_tiles, 1)) \
        + _ar1(rng, (n_tiles, n_hours), 0.995, 5.5)
    wet_latent = _ar1(rng, (n_tiles, n_hours), 0.95, 1.0)
    precipitation = 2.0 * np.maximum(0.0, wet_latent - 0.8)
    visibility = np.clip(
        24000.0 - 3500.0 * precipitation - 2500.0 * np.abs(_ar1(rng, (n_tiles, n_hours), 0.9, 1.0)),
        200.0, 30000.0,
    )
    return _WeatherArrays(
        tile_ids=tile_ids,
        tile_lats=np.asarray(lats), tile_lons=np.asarray(lons),
        air=air, pavement=pavement, pressure=np.clip(pressure, 900.0, 1090.0),
        precipitation=precipitation, visibility=visibility,
    )


@dataclass(frozen=True)
class _TrafficArrays:
    speed_current: np.ndarray   # (n_segments, n_hours)
    speed_monthly: np.ndarray   # (n_segments, n_hours) values repeat per month
    speed_reference: np.ndarray  # (n_segments,)


def _make_traffic(config: GeneratorConfig, roads: list[RoadSegment],
                  rng: np.random.Generator) -> _TrafficArrays:
    n_seg, n_hours = len(roads), config.n_hours
    ref = np.asarray([_REF_SPEED[s.frc_level] for s in roads])
    lons = np.asarray([s.center_longitude for s in roads])
    hours = np.arange(n_hours)
    # local hour of day per segment (solar time), shaping the rush-hour dips
    local_hour = (hours[None, :] + lons[:, None] / 15.0) % 24.0
    congestion = (
        1.0
        - 0.25 * np.exp(-((local_hour - 8.0) ** 2) / 8.0)
        - 0.30 * np.exp(-((local_hour - 17.0) ** 2) / 10.0)
    )
    noise = 1.0 + rng.normal(0.0, 0.08, size=(n_seg, n_hours))
    current = np.maximum(3.0, ref[:, None] * congestion * noise)
    # month boundary: window starts on the first of a 31-day month
    first_month_hours = min(31 * 24, n_hours)
    monthly = np.empty_like(current)
    monthly[:, :first_month_hours] = current[:, :first_month_hours].mean(axis=1, keepdims=True)
    if first_month_hours < n_hours:
        monthly[:, first_month_hours:] = current[:, first_month_hours:].mean(axis=1, keepdims=True)
    return _TrafficArrays(speed_current=current, speed_monthly=monthly, speed_reference=ref)


def _nearest_center(lats: np.ndarray, lons: np.ndarray,
                    center_lats: np.ndarray, center_lons: np.ndarray) -> np.ndarray:
    """Index of the haversine-nearest center; first (lowest) index on ties.

    Identical to a SpatialIndex nearest() query because center identifiers
    are ordered by index.
    """
    best_d = np.full(lats.size, np.inf)
    best_i = np.zeros(lats.size, dtype=np.int64)
    for i in range(center_lats.size):
        d = _haversine_to_many(float(center_lats[i]), float(center_lons[i]), lats, lons)
        better = d < best_d
        best_d[better] = d[better]
        best_i[better] = i
    return best_i


def _standardize(x: np.ndarray) -> np.ndarray:
    sd = float(x.std())
    return (x - x.mean()) / (sd if sd > 0 else 1.0)


def calibrate_intercept(scores: np.ndarray, target: float,
                        iterations: int = 80) -> float:
    """Bisection for b with mean(sigmoid(scores + b)) = target."""
    lo, hi = -30.0, 30.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if float(np.mean(sigmoid(scores + mid))) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _label_scores(config: GeneratorConfig, ev_lats, ev_lons, ev_ts,
                  weather: _WeatherArrays, roads: list[RoadSegment],
                  traffic: _TrafficArrays) -> np.ndarray:
    hour = (ev_ts - config.window_start) // SECONDS_PER_HOUR
    hour = np.clip(hour, 0, config.n_hours - 1).astype(np.int64)
    tile = _nearest_center(ev_lats, ev_lons, weather.tile_lats, weather.tile_lons)
    seg_lats = np.asarray([s.center_latitude for s in roads])
    seg_lons = np.asarray([s.center_longitude for s in roads])
    seg = _nearest_center(ev_lats, ev_lons, seg_lats, seg_lons)
    air = weather.air[tile, hour]
    pavement = weather.pavement[tile, hour]
    pressure = weather.pressure[tile, hour]
    precip = weather.precipitation[tile, hour]
    vis = weather.visibility[tile, hour]
    speed_ratio = traffic.speed_current[seg, hour] / traffic.speed_reference[seg]
    tod_hours = np.mod(ev_ts + ev_lons * 240.0, SECONDS_PER_DAY) / SECONDS_PER_HOUR
    s = config.signal
    pressure_z = _standardize(pressure)
    score = (
        s.air_temperature * _standardize(air)
        + s.pavement_temperature * _standardize(pavement)
        + s.air_pressure * pressure_z
        + s.precipitation * _standardize(precip)
        + s.visibility * _standardize(vis)
        + s.speed_ratio * _standardize(speed_ratio)
        + s.warm_threshold_boost * (air > 20.0)
        + s.afternoon_boost * np.exp(-((tod_hours - 16.0) ** 2) / (2.0 * 2.5 ** 2))
        + s.wet_fast_boost * ((precip > 0.05) & (speed_ratio > 0.90))
        + s.calm_suppression * ((precip < 0.01) & (air < 18.0) & (speed_ratio < 0.90))
        + s.night_dry_suppression * (((tod_hours < 5.5) | (tod_hours > 21.5)) & (precip < 0.05))
        + s.congestion_boost * (speed_ratio < 0.62)
        + s.low_pressure_suppression * ((pressure_z < -1.0) & (precip < 0.05))
    )
    return score


def generate(config: GeneratorConfig) -> GeneratedStores:
    """All four stores, byte-identical for identical (config, seed)."""
    roads = _make_roads(config, _stream(config.seed, 0))
    weather_arrays = _make_weather(config, _stream(config.seed, 1))
    traffic_arrays = _make_traffic(config, roads, _stream(config.seed, 2))

    rng_events = _stream(config.seed, 3)
    seg_lats = np.asarray([s.center_latitude for s in roads])
    seg_lons = np.asarray([s.center_longitude for s in roads])
    home = rng_events.integers(0, len(roads), size=config.n_events)
    ev_lats = np.clip(seg_lats[home] + rng_events.normal(0.0, _EVENT_JITTER_DEG, config.n_events),
                      config.lat_min, config.lat_max)
    ev_lons = np.clip(seg_lons[home] + rng_events.normal(0.0, _EVENT_JITTER_DEG, config.n_events),
                      config.lon_min, config.lon_max)
    ev_ts = rng_events.integers(config.window_start, config.window_end, size=config.n_events)
    for spot in config.hotspots:
        ev_lats = np.append(ev_lats, np.full(spot.extra_event_count, spot.latitude))
        ev_lons = np.append(ev_lons, np.full(spot.extra_event_count, spot.longitude))
        ev_ts = np.append(
            ev_ts,
            rng_events.integers(config.window_start, config.window_end,
                                size=spot.extra_event_count),
        )

    scores = _label_scores(config, ev_lats, ev_lons, ev_ts,
                           weather_arrays, roads, traffic_arrays)
    intercept = calibrate_intercept(scores, config.positive_fraction)
    probs = sigmoid(scores + intercept)
    labels = _stream(config.seed, 4).random(scores.size) < probs

    events = [
        Car2XEvent(
            event_id=f"E{i:06d}",
            latitude=float(ev_lats[i]),
            longitude=float(ev_lons[i]),
            timestamp=int(ev_ts[i]),
            is_emergency_braking=bool(labels[i]),
        )
        for i in range(scores.size)
    ]

    weather_records = []
    for t, tile_id in enumerate(weather_arrays.tile_ids):
        t_lat = float(weather_arrays.tile_lats[t])
        t_lon = float(weather_arrays.tile_lons[t])
        for h in range(config.n_hours):
            weather_records.append(WeatherObservation(
                tile_id=tile_id,
                tile_latitude=t_lat,
                tile_longitude=t_lon,
                timestamp=config.window_start + h * SECONDS_PER_HOUR,
                air_temperature=float(weather_arrays.air[t, h]),
                pavement_temperature=float(weather_arrays.pavement[t, h]),
                air_pressure=float(weather_arrays.pressure[t, h]),
                precipitation=float(weather_arrays.precipitation[t, h]),
                visibility=float(weather_arrays.visibility[t, h]),
            ))

    traffic_records = []
    for i, seg in enumerate(roads):
        ref = float(traffic_arrays.speed_reference[i])
        for h in range(config.n_hours):
            traffic_records.append(TrafficRecord(
                segment_code=seg.segment_code,
                timestamp=config.window_start + h * SECONDS_PER_HOUR,
                speed_current=float(traffic_arrays.speed_current[i, h]),
                speed_monthly_avg=float(traffic_arrays.speed_monthly[i, h]),
                speed_reference=ref,
            ))

    return GeneratedStores(events=events, weather=weather_records,
                           roads=roads, traffic=traffic_records)


# ---------------------------------------------------------------------------
# raw files: one JSON document per line, plus a manifest with counts/fields

RAW_FORMAT_VERSION = 1

_STORE_FILES = {
    "events": "events.jsonl",
    "weather": "weather.jsonl",
    "roads": "roads.jsonl",
    "traffic": "traffic.jsonl",
}

_STORE_TYPES = {
    "events": Car2XEvent,
    "weather": WeatherObservation,
    "roads": RoadSegment,
    "traffic": TrafficRecord,
}


def emit_raw_files(stores: GeneratedStores, directory) -> dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    manifest = {"format": "roadrisk-raw", "format_version": RAW_FORMAT_VERSION,
                "stores": {}}
    for store, filename in _STORE_FILES.items():
        records = getattr(stores, store)
        path = directory / filename
        try:
            with path.open("w", encoding="utf-8") as fh:
                for rec in records:
                    fh.write(json.dumps(asdict(rec), sort_keys=True))
                    fh.write("\n")
        except OSError as exc:
            raise DatagenError(f"cannot write {path}: {exc}") from exc
        field_names = [f.name for f in _STORE_TYPES[store].__dataclass_fields__.values()]
        manifest["stores"][store] = {
            "file": filename,
            "records": len(records),
            "fields": field_names,
        }
        paths[store] = path
    manifest_path = directory / "manifest.json"
    try:
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8")
    except OSError as exc:
        raise DatagenError(f"cannot write {manifest_path}: {exc}") from exc
    paths["manifest"] = manifest_path
    return paths


def ingest_raw_files(directory) -> GeneratedStores:
    """Lossless inverse of emit_raw_files; validates manifest counts."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatagenError(f"cannot read {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DatagenError(f"corrupt manifest {manifest_path}: {exc}") from exc
    if manifest.get("format") != "roadrisk-raw":
        raise DatagenError(f"{manifest_path} is not a roadrisk-raw manifest")
    if manifest.get("format_version") != RAW_FORMAT_VERSION:
        raise DatagenError(
            f"{manifest_path} has format version {manifest.get('format_version')}, "
            f"this build reads {RAW_FORMAT_VERSION}"
        )
    loaded = {}
    for store, cls in _STORE_TYPES.items():
        entry = manifest["stores"][store]
        path = directory / entry["file"]
        records = []
        try:
            with path.open("r", encoding="utf-8") as fh:
                for line_no, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        records.append(cls(**json.loads(line)))
                    except (json.JSONDecodeError, TypeError, ValueError) as exc:
                        raise DatagenError(f"{path}:{line_no}: bad record: {exc}") from exc
        except OSError as exc:
            raise DatagenError(f"cannot read {path}: {exc}") from exc
        if len(records) != entry["records"]:
            raise DatagenError(
                f"{path}: manifest promises {entry['records']} records, found {len(records)}"
            )
        loaded[store] = records
    return GeneratedStores(**loaded)


# ---------------------------------------------------------------------------
# config files

def config_to_dict(config: GeneratorConfig) -> dict:
    doc = asdict(config)
    doc["hotspots"] = [list(asdict(h).values()) for h in config.hotspots]
    return doc


def config_from_dict(doc: dict) -> GeneratorConfig:
    doc = dict(doc)
    known = set(GeneratorConfig.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise DatagenError(f"unknown generator config keys: {sorted(unknown)}")
    if "hotspots" in doc:
        doc["hotspots"] = tuple(
            h if isinstance(h, HotspotSpec) else HotspotSpec(*h) for h in doc["hotspots"]
        )
    if "signal" in doc and not isinstance(doc["signal"], SignalStrengths):
        doc["signal"] = SignalStrengths(**doc["signal"])
    return GeneratorConfig(**doc)


def load_config(path) -> GeneratorConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatagenError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DatagenError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DatagenError(f"config {path} must hold a JSON object")
    return config_from_dict(doc)


def config_digest(config: GeneratorConfig) -> str:
    blob = json.dumps(config_to_dict(config), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
