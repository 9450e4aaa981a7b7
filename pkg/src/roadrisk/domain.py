"""Domain types and the fixed 23-slot feature encoding."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

SECONDS_PER_DAY = 86400
FRC_LEVELS = (1, 2, 3, 4)


class EncodingError(ValueError):
    """Raised when a record cannot be encoded into a feature vector."""


@dataclass(frozen=True, slots=True)
class Car2XEvent:
    """One vehicle status message with the emergency-braking flag."""

    event_id: str
    latitude: float
    longitude: float
    timestamp: int
    is_emergency_braking: bool

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude}")


@dataclass(frozen=True, slots=True)
class WeatherObservation:
    """Measurements reported at the center of a fixed weather tile."""

    tile_id: str
    tile_latitude: float
    tile_longitude: float
    timestamp: int
    air_temperature: float
    pavement_temperature: float
    air_pressure: float
    precipitation: float
    visibility: float

    def __post_init__(self):
        if self.visibility < 0:
            raise ValueError(f"visibility must be >= 0, got {self.visibility}")
        if self.precipitation < 0:
            raise ValueError(f"precipitation must be >= 0, got {self.precipitation}")
        if not 850.0 <= self.air_pressure <= 1100.0:
            raise ValueError(f"air_pressure out of range: {self.air_pressure}")


@dataclass(frozen=True, slots=True)
class RoadSegment:
    """A street segment identified by its center point.

    frc_level follows the functional road classification: 1 highways and
    major intersections, 2 major artery, 3 major road, 4 neighbourhood
    street.
    """

    segment_code: str
    center_latitude: float
    center_longitude: float
    frc_level: int
    name: str = ""

    def __post_init__(self):
        if self.frc_level not in FRC_LEVELS:
            raise ValueError(f"frc_level must be one of {FRC_LEVELS}, got {self.frc_level}")


@dataclass(frozen=True, slots=True)
class TrafficRecord:
    """Speed readings for one road segment at one point in time."""

    segment_code: str
    timestamp: int
    speed_current: float
    speed_monthly_avg: float
    speed_reference: float

    def __post_init__(self):
        if min(self.speed_current, self.speed_monthly_avg, self.speed_reference) < 0:
            raise ValueError("speeds must be >= 0")
        if self.speed_reference <= 0:
            raise ValueError("speed_reference must be > 0")


@dataclass(frozen=True, slots=True)
class FeatureRecord:
    """A fully matched row: one event joined to its conditions.

    Temporal fields are derived from the event timestamp at the event
    position: tod_seconds is seconds since local midnight (local time is
    UTC + longitude / 15 hours), day_of_week is 0 for Monday, day_of_year
    starts at 1, daylight means the sun is above the horizon.
    """

    event_id: str
    label: bool
    air_temperature: float
    pavement_temperature: float
    air_pressure: float
    precipitation: float
    visibility: float
    speed_current: float
    speed_monthly_avg: float
    speed_reference: float
    frc_level: int
    tod_seconds: float
    day_of_week: int
    day_of_year: int
    daylight: bool


@dataclass(frozen=True)
class TrainingSplit:
    """Handle for the training partition.

    Resampling accepts only this type, so validation and test records can
    never be balanced by accident.
    """

    records: tuple[FeatureRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


# Local time is approximated as UTC shifted by longitude / 15 hours, which
# is also the solar time the daylight computation needs. One degree of
# longitude is 240 seconds.
_SECONDS_PER_DEGREE = 240.0


def local_time_parts(timestamp: float, longitude: float) -> tuple[float, int, int]:
    """Split a UTC timestamp into (tod_seconds, day_of_week, day_of_year) local to `longitude`."""
    local = timestamp + longitude * _SECONDS_PER_DEGREE
    day = math.floor(local / SECONDS_PER_DAY)
    tod = local - day * SECONDS_PER_DAY
    dow = (day + 3) % 7  # epoch day 0 was a Thursday
    date = np.datetime64(day, "D")
    doy = int((date - date.astype("datetime64[Y]")).astype(int)) + 1
    return tod, dow, doy


def solar_elevation_deg(tod_seconds: float, day_of_year: int, latitude: float) -> float:
    """Sun elevation above the horizon from the standard declination approximation."""
    decl = -23.44 * math.cos(2.0 * math.pi * (day_of_year + 10) / 365.25)
    hour_angle = math.radians(15.0 * (tod_seconds / 3600.0 - 12.0))
    phi = math.radians(latitude)
    d = math.radians(decl)
    sin_elev = math.sin(phi) * math.sin(d) + math.cos(phi) * math.cos(d) * math.cos(hour_angle)
    return math.degrees(math.asin(max(-1.0, min(1.0, sin_elev))))


def temporal_encode(
    timestamp: float, longitude: float, latitude: float
) -> tuple[float, float, int, bool, float]:
    """Encode a timestamp at a position into (tod_sin, tod_cos, day_of_week, daylight, doy_cos)."""
    tod, dow, doy = local_time_parts(timestamp, longitude)
    angle = 2.0 * math.pi * tod / SECONDS_PER_DAY
    tod_sin = math.sin(angle)
    tod_cos = math.cos(angle)
    doy_cos = math.cos(2.0 * math.pi * doy / 365.25)
    daylight = solar_elevation_deg(tod, doy, latitude) > 0.0
    return tod_sin, tod_cos, dow, daylight, doy_cos


_BASE_SLOTS = [
    "air_temperature",
    "pavement_temperature",
    "air_pressure",
    "precipitation",
    "visibility",
    "speed_current",
    "speed_monthly_avg",
    "speed_reference",
]
_TAIL_SLOTS = (
    [f"frc_{level}" for level in FRC_LEVELS]
    + ["tod_sin", "tod_cos"]
    + [f"dow_{d}" for d in range(7)]
    + ["daylight"]
)


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered slot layout of the model input vector.

    The vector is always 23 slots wide: 8 raw measurements, one derived
    slot (speed_ratio by default, doy_cos when `include_doy_cos` is set),
    a 4-slot FRC one-hot, tod_sin/tod_cos, a 7-slot day-of-week one-hot
    and the daylight flag. Continuous slots are the first nine plus the
    two time-of-day harmonics; only those are standardized.
    """

    include_doy_cos: bool = False
    slot_names: tuple[str, ...] = field(init=False)
    continuous: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        derived = "doy_cos" if self.include_doy_cos else "speed_ratio"
        names = tuple(_BASE_SLOTS + [derived] + _TAIL_SLOTS)
        object.__setattr__(self, "slot_names", names)
        object.__setattr__(self, "continuous", tuple(range(9)) + (13, 14))

    @property
    def size(self) -> int:
        return len(self.slot_names)

    def fingerprint(self) -> str:
        digest = hashlib.sha256(",".join(self.slot_names).encode("utf-8"))
        return digest.hexdigest()[:16]

    def index_of(self, name: str) -> int:
        return self.slot_names.index(name)


DEFAULT_SCHEMA = FeatureSchema()


def encode_features(record: FeatureRecord, schema: FeatureSchema = DEFAULT_SCHEMA) -> np.ndarray:
    """Encode one matched record into the fixed 23-slot vector (raw, unstandardized)."""
    measurements = (
        record.air_temperature,
        record.pavement_temperature,
        record.air_pressure,
        record.precipitation,
        record.visibility,
        record.speed_current,
        record.speed_monthly_avg,
        record.speed_reference,
    )
    for name, value in zip(_BASE_SLOTS, measurements):
        if not math.isfinite(value):
            raise EncodingError(f"{name} is not finite in event {record.event_id}")
    if record.speed_reference == 0:
        raise EncodingError(f"speed_reference is zero in event {record.event_id}")
    if record.frc_level not in FRC_LEVELS:
        raise EncodingError(f"bad frc_level {record.frc_level} in event {record.event_id}")
    if not 0 <= record.day_of_week <= 6:
        raise EncodingError(f"bad day_of_week {record.day_of_week} in event {record.event_id}")

    vec = np.zeros(schema.size)
    vec[0:8] = measurements
    if schema.include_doy_cos:
        vec[8] = math.cos(2.0 * math.pi * record.day_of_year / 365.25)
    else:
        vec[8] = record.speed_current / record.speed_reference
    vec[8 + record.frc_level] = 1.0  # frc one-hot occupies slots 9..12
    angle = 2.0 * math.pi * record.tod_seconds / SECONDS_PER_DAY
    vec[13] = math.sin(angle)
    vec[14] = math.cos(angle)
    vec[15 + record.day_of_week] = 1.0
    vec[22] = 1.0 if record.daylight else 0.0
    if not np.isfinite(vec).all():
        raise EncodingError(f"non-finite encoded value in event {record.event_id}")
    return vec


def encode_dataset(
    records, schema: FeatureSchema = DEFAULT_SCHEMA
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Encode matched records into (X, y, event_ids) with X of shape (n, 23)."""
    n = len(records)
    X = np.empty((n, schema.size))
    y = np.empty(n, dtype=np.uint8)
    ids = []
    for i, rec in enumerate(records):
        X[i] = encode_features(rec, schema)
        y[i] = 1 if rec.label else 0
        ids.append(rec.event_id)
    return X, y, ids


@dataclass(frozen=True)
class Standardizer:
    """Per-slot z-score parameters fitted on the training split only.

    Non-continuous slots keep mean 0 and scale 1 so transform() is a
    no-op on one-hot and flag slots. A constant continuous slot keeps
    scale 1 to avoid dividing by zero.
    """

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray, schema: FeatureSchema = DEFAULT_SCHEMA) -> "Standardizer":
        mean = np.zeros(schema.size)
        scale = np.ones(schema.size)
        cont = list(schema.continuous)
        mean[cont] = X[:, cont].mean(axis=0)
        std = X[:, cont].std(axis=0)
        scale[cont] = np.where(std > 0, std, 1.0)
        return cls(mean=mean, scale=scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Standardizer":
        return cls(mean=np.asarray(data["mean"], dtype=float),
                   scale=np.asarray(data["scale"], dtype=float))


def identity_standardizer(schema: FeatureSchema = DEFAULT_SCHEMA) -> Standardizer:
    return Standardizer(mean=np.zeros(schema.size), scale=np.ones(schema.size))
