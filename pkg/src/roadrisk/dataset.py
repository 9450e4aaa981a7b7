"""Canonical matched-dataset file: one header row, one record per line, label last."""

from __future__ import annotations

import csv
from pathlib import Path

from .domain import FeatureRecord

COLUMNS = [
    "event_id",
    "air_temperature",
    "pavement_temperature",
    "air_pressure",
    "precipitation",
    "visibility",
    "speed_current",
    "speed_monthly_avg",
    "speed_reference",
    "frc_level",
    "tod_seconds",
    "day_of_week",
    "day_of_year",
    "daylight",
    "label",
]

_FLOAT_FIELDS = COLUMNS[1:9] + ["tod_seconds"]
_INT_FIELDS = ["frc_level", "day_of_week", "day_of_year"]


class DatasetFormatError(ValueError):
    """Raised when a dataset file does not match the canonical layout."""


def write_dataset(records, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for rec in records:
            writer.writerow([
                rec.event_id,
                repr(rec.air_temperature),
                repr(rec.pavement_temperature),
                repr(rec.air_pressure),
                repr(rec.precipitation),
                repr(rec.visibility),
                repr(rec.speed_current),
                repr(rec.speed_monthly_avg),
                repr(rec.speed_reference),
                rec.frc_level,
                repr(rec.tod_seconds),
                rec.day_of_week,
                rec.day_of_year,
                int(rec.daylight),
                int(rec.label),
            ])
    return path


def read_dataset(path) -> list[FeatureRecord]:
    path = Path(path)
    records = []
    with path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != COLUMNS:
            raise DatasetFormatError(f"unexpected dataset header in {path}: {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(COLUMNS):
                raise DatasetFormatError(f"{path}:{lineno}: expected {len(COLUMNS)} columns")
            values = dict(zip(COLUMNS, row))
            try:
                records.append(FeatureRecord(
                    event_id=values["event_id"],
                    label=bool(int(values["label"])),
                    air_temperature=float(values["air_temperature"]),
                    pavement_temperature=float(values["pavement_temperature"]),
                    air_pressure=float(values["air_pressure"]),
                    precipitation=float(values["precipitation"]),
                    visibility=float(values["visibility"]),
                    speed_current=float(values["speed_current"]),
                    speed_monthly_avg=float(values["speed_monthly_avg"]),
                    speed_reference=float(values["speed_reference"]),
                    frc_level=int(values["frc_level"]),
                    tod_seconds=float(values["tod_seconds"]),
                    day_of_week=int(values["day_of_week"]),
                    day_of_year=int(values["day_of_year"]),
                    daylight=bool(int(values["daylight"])),
                ))
            except ValueError as exc:
                raise DatasetFormatError(f"{path}:{lineno}: {exc}") from exc
    return records
