"""Shared fixtures: a small generated world reused across test modules."""

import numpy as np
import pytest

from roadrisk.datagen import GeneratorConfig, HotspotSpec, generate
from roadrisk.domain import FeatureRecord
from roadrisk.geomatch import assemble, detect_hotspots


SMALL_CONFIG = GeneratorConfig(
    seed=424242,
    n_events=4000,
    n_road_segments=60,
    n_weather_tiles=24,
    window_days=14,
    hotspots=(HotspotSpec(48.5, 9.5, 400),),
)


@pytest.fixture(scope="session")
def small_config():
    return SMALL_CONFIG


@pytest.fixture(scope="session")
def small_stores(small_config):
    return generate(small_config)


@pytest.fixture(scope="session")
def small_result(small_stores):
    hotspots = detect_hotspots(small_stores.events)
    return assemble(small_stores.events, small_stores.weather,
                    small_stores.roads, small_stores.traffic, hotspots=hotspots)


@pytest.fixture(scope="session")
def small_records(small_result):
    return small_result.records


def make_record(**overrides) -> FeatureRecord:
    """One fully populated record with innocuous defaults."""
    base = dict(
        event_id="E000000",
        label=False,
        air_temperature=15.0,
        pavement_temperature=18.0,
        air_pressure=1013.0,
        precipitation=0.0,
        visibility=20000.0,
        speed_current=45.0,
        speed_monthly_avg=48.0,
        speed_reference=50.0,
        frc_level=3,
        tod_seconds=41400.0,
        day_of_week=1,
        day_of_year=121,
        daylight=True,
    )
    base.update(overrides)
    return FeatureRecord(**base)


def random_records(rng: np.random.Generator, n: int, positive_fraction: float = 0.3):
    """Labeled records with feature noise, for splitter/sampler tests."""
    labels = rng.random(n) < positive_fraction
    return [
        make_record(
            event_id=f"E{i:06d}",
            label=bool(labels[i]),
            air_temperature=float(rng.normal(15.0, 8.0)),
            pavement_temperature=float(rng.normal(18.0, 9.0)),
            air_pressure=float(rng.normal(1013.0, 9.0)),
            precipitation=float(max(0.0, rng.normal(0.2, 0.6))),
            visibility=float(np.clip(rng.normal(18000.0, 6000.0), 200.0, 30000.0)),
            speed_current=float(max(3.0, rng.normal(45.0, 12.0))),
            speed_monthly_avg=float(max(3.0, rng.normal(46.0, 6.0))),
            speed_reference=float(rng.choice([30.0, 50.0, 80.0, 110.0])),
            frc_level=int(rng.integers(1, 5)),
            tod_seconds=float(rng.uniform(0.0, 86400.0)),
            day_of_week=int(rng.integers(0, 7)),
            day_of_year=int(rng.integers(1, 366)),
            daylight=bool(rng.random() < 0.5),
        )
        for i in range(n)
    ]
