"""Traffic incident risk prediction from vehicle events and road conditions.

Pipeline: synthesize the four raw feeds (events, weather, roads, traffic),
spatially and temporally join them into a labeled dataset, rebalance, train
and tune classifiers, and serve per-position risk predictions over HTTP.
"""

__version__ = "1.0.0"

from .domain import (
    DEFAULT_SCHEMA,
    Car2XEvent,
    FeatureRecord,
    FeatureSchema,
    RoadSegment,
    Standardizer,
    TrafficRecord,
    TrainingSplit,
    WeatherObservation,
    encode_dataset,
    encode_features,
)

__all__ = [
    "DEFAULT_SCHEMA",
    "Car2XEvent",
    "FeatureRecord",
    "FeatureSchema",
    "RoadSegment",
    "Standardizer",
    "TrafficRecord",
    "TrainingSplit",
    "WeatherObservation",
    "__version__",
    "encode_dataset",
    "encode_features",
]
