"""Condition lookup behind the prediction service.

The provider interface is the seam for live data adapters; the default
implementation answers from an in-memory snapshot of the four stores using
the exact matching semantics of the batch pipeline.
"""

from __future__ import annotations

from typing import Protocol

from ..domain import FeatureRecord
from ..geomatch import (
    DEFAULT_TRAFFIC_STALENESS_S,
    DEFAULT_WEATHER_STALENESS_S,
    ConditionMatcher,
)


class ConditionProvider(Protocol):
    def lookup(self, latitude: float, longitude: float, timestamp: float) -> FeatureRecord:
        """Conditions at a position/time; raises MatchFailure when unavailable."""
        ...

    def freshness(self) -> dict[str, int | None]:
        """Latest source timestamps, keyed by store name."""
        ...


class SnapshotConditionProvider:
    """Serves lookups from loaded stores; immutable after construction."""

    def __init__(self, weather, roads, traffic, *,
                 weather_staleness_s: int = DEFAULT_WEATHER_STALENESS_S,
                 traffic_staleness_s: int = DEFAULT_TRAFFIC_STALENESS_S):
        self._matcher = ConditionMatcher(
            weather, roads, traffic,
            weather_staleness_s=weather_staleness_s,
            traffic_staleness_s=traffic_staleness_s,
        )

    def lookup(self, latitude: float, longitude: float, timestamp: float) -> FeatureRecord:
        # label is part of the record type but meaningless for a live query
        return self._matcher.feature_record(
            event_id="query", label=False,
            latitude=latitude, longitude=longitude, timestamp=timestamp,
        )

    def freshness(self) -> dict[str, int | None]:
        return {
            "weather": self._matcher.latest_weather_ts,
            "traffic": self._matcher.latest_traffic_ts,
        }
