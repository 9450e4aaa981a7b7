"""Prediction service: condition lookup plus model scoring over HTTP."""

from .app import DEFAULT_THRESHOLD, MAX_OPINION_STEPS, create_app
from .conditions import ConditionProvider, SnapshotConditionProvider
from .schemas import HealthResponse, OpinionStep, PredictRequest, PredictResponse

__all__ = [
    "DEFAULT_THRESHOLD",
    "MAX_OPINION_STEPS",
    "ConditionProvider",
    "HealthResponse",
    "OpinionStep",
    "PredictRequest",
    "PredictResponse",
    "SnapshotConditionProvider",
    "create_app",
]
