"""Request/response bodies for the prediction endpoints."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class PredictRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    latitude: float = Field(ge=-90.0, le=90.0)
    longitude: float = Field(ge=-180.0, le=180.0)
    # UTC seconds; omitted means "now" on the server clock
    timestamp: int | None = None


class OpinionStep(BaseModel):
    feature: str
    comparison: Literal["<=", ">"]
    value: float


class PredictResponse(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    probability: float = Field(ge=0.0, le=1.0)
    classification: bool
    threshold: float
    model_version: str
    second_opinion: list[OpinionStep]


class HealthResponse(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    status: str
    model_version: str
    latest_weather_ts: int | None
    latest_traffic_ts: int | None


class ConditionsUnavailable(BaseModel):
    error: str = "conditions_unavailable"
    reason: str
