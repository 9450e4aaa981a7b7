"""HTTP prediction service: score a position against current conditions."""

from __future__ import annotations

import time

from fastapi import FastAPI, HTTPException

from ..domain import DEFAULT_SCHEMA, FeatureSchema, encode_features
from ..geomatch import MatchFailure
from ..models.base import TrainedModel
from ..models.tree import DecisionTreeModel
from .conditions import ConditionProvider
from .schemas import HealthResponse, OpinionStep, PredictRequest, PredictResponse

MAX_OPINION_STEPS = 10
DEFAULT_THRESHOLD = 0.65


def create_app(model: TrainedModel, provider: ConditionProvider, *,
               tree: DecisionTreeModel | None = None,
               threshold: float = DEFAULT_THRESHOLD,
               model_version: str = "unversioned",
               schema: FeatureSchema = DEFAULT_SCHEMA) -> FastAPI:
    """App factory; all referenced state is immutable, so requests may interleave."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    if schema.fingerprint() != model.schema_fingerprint:
        raise ValueError(
            f"model was trained on schema {model.schema_fingerprint}, "
            f"service encodes {schema.fingerprint()}"
        )
    if tree is not None and tree.schema_fingerprint != model.schema_fingerprint:
        raise ValueError("second-opinion tree does not share the model's schema")

    app = FastAPI(title="road incident prediction", docs_url=None, redoc_url=None)
    slot_names = schema.slot_names

    @app.post("/v1/predict", response_model=PredictResponse)
    def predict(request: PredictRequest) -> PredictResponse:
        ts = request.timestamp if request.timestamp is not None else int(time.time())
        try:
            record = provider.lookup(request.latitude, request.longitude, ts)
        except MatchFailure as failure:
            raise HTTPException(
                status_code=503,
                detail={"error": "conditions_unavailable", "reason": failure.reason},
            ) from failure
        vector = encode_features(record, schema)
        probability = model.predict_proba(vector, schema=schema)
        steps: list[OpinionStep] = []
        if tree is not None:
            for slot, comparison, value in tree.decision_path(vector)[:MAX_OPINION_STEPS]:
                steps.append(OpinionStep(feature=slot_names[slot],
                                         comparison=comparison, value=value))
        return PredictResponse(
            probability=probability,
            classification=probability >= threshold,
            threshold=threshold,
            model_version=model_version,
            second_opinion=steps,
        )

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        fresh = provider.freshness()
        return HealthResponse(
            status="ok",
            model_version=model_version,
            latest_weather_ts=fresh.get("weather"),
            latest_traffic_ts=fresh.get("traffic"),
        )

    return app
