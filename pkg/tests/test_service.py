"""Prediction service endpoints exercised in-process."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from roadrisk.domain import FeatureSchema, encode_dataset, encode_features
from roadrisk.models import fit
from roadrisk.models.forest import ForestParams
from roadrisk.models.tree import TreeParams
from roadrisk.service import (
    DEFAULT_THRESHOLD,
    MAX_OPINION_STEPS,
    SnapshotConditionProvider,
    create_app,
)


@pytest.fixture(scope="module")
def served(small_stores, small_records):
    X, y, _ = encode_dataset(small_records)
    model = fit("rf", X, y, ForestParams(n_trees=8, max_depth=8), seed=0)
    tree = fit("dt", X, y, TreeParams(max_depth=6))
    provider = SnapshotConditionProvider(small_stores.weather, small_stores.roads,
                                         small_stores.traffic)
    app = create_app(model, provider, tree=tree, threshold=0.5, model_version="test-1")
    client = TestClient(app)
    return client, model, provider


def _query(small_stores, i=0):
    e = small_stores.events[i]
    return {"latitude": e.latitude, "longitude": e.longitude, "timestamp": e.timestamp}


def test_health_reports_store_freshness(served, small_stores):
    client, _, provider = served
    resp = client.get("/v1/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert body["model_version"] == "test-1"
    fresh = provider.freshness()
    assert body["latest_weather_ts"] == fresh["weather"]
    assert body["latest_traffic_ts"] == fresh["traffic"]


def test_predict_matches_offline_scoring(served, small_stores):
    client, model, provider = served
    for i in (0, 17, 900):
        q = _query(small_stores, i)
        resp = client.post("/v1/predict", json=q)
        assert resp.status_code == 200
        body = resp.json()
        record = provider.lookup(q["latitude"], q["longitude"], q["timestamp"])
        expected = model.predict_proba(encode_features(record))
        assert body["probability"] == expected
        assert body["classification"] == (expected >= 0.5)
        assert body["threshold"] == 0.5
        assert body["model_version"] == "test-1"


def test_second_opinion_traces_the_tree(served, small_stores):
    client, _, _ = served
    resp = client.post("/v1/predict", json=_query(small_stores))
    steps = resp.json()["second_opinion"]
    assert 1 <= len(steps) <= MAX_OPINION_STEPS
    for step in steps:
        assert step["comparison"] in ("<=", ">")
        assert isinstance(step["feature"], str) and step["feature"]


def test_unmatchable_timestamp_is_503(served, small_stores):
    client, _, _ = served
    q = _query(small_stores)
    q["timestamp"] = 10  # decades before the snapshot window
    resp = client.post("/v1/predict", json=q)
    assert resp.status_code == 503
    detail = resp.json()["detail"]
    assert detail["error"] == "conditions_unavailable"
    assert detail["reason"] in ("no_traffic", "no_weather")


def test_malformed_requests_are_client_errors(served, small_stores):
    client, _, _ = served
    good = _query(small_stores)
    bad_lat = dict(good, latitude=95.0)
    assert client.post("/v1/predict", json=bad_lat).status_code == 422
    bad_lon = dict(good, longitude=-200.0)
    assert client.post("/v1/predict", json=bad_lon).status_code == 422
    extra = dict(good, vehicle="truck")
    assert client.post("/v1/predict", json=extra).status_code == 422
    missing = {"longitude": good["longitude"]}
    assert client.post("/v1/predict", json=missing).status_code == 422
    assert client.post("/v1/predict", content=b"{not json",
                       headers={"content-type": "application/json"}).status_code == 422


def test_timestamp_is_optional(served, small_stores):
    # omitted timestamp means "now"; the 14-day snapshot is long stale by then
    client, _, _ = served
    q = _query(small_stores)
    del q["timestamp"]
    resp = client.post("/v1/predict", json=q)
    assert resp.status_code == 503


def test_second_opinion_is_optional(small_stores, small_records):
    X, y, _ = encode_dataset(small_records[:500])
    model = fit("lr", X, y)
    provider = SnapshotConditionProvider(small_stores.weather, small_stores.roads,
                                         small_stores.traffic)
    client = TestClient(create_app(model, provider))
    e = small_stores.events[0]
    resp = client.post("/v1/predict", json={
        "latitude": e.latitude, "longitude": e.longitude, "timestamp": e.timestamp,
    })
    assert resp.status_code == 200
    assert resp.json()["second_opinion"] == []
    assert resp.json()["threshold"] == DEFAULT_THRESHOLD


def test_create_app_validates_wiring(small_stores, small_records):
    X, y, _ = encode_dataset(small_records[:500])
    model = fit("lr", X, y)
    provider = SnapshotConditionProvider(small_stores.weather, small_stores.roads,
                                         small_stores.traffic)
    with pytest.raises(ValueError):
        create_app(model, provider, threshold=1.0)
    with pytest.raises(ValueError):
        create_app(model, provider, schema=FeatureSchema(include_doy_cos=True))


def test_probabilities_survive_json_round_trip(served, small_stores):
    # JSON encodes the float exactly (repr round-trip), so equality is bitwise
    client, model, provider = served
    q = _query(small_stores, 5)
    p_http = client.post("/v1/predict", json=q).json()["probability"]
    record = provider.lookup(q["latitude"], q["longitude"], q["timestamp"])
    p_direct = model.predict_proba(encode_features(record))
    assert np.float64(p_http) == np.float64(p_direct)
