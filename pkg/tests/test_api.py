"""
tests/test_api.py
HTTP routes, run through the ASGI app in-process.
"""

import httpx
import pytest
from fastapi.testclient import TestClient

from app.core.config import settings
from app.main import app

BELL = "modes 2\ntwo_mode { a2=0.5 a3=0.5 b4=0.5 }\n"


@pytest.fixture
def client():
    with TestClient(app) as c:
        yield c


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "version": settings.APP_VERSION, "max_modes": settings.MAX_MODES}


def test_root(client):
    assert client.get("/").json()["status"] == "online"


def test_car_check(client):
    r = client.get("/api/v1/car-check/2")
    assert r.status_code == 200
    assert r.json()["identities_checked"] == 10 and r.json()["ok"] is True
    assert "X-Latency-Ms" in r.headers


def test_car_check_too_many_modes(client):
    r = client.get(f"/api/v1/car-check/{settings.CAR_CHECK_MAX_MODES + 1}")
    assert r.status_code == 422
    assert r.json()["type"] == "TooManyModes"


def test_reduce(client):
    r = client.post("/api/v1/reduce", json={"document": BELL, "modes_keep": [1]})
    assert r.status_code == 200
    body = r.json()
    assert body["partition"]["kept"] == [1] and body["partition"]["traced"] == [2]
    assert body["oracle_residual"] < 1e-10
    assert all(abs(v - 0.5) < 1e-12 for v in body["spectrum"])


def test_reduce_syntax_error_reports_position(client):
    r = client.post("/api/v1/reduce", json={"document": "modes 2\n0.5 |01><01|\n", "modes_keep": [1]})
    assert r.status_code == 422
    body = r.json()
    assert body["type"] == "InputSyntaxError"
    assert body["line"] == 2 and body["column"] >= 1


def test_reduce_semantic_error(client):
    r = client.post("/api/v1/reduce", json={"document": "modes 2\n0.5 * |00><00|\n", "modes_keep": [1]})
    assert r.status_code == 422
    assert r.json()["type"] == "InputSemanticError"
    assert "line" not in r.json()


def test_reduce_rejects_empty_partition(client):
    r = client.post("/api/v1/reduce", json={"document": BELL, "modes_keep": []})
    assert r.status_code == 422


def test_measure(client):
    r = client.post("/api/v1/measure", json={"document": BELL})
    assert r.status_code == 200
    body = r.json()
    assert abs(body["negativity"] - 0.5) < 1e-12
    assert abs(body["concurrence"] - 1.0) < 1e-12
    assert body["witness"]["signs"] == [1, 1, 1, 1]


def test_measure_budget_is_capped(client):
    r = client.post("/api/v1/measure", json={"document": BELL, "ssr_eof": True, "restarts": 10_000})
    assert r.status_code == 422


@pytest.mark.parametrize("name,exists", [("two-mode-free", False), ("two-mode-ssr", True)])
def test_demo(client, name, exists):
    r = client.get(f"/api/v1/demos/{name}")
    assert r.status_code == 200
    assert r.json()["verdict"]["exists"] is exists and r.json()["matches"] is True


def test_unknown_demo(client):
    r = client.get("/api/v1/demos/four-mode")
    assert r.status_code == 404
    assert r.json()["status_code"] == 404


@pytest.mark.asyncio
async def test_measure_async():
    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(transport=transport, base_url="http://test") as ac:
        r = await ac.post("/api/v1/measure", json={"document": BELL, "ssr_eof": True, "restarts": 1, "iterations": 10})
    assert r.status_code == 200
    assert abs(r.json()["eof_ssr_estimate"] - 1.0) < 1e-9
