import numpy as np
import pytest
from httpx import AsyncClient

from app.core.phasor_array import PhasorArray
from app.schemas import PhasorArrayDocument


def document(array: PhasorArray) -> dict:
    return array.to_document().model_dump(mode="json")


@pytest.mark.asyncio
async def test_root(client: AsyncClient):
    resp = await client.get("/")
    assert resp.status_code == 200
    assert resp.json()["message"] == "Harmonic LTP Toolkit API is running"


@pytest.mark.asyncio
async def test_floquet(client: AsyncClient, plant):
    resp = await client.post("/api/v1/floquet", json={"matrix": document(plant), "period": 1.0, "h": 10})
    assert resp.status_code == 200
    body = resp.json()
    exponents = sorted(re for re, _ in body["exponents"])
    assert np.allclose(exponents, [-0.9060, 1.9060], atol=1e-2)
    assert body["stable"] is False
    assert body["h"] == 10


@pytest.mark.asyncio
async def test_floquet_rejects_bad_document(client: AsyncClient):
    matrix = {"rows": 1, "cols": 1, "h": 1, "real": True, "coeffs": [[1.0, 0.0]]}
    resp = await client.post("/api/v1/floquet", json={"matrix": matrix, "period": 1.0, "h": 4})
    assert resp.status_code == 422


@pytest.mark.asyncio
async def test_lyapunov(client: AsyncClient):
    payload = {"a": document(PhasorArray.constant(-1.0)), "q": document(PhasorArray.eye(1)), "period": 1.0}
    resp = await client.post("/api/v1/lyapunov", json=payload)
    assert resp.status_code == 200
    body = resp.json()
    solution = PhasorArray.from_document(PhasorArrayDocument.model_validate(body["solution"]))
    assert solution.dc[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert body["report"]["converged"] is True


@pytest.mark.asyncio
async def test_lyapunov_rejects_unstable_system(client: AsyncClient, plant):
    payload = {"a": document(plant), "q": document(PhasorArray.eye(2)), "period": 1.0}
    resp = await client.post("/api/v1/lyapunov", json=payload)
    assert resp.status_code == 422
    assert resp.json()["detail"].startswith("NotHurwitzError")


@pytest.mark.asyncio
async def test_riccati(client: AsyncClient):
    one = document(PhasorArray.eye(1))
    payload = {"a": document(PhasorArray.zeros(1)), "b": one, "q": one, "r": one, "k0": one, "period": 1.0}
    resp = await client.post("/api/v1/riccati", json=payload)
    assert resp.status_code == 200
    gain = resp.json()["gain"]
    assert gain["coeffs"][gain["h"]][0] == pytest.approx(1.0, abs=1e-6)
    assert len(resp.json()["report"]["trace_history"]) == resp.json()["report"]["iterations"]


@pytest.mark.asyncio
async def test_simulate_initial(client: AsyncClient):
    payload = {
        "a": document(-PhasorArray.eye(2)),
        "b": document(PhasorArray.zeros(2, 1)),
        "period": 1.0,
        "x0": [1.0, 2.0],
        "times": [0.0, 0.5, 1.0],
    }
    resp = await client.post("/api/v1/simulate/initial", json=payload)
    assert resp.status_code == 200
    states = np.array(resp.json()["states"])
    assert np.allclose(states[-1], [np.exp(-1.0), 2 * np.exp(-1.0)], atol=1e-8)


@pytest.mark.asyncio
async def test_simulate_rejects_bad_initial_state(client: AsyncClient):
    payload = {
        "a": document(-PhasorArray.eye(2)),
        "b": document(PhasorArray.zeros(2, 1)),
        "period": 1.0,
        "x0": [1.0],
        "times": [0.0, 1.0],
    }
    resp = await client.post("/api/v1/simulate/initial", json=payload)
    assert resp.status_code == 422


@pytest.mark.asyncio
async def test_lmi_feasibility(client: AsyncClient):
    one = PhasorArray.eye(1)
    payload = {
        "a": document(-one),
        "b": document(one),
        "q": document(one),
        "r": document(one),
        "candidate": document(PhasorArray.constant(np.sqrt(2.0) - 1.0)),
        "period": 1.0,
        "h_p": 0,
        "h_t": 0,
        "h_lmi": 0,
    }
    resp = await client.post("/api/v1/lmi/feasibility", json=payload)
    assert resp.status_code == 200
    assert resp.json()["feasible"] is True

    payload["candidate"] = document(PhasorArray.constant(1.0))
    resp = await client.post("/api/v1/lmi/feasibility", json=payload)
    assert resp.json()["feasible"] is False
