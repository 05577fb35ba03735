import time

import pytest
from fastapi.testclient import TestClient

from prefshape.server import create_app
from tests.conftest import FAST_QUERYGEN


@pytest.fixture
def client(tmp_path, scenario):
    app = create_app(root=tmp_path, scenario=scenario, query_cfg=FAST_QUERYGEN)
    return TestClient(app)


def wait_for_query(client, sid, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        r = client.get(f"/sessions/{sid}/query")
        if r.status_code == 200:
            return r.json()
        assert r.status_code == 202
        time.sleep(0.1)
    raise TimeoutError("no query became available")


class TestServerFlow:
    def test_full_session_round_trip(self, client):
        r = client.post("/sessions", json={"n_queries": 2, "seed": 1})
        sid = r.json()["session_id"]

        for _ in range(2):
            q = wait_for_query(client, sid)
            assert {"query_id", "traj_a", "traj_b"} <= set(q)
            assert len(q["traj_a"]["states"]) == len(q["traj_b"]["states"])
            r = client.post(f"/sessions/{sid}/response",
                            json={"query_id": q["query_id"], "choice": "A"})
            assert r.status_code == 200

        deadline = time.time() + 60
        while time.time() < deadline:
            state = client.get(f"/sessions/{sid}/state").json()
            if state["phase"] == "complete":
                break
            time.sleep(0.1)
        assert state["phase"] == "complete"
        assert state["answered"] == 2 or state["phase"] == "complete"

        report = client.get(f"/sessions/{sid}/report")
        assert report.status_code == 200
        body = report.json()
        assert body["answered"] == 2
        assert body["responses"] == [1, 1]

    def test_query_pending_returns_202_while_optimizing(self, client):
        sid = client.post("/sessions", json={"n_queries": 1, "seed": 2}).json()["session_id"]
        r = client.get(f"/sessions/{sid}/query")
        assert r.status_code in (200, 202)
        if r.status_code == 202:
            assert "status" in r.json()

    def test_duplicate_response_conflicts(self, client):
        sid = client.post("/sessions", json={"n_queries": 2, "seed": 3}).json()["session_id"]
        q = wait_for_query(client, sid)
        ok = client.post(f"/sessions/{sid}/response",
                         json={"query_id": q["query_id"], "choice": "B"})
        assert ok.status_code == 200
        dup = client.post(f"/sessions/{sid}/response",
                          json={"query_id": q["query_id"], "choice": "A"})
        assert dup.status_code == 409

    def test_wrong_query_id_conflicts(self, client):
        sid = client.post("/sessions", json={"n_queries": 1, "seed": 4}).json()["session_id"]
        wait_for_query(client, sid)
        r = client.post(f"/sessions/{sid}/response",
                        json={"query_id": "bogus", "choice": "A"})
        assert r.status_code == 409

    def test_invalid_choice_conflicts(self, client):
        sid = client.post("/sessions", json={"n_queries": 1, "seed": 5}).json()["session_id"]
        q = wait_for_query(client, sid)
        r = client.post(f"/sessions/{sid}/response",
                        json={"query_id": q["query_id"], "choice": "C"})
        assert r.status_code == 409

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope/query").status_code == 404
        assert client.get("/sessions/nope/state").status_code == 404

    def test_duplicate_session_id_conflicts(self, client):
        client.post("/sessions", json={"n_queries": 1, "seed": 6,
                                       "session_id": "dup"})
        r = client.post("/sessions", json={"n_queries": 1, "seed": 6,
                                           "session_id": "dup"})
        assert r.status_code == 409

    def test_report_before_completion_conflicts(self, client):
        sid = client.post("/sessions", json={"n_queries": 2, "seed": 7}).json()["session_id"]
        assert client.get(f"/sessions/{sid}/report").status_code == 409
