import time

import pytest
from fastapi.testclient import TestClient

from themekit.domain import Speaker, StudyConfig, Turn, Transcript
from themekit.fixtures import theme_fixture
from themekit.orchestrator import FixedClock, Orchestrator
from themekit.service import create_app

from conftest import make_transcript_from_counts, make_words


@pytest.fixture
def client(tmp_path):
    orch = Orchestrator(tmp_path / "sessions", clock=FixedClock())
    app = create_app(orch, body_cap=64 * 1024)
    with TestClient(app) as c:
        c.orchestrator = orch
        yield c


def session_body(session_id="s1"):
    transcripts = [make_transcript_from_counts([400, 500, 450], "tr1")]
    return {
        "session_id": session_id,
        "config": StudyConfig(
            background="Parents of children in cardiac care.",
            goals="Identify coping themes.",
            chunk_word_limit=800).to_dict(),
        "transcripts": [t.to_dict() for t in transcripts],
    }


def wait_idle(client, sid, timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        data = client.get(f"/api/sessions/{sid}").json()
        if not data["running"]:
            return data
        time.sleep(0.05)
    raise TimeoutError("stage did not finish")


def advance_and_wait(client, sid):
    resp = client.post(f"/api/sessions/{sid}/advance")
    assert resp.status_code == 202, resp.text
    data = wait_idle(client, sid)
    assert data["last_error"] is None, data["last_error"]
    return data


def to_awaiting(client, sid="s1"):
    assert client.post("/api/sessions", json=session_body(sid)).status_code == 201
    data = advance_and_wait(client, sid)
    assert data["phase"] == "themes_generated"
    data = advance_and_wait(client, sid)
    assert data["phase"] == "awaiting_expert"
    return data


# ---------------------------------------------------------------------------
# session resources

def test_create_and_list(client):
    resp = client.post("/api/sessions", json=session_body())
    assert resp.status_code == 201
    body = resp.json()
    assert body["phase"] == "configured"
    assert body["transcript_ids"] == ["tr1"]
    listed = client.get("/api/sessions").json()
    assert [s["session_id"] for s in listed] == ["s1"]


def test_create_validation_error(client):
    bad = session_body()
    bad["transcripts"] = []
    resp = client.post("/api/sessions", json=bad)
    assert resp.status_code == 422
    assert resp.json()["code"] == "transcripts"


def test_create_malformed_body(client):
    resp = client.post("/api/sessions",
                       json={"config": {"background": "b", "goals": "g"},
                             "transcripts": [{"bogus": True}]})
    assert resp.status_code == 422
    assert resp.json()["code"] == "invalid_payload"


def test_get_unknown_session(client):
    resp = client.get("/api/sessions/nope")
    assert resp.status_code == 404
    assert resp.json()["code"] == "not_found"


def test_body_cap_413(client):
    big = session_body()
    big["transcripts"][0]["turns"] = [
        {"speaker": "participant", "text": make_words(20000)}]
    resp = client.post("/api/sessions", json=big)
    assert resp.status_code == 413
    assert resp.json()["code"] == "payload_too_large"


# ---------------------------------------------------------------------------
# advancing the pipeline

def test_full_flow_to_finalized(client):
    to_awaiting(client)
    resp = client.post("/api/sessions/s1/decision", json={"kind": "approve"})
    assert resp.status_code == 200
    assert resp.json()["phase"] == "finalized"
    resp = client.post("/api/sessions/s1/advance")
    assert resp.status_code == 422
    assert resp.json()["code"] == "illegal_phase"


def test_advance_conflict_while_running(client):
    client.post("/api/sessions", json=session_body())
    assert client.post("/api/sessions/s1/advance").status_code == 202
    statuses = {client.post("/api/sessions/s1/advance").status_code
                for _ in range(5)}
    # every concurrent attempt is either rejected or trivially accepted
    assert statuses <= {202, 409}
    wait_idle(client, "s1")


def test_iteration_cap_surfaces_as_422(client):
    body = session_body()
    body["config"]["max_unattended_iterations"] = 1
    client.post("/api/sessions", json=body)
    advance_and_wait(client, "s1")
    advance_and_wait(client, "s1")
    resp = client.post("/api/sessions/s1/advance")
    assert resp.status_code == 422
    assert resp.json()["code"] == "iteration_cap_reached"
    resp = client.post("/api/sessions/s1/decision",
                       json={"kind": "continue_refinement"})
    assert resp.json()["unattended_iterations"] == 0
    advance_and_wait(client, "s1")


def test_decision_wrong_phase(client):
    client.post("/api/sessions", json=session_body())
    resp = client.post("/api/sessions/s1/decision", json={"kind": "approve"})
    assert resp.status_code == 422
    assert resp.json()["code"] == "illegal_phase"


def test_decision_malformed(client):
    to_awaiting(client)
    resp = client.post("/api/sessions/s1/decision", json={"kind": "bogus"})
    assert resp.status_code == 422
    assert resp.json()["code"] == "invalid_payload"


# ---------------------------------------------------------------------------
# artifacts

def test_artifact_endpoints(client):
    to_awaiting(client)
    themes = client.get("/api/sessions/s1/themes/0").json()
    assert themes["version"] == 0
    assert themes["themes"]
    assert client.get("/api/sessions/s1/themes/99").status_code == 404

    codes = client.get("/api/sessions/s1/codes").json()
    assert codes and all("id" in c for c in codes)

    feedback = client.get("/api/sessions/s1/feedback").json()
    assert [f["iteration"] for f in feedback] == [1]
    assert len(feedback[0]["feedback"]) == 4

    actions = client.get("/api/sessions/s1/actions").json()
    assert [a["iteration"] for a in actions] == [1]

    audit = client.get("/api/sessions/s1/audit")
    assert audit.status_code == 200
    assert audit.headers["content-type"].startswith("application/x-ndjson")
    assert audit.text.strip()
    assert client.get("/api/sessions/zz/audit").status_code == 404


# ---------------------------------------------------------------------------
# metrics

def test_metrics_endpoint(client):
    to_awaiting(client)
    reference = theme_fixture()["human"].to_dict()
    resp = client.post("/api/sessions/s1/metrics",
                       json={"reference": reference, "theta": 0.5})
    assert resp.status_code == 200
    body = resp.json()
    report = body["report"]
    assert report["theta"] == 0.5
    assert 0.0 <= report["jaccard"] <= report["hit_rate"] <= 1.0
    m = body["heatmap"]
    assert len(m["row_labels"]) == 12
    assert len(m["scores"]) == 12
    # idempotent: second call returns the stored artifact
    again = client.post("/api/sessions/s1/metrics",
                        json={"reference": reference, "theta": 0.5}).json()
    assert again == body


def test_metrics_requires_reference(client):
    to_awaiting(client)
    resp = client.post("/api/sessions/s1/metrics", json={"theta": 0.5})
    assert resp.status_code == 422
    assert resp.json()["code"] == "invalid_payload"


# ---------------------------------------------------------------------------
# misc

def test_openapi_served(client):
    resp = client.get("/api/openapi.json")
    assert resp.status_code == 200
    paths = resp.json()["paths"]
    assert "/api/sessions/{sid}/advance" in paths
    assert "/api/sessions/{sid}/metrics" in paths


def test_background_error_surfaced_via_polling(client, tmp_path):
    client.post("/api/sessions", json=session_body())
    # corrupt the stored transcripts artifact so generation fails in background
    orch = client.orchestrator
    path = orch.store.session_dir("s1") / "artifacts" / "transcripts.json"
    path.write_text("[]")
    assert client.post("/api/sessions/s1/advance").status_code == 202
    deadline = time.monotonic() + 10
    while time.monotonic() < deadline:
        data = client.get("/api/sessions/s1").json()
        if not data["running"] and data["last_error"]:
            break
        time.sleep(0.05)
    assert data["last_error"]
    assert data["phase"] != "themes_generated"
