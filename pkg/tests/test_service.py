"""HTTP API: payload shapes, error envelope, persistence, concurrency."""

from __future__ import annotations

import json
import threading

import pytest
from fastapi.testclient import TestClient

from examforge.service import create_app

BLUEPRINT = {
    "slots": [
        {"slot_index": 1, "subarea": "LIN"},
        {"slot_index": 2, "subarea": "FREQ"},
    ],
    "target_points": 15,
    "exam_date": "2026-06-01",
    "recency_window_days": 730,
}


@pytest.fixture
def client(toy_bank_dir):
    with TestClient(create_app(toy_bank_dir)) as c:
        yield c


def _create(client, seed="9", blueprint=None):
    body = {"blueprint": blueprint or BLUEPRINT}
    if seed is not None:
        body["base_seed"] = seed
    response = client.post("/api/sessions", json=body)
    assert response.status_code == 201, response.text
    return response.json()


# ---------------- bank endpoints ----------------


def test_list_problems(client):
    doc = client.get("/api/bank/problems").json()
    assert len(doc["problems"]) == 4
    assert doc["subareas"] == {"LIN": "Linear systems", "FREQ": "Frequency response"}
    assert len(doc["bank_ref"]) == 64
    row = doc["problems"][0]
    assert row["id"] == "a1" and "statement" not in row


def test_list_problems_filters(client):
    doc = client.get("/api/bank/problems", params={"subarea": "LIN"}).json()
    assert [p["id"] for p in doc["problems"]] == ["a1", "a2"]
    doc = client.get("/api/bank/problems", params={"min_points": 10}).json()
    assert [p["id"] for p in doc["problems"]] == ["a2", "b2"]


def test_list_problems_include_body_opt_in(client):
    doc = client.get("/api/bank/problems", params={"include": "body"}).json()
    assert doc["problems"][0]["statement"] == "Statement for a1.\n"
    response = client.get("/api/bank/problems", params={"include": "everything"})
    assert response.status_code == 400
    assert response.json()["error"]["machine_code"] == "bad_request"


def test_list_problems_unknown_subarea_is_400(client):
    response = client.get("/api/bank/problems", params={"subarea": "NOPE"})
    assert response.status_code == 400
    error = response.json()["error"]
    assert error["machine_code"] == "unknown_subarea"
    assert error["http_status"] == 400
    assert "NOPE" in error["human_message"]


def test_get_problem_includes_body(client):
    doc = client.get("/api/bank/problems/a1").json()
    assert doc["problem"]["statement"] == "Statement for a1.\n"
    assert doc["problem"]["solution"] == "Solution for a1.\n"


def test_get_unknown_problem_is_404(client):
    response = client.get("/api/bank/problems/zz")
    assert response.status_code == 404
    assert response.json()["error"]["machine_code"] == "unknown_problem"


# ---------------- session lifecycle ----------------


def test_create_session(client):
    doc = _create(client)
    assert doc["status"] == "active"
    assert doc["base_seed"] == "9"
    assert doc["blueprint"]["target_points"] == 15
    assert len(doc["session_id"]) == 16


def test_create_without_seed_generates_one(client):
    doc = _create(client, seed=None)
    assert int(doc["base_seed"]) >= 0


def test_create_without_blueprint_is_400(client):
    response = client.post("/api/sessions", json={})
    assert response.status_code == 400
    assert response.json()["error"]["machine_code"] == "invalid_blueprint"


def test_create_duplicate_seed_is_409(client):
    _create(client)
    response = client.post(
        "/api/sessions", json={"blueprint": BLUEPRINT, "base_seed": "9"}
    )
    assert response.status_code == 409
    assert response.json()["error"]["machine_code"] == "session_exists"


def test_step_and_view(client):
    sid = _create(client)["session_id"]
    step = client.post(f"/api/sessions/{sid}/step", json={}).json()
    assert step["step_number"] == 1
    assert step["outcome"]["kind"] == "draft"
    assert step["outcome"]["metrics"]["total_points"] == 15
    assert step["seed"].isdigit()

    view = client.get(f"/api/sessions/{sid}").json()
    assert view["session_id"] == sid
    assert len(view["steps"]) == 1
    assert view["steps"][0]["outcome"]["assignment"] == step["outcome"]["assignment"]


def test_step_with_decision_vector(client):
    sid = _create(client)["session_id"]
    client.post(f"/api/sessions/{sid}/step", json={})
    step = client.post(
        f"/api/sessions/{sid}/step",
        json={"decision_vector": ["R", {"M": "b2"}]},
    ).json()
    assert step["outcome"]["assignment"] == ["a1", "b2"]
    assert step["decision_vector"] == ["R", {"M": "b2"}]


def test_step_invalid_dv_is_400(client):
    sid = _create(client)["session_id"]
    response = client.post(
        f"/api/sessions/{sid}/step",
        json={"decision_vector": ["R", {"M": "a1"}]},  # wrong subarea for slot 2
    )
    assert response.status_code == 400
    assert response.json()["error"]["machine_code"] == "invalid_decision_vector"


def test_infeasible_step_is_200_with_report(client):
    blueprint = dict(BLUEPRINT, target_points=7)
    sid = _create(client, blueprint=blueprint)["session_id"]
    response = client.post(f"/api/sessions/{sid}/step", json={})
    assert response.status_code == 200
    outcome = response.json()["outcome"]
    assert outcome["kind"] == "infeasible"
    assert outcome["feasibility"]["achievable_point_range"] == {"min": 10, "max": 20}
    assert outcome["feasibility"]["completion_count"] == "0"


def test_unknown_session_is_404(client):
    response = client.post("/api/sessions/feedfacefeedface/step", json={})
    assert response.status_code == 404
    assert response.json()["error"]["machine_code"] == "session_not_found"


def test_accept_updates_bank_and_terminates(client, toy_bank_dir):
    sid = _create(client)["session_id"]
    drawn = client.post(f"/api/sessions/{sid}/step", json={}).json()
    accepted = client.post(f"/api/sessions/{sid}/accept")
    assert accepted.status_code == 200
    assert accepted.json()["status"] == "accepted"
    assert accepted.json()["assignment"] == drawn["outcome"]["assignment"]

    manifest = json.loads((toy_bank_dir / "bank.json").read_text())
    used = [p["id"] for p in manifest["problems"] if p["usage_dates"]]
    assert sorted(used) == sorted(drawn["outcome"]["assignment"])

    # the refreshed bank cache serves the updated usage dates
    listed = client.get("/api/bank/problems").json()["problems"]
    assert {p["id"] for p in listed if p["usage_dates"]} == set(used)

    again = client.post(f"/api/sessions/{sid}/accept")
    assert again.status_code == 409
    assert again.json()["error"]["machine_code"] == "terminal_state"
    stepped = client.post(f"/api/sessions/{sid}/step", json={})
    assert stepped.status_code == 409


def test_accept_without_draft_is_409(client):
    sid = _create(client, blueprint=dict(BLUEPRINT, target_points=7))["session_id"]
    client.post(f"/api/sessions/{sid}/step", json={})
    response = client.post(f"/api/sessions/{sid}/accept")
    assert response.status_code == 409
    assert response.json()["error"]["machine_code"] == "no_successful_draft"


def test_abandon(client):
    sid = _create(client)["session_id"]
    response = client.post(f"/api/sessions/{sid}/abandon")
    assert response.json()["status"] == "abandoned"
    assert client.post(f"/api/sessions/{sid}/step", json={}).status_code == 409


# ---------------- render ----------------


def test_render_exam_text(client, toy_bank_dir):
    sid = _create(client)["session_id"]
    client.post(f"/api/sessions/{sid}/step", json={})
    response = client.get(f"/api/sessions/{sid}/render")
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("text/plain")
    body = response.text
    assert body.startswith("\\documentclass[11pt]{article}\n")
    assert "Total: 15 points" in body


def test_render_solutions_json(client):
    sid = _create(client)["session_id"]
    client.post(f"/api/sessions/{sid}/step", json={})
    doc = client.get(
        f"/api/sessions/{sid}/render", params={"kind": "solutions", "format": "json"}
    ).json()
    assert doc["kind"] == "solutions"
    assert "\\section*{Solution 1}" in doc["content"]
    assert doc["warnings"] == []


def test_render_bad_kind_is_400(client):
    sid = _create(client)["session_id"]
    response = client.get(f"/api/sessions/{sid}/render", params={"kind": "pdf"})
    assert response.status_code == 400


def test_render_without_draft_is_409(client):
    sid = _create(client)["session_id"]
    response = client.get(f"/api/sessions/{sid}/render")
    assert response.status_code == 409


# ---------------- malformed request envelope ----------------


def test_request_validation_uses_error_envelope(client):
    response = client.post("/api/sessions", json=["not", "an", "object"])
    assert response.status_code == 422
    error = response.json()["error"]
    assert error["machine_code"] == "request_invalid"


def test_bad_seed_is_400(client):
    response = client.post(
        "/api/sessions", json={"blueprint": BLUEPRINT, "base_seed": "2**64"}
    )
    assert response.status_code == 400
    assert response.json()["error"]["machine_code"] == "bad_request"


# ---------------- restart and concurrency ----------------


def test_sessions_survive_process_restart(toy_bank_dir):
    with TestClient(create_app(toy_bank_dir)) as first:
        sid = _create(first)["session_id"]
        step1 = first.post(f"/api/sessions/{sid}/step", json={}).json()

    with TestClient(create_app(toy_bank_dir)) as second:  # fresh state
        view = second.get(f"/api/sessions/{sid}").json()
        assert view["steps"][0]["outcome"]["assignment"] == step1["outcome"]["assignment"]
        step2 = second.post(f"/api/sessions/{sid}/step", json={}).json()
        assert step2["step_number"] == 2


def test_concurrent_steps_serialize(client):
    sid = _create(client)["session_id"]
    results = []

    def hit():
        results.append(client.post(f"/api/sessions/{sid}/step", json={}).json())

    threads = [threading.Thread(target=hit) for _ in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    numbers = sorted(r["step_number"] for r in results)
    assert numbers == [1, 2, 3, 4, 5, 6]  # strictly serialized, no reuse

    view = client.get(f"/api/sessions/{sid}")
    assert len(view.json()["steps"]) == 6
