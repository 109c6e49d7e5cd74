import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from i2e.errors import BackendUnavailable
from i2e.llm import MockLlmBackend
from i2e.model.serialize import parse_rubric
from i2e.rubric import ScoringInput, derive_item_score, score_scale
from i2e.service import PipelineRunner, ServiceConfig, SessionStore, create_app

from .conftest import FIXTURES

AUTO_LLM = f"mock:{FIXTURES / 'llm_scripts' / 'auto.json'}"
FLAG_LLM = f"mock:{FIXTURES / 'llm_scripts' / 'auto_flag.json'}"
RUN_OPTIONS = {"rubrics": ["sstew"], "llm": {"endpoint": AUTO_LLM}}


def make_config(tmp_path, **overrides):
    defaults = dict(
        data_root=tmp_path / "data",
        workers=2,
        lexicon_path=FIXTURES / "lexicon.json",
        llm_endpoint=AUTO_LLM,
        asr_endpoint="mock:",
    )
    defaults.update(overrides)
    return ServiceConfig(**defaults)


@pytest.fixture()
def client(tmp_path):
    app = create_app(make_config(tmp_path))
    with TestClient(app) as c:
        yield c


def upload_audio(client, idempotency_key=None):
    payload = (FIXTURES / "session_demo.json").read_bytes()
    data = {"meta": json.dumps({"session_id": "sess-demo",
                                "duration_ms": 48000})}
    if idempotency_key:
        data["idempotency_key"] = idempotency_key
    return client.post(
        "/api/v1/sessions",
        files={"audio": ("session.bin", payload, "application/octet-stream")},
        data=data)


def upload_transcript(client, body: bytes, idempotency_key=None, meta="{}"):
    data = {"meta": meta}
    if idempotency_key:
        data["idempotency_key"] = idempotency_key
    return client.post(
        "/api/v1/sessions",
        files={"transcript": ("t.json", body, "application/json")},
        data=data)


def put_demo_rubric(client):
    resp = client.put("/api/v1/rubrics/sstew",
                      content=(FIXTURES / "rubrics" / "sstew_demo.json")
                      .read_bytes())
    assert resp.status_code == 200, resp.text
    return resp


def wait_for_state(client, sid, states=("done", "failed"), timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        status = client.get(f"/api/v1/sessions/{sid}/status").json()
        if status["state"] in states:
            return status
        time.sleep(0.02)
    raise AssertionError(f"session {sid} never reached {states}: {status}")


def run_to_done(client, options=RUN_OPTIONS):
    put_demo_rubric(client)
    sid = upload_audio(client).json()["session_id"]
    resp = client.post(f"/api/v1/sessions/{sid}/run", json=options)
    assert resp.status_code == 202, resp.text
    status = wait_for_state(client, sid)
    assert status["state"] == "done", status
    return sid, status


class TestUpload:
    def test_transcript_upload_creates_session(self, client):
        from i2e.model import canonical_serialize
        from .conftest import make_transcript
        body = canonical_serialize(make_transcript(["你好", "大家好"],
                                                   session_id="sess-up"))
        resp = upload_transcript(client, body)
        assert resp.status_code == 201
        sid = resp.json()["session_id"]
        status = client.get(f"/api/v1/sessions/{sid}/status").json()
        assert status["state"] == "created"

    def test_idempotent_replay_returns_same_session(self, client):
        first = upload_audio(client, idempotency_key="key-1")
        second = upload_audio(client, idempotency_key="key-1")
        assert first.status_code == 201 and second.status_code == 200
        assert first.json()["session_id"] == second.json()["session_id"]
        assert len(client.get("/api/v1/sessions").json()) == 1

    def test_same_key_different_payload_conflicts(self, client):
        upload_audio(client, idempotency_key="key-2")
        resp = upload_transcript(client, b'{"nope', idempotency_key="key-2")
        assert resp.status_code == 409

    def test_corrupt_transcript_rejected_with_details(self, client):
        resp = upload_transcript(client, b'{"session_id": "x", "provenance"')
        assert resp.status_code == 400
        assert "malformed" in json.dumps(resp.json())

    def test_invalid_transcript_lists_violations(self, client):
        body = json.dumps({
            "session_id": "bad", "provenance": "raw",
            "segments": [{"id": "a", "speaker": "teacher", "start_ms": 10,
                          "end_ms": 10, "text": "x"}]}).encode()
        resp = upload_transcript(client, body)
        assert resp.status_code == 400
        assert "NonPositiveDuration" in json.dumps(resp.json())

    def test_oversize_upload_rejected(self, tmp_path):
        app = create_app(make_config(tmp_path, max_upload_bytes=64))
        with TestClient(app) as client:
            resp = upload_audio(client)
            assert resp.status_code == 413

    def test_unknown_session_status_is_404(self, client):
        assert client.get("/api/v1/sessions/ghost/status").status_code == 404


class TestPipelineRun:
    def test_full_pipeline_reaches_done_with_all_artifacts(self, client, tmp_path):
        sid, status = run_to_done(client)
        store = SessionStore(tmp_path / "data")
        for name in ("raw_transcript.json", "refined_transcript.json",
                     "refine_audit.json", "judgments.json",
                     "scale_summaries.json", "report.json"):
            assert store.has_artifact(sid, name), name
        assert status["progress"]["indicators_done"] == 16
        assert status["progress"]["indicators_flagged"] == 0

    def test_report_contents(self, client):
        sid, _ = run_to_done(client)
        report = client.get(f"/api/v1/sessions/{sid}/report").json()
        scale = report["scales"]["sstew"]
        by_id = {item["item_id"]: item for item in scale["items"]}
        assert by_id["SSTEW.D1"]["score"] == 5
        assert by_id["SSTEW.D2"]["score"] == 4  # midpoint fired
        entries = [ind for item in scale["items"] for ind in item["indicators"]]
        assert len(entries) == 16  # one per language-accessible indicator
        evidenced = [e for e in entries if e["observed"]]
        for entry in evidenced:
            assert entry["evidence"], entry["indicator_id"]
            assert entry["evidence"][0]["start_ms"] is not None
        assert report["efficiency"]["speedup"] is None  # mocks run sub-minute
        assert report["flags"]["needs_expert_review"] == 0

    def test_report_not_ready_is_409(self, client):
        sid = upload_audio(client).json()["session_id"]
        assert client.get(f"/api/v1/sessions/{sid}/report").status_code == 409

    def test_report_plain_text_rendering(self, client):
        sid, _ = run_to_done(client)
        resp = client.get(f"/api/v1/sessions/{sid}/report",
                          params={"format": "text"})
        assert resp.status_code == 200
        assert resp.headers["content-type"].startswith("text/plain")
        text = resp.text
        assert f"session {sid}" in text
        assert "SSTEW.D1" in text and "score 5" in text
        assert "@00:00" in text  # evidence timestamps rendered mm:ss

    def test_run_requires_stored_rubric(self, client):
        sid = upload_audio(client).json()["session_id"]
        resp = client.post(f"/api/v1/sessions/{sid}/run",
                           json={"rubrics": ["sstew"]})
        assert resp.status_code == 422

    def test_transcript_upload_skips_transcription(self, client, tmp_path):
        put_demo_rubric(client)
        from i2e.asr.mock import load_fixture, mock_transcribe
        from i2e.model import canonical_serialize
        out = mock_transcribe(load_fixture(FIXTURES / "session_demo.json"))
        resp = upload_transcript(client,
                                 canonical_serialize(out.result.transcript))
        sid = resp.json()["session_id"]
        client.post(f"/api/v1/sessions/{sid}/run", json=RUN_OPTIONS)
        status = wait_for_state(client, sid)
        assert status["state"] == "done"
        audit = client.get(f"/api/v1/sessions/{sid}/audit").json()
        started = [e["stage"] for e in audit if e["type"] == "stage_started"]
        assert "transcribing" not in started


class TestFailureAndResume:
    def test_eval_hard_failure_keeps_earlier_artifacts(self, client,
                                                       tmp_path, monkeypatch):
        put_demo_rubric(client)
        sid = upload_audio(client).json()["session_id"]

        real_backend = MockLlmBackend({"behavior": "auto"})

        class EvalDownBackend:
            context_limit = None

            def generate(self, req):
                if req.response_schema_id == "eval-output":
                    raise BackendUnavailable("model service down", attempts=3)
                return real_backend.generate(req)

        import i2e.service.jobs as jobs_mod
        monkeypatch.setattr(jobs_mod, "make_llm_backend",
                            lambda *a, **k: EvalDownBackend())
        client.post(f"/api/v1/sessions/{sid}/run", json={"rubrics": ["sstew"]})
        status = wait_for_state(client, sid)
        assert status["state"] == "failed"
        assert status["failed_stage"] == "evaluating"
        store = SessionStore(tmp_path / "data")
        assert store.has_artifact(sid, "raw_transcript.json")
        assert store.has_artifact(sid, "refined_transcript.json")
        assert not store.has_artifact(sid, "judgments.json")

        # recover: good backend again, rerun resumes at evaluation
        monkeypatch.undo()
        resp = client.post(f"/api/v1/sessions/{sid}/run", json=RUN_OPTIONS)
        assert resp.status_code == 202
        status = wait_for_state(client, sid)
        assert status["state"] == "done"
        audit = client.get(f"/api/v1/sessions/{sid}/audit").json()
        started = [e["stage"] for e in audit if e["type"] == "stage_started"]
        assert started.count("refining") == 1
        assert started.count("evaluating") == 2

    def test_mid_evaluation_progress_and_run_conflict(self, client,
                                                      tmp_path, monkeypatch):
        put_demo_rubric(client)
        sid = upload_audio(client).json()["session_id"]
        gate = threading.Event()
        real_backend = MockLlmBackend({"behavior": "auto"})

        class GatedBackend:
            context_limit = None

            def generate(self, req):
                if req.response_schema_id == "eval-output":
                    assert gate.wait(timeout=30)
                return real_backend.generate(req)

        import i2e.service.jobs as jobs_mod
        monkeypatch.setattr(jobs_mod, "make_llm_backend",
                            lambda *a, **k: GatedBackend())
        client.post(f"/api/v1/sessions/{sid}/run", json={"rubrics": ["sstew"]})
        status = wait_for_state(client, sid, states=("evaluating",))
        progress = status["progress"]
        assert progress["indicators_total"] == 16
        assert progress["indicators_done"] < progress["indicators_total"]

        conflict = client.post(f"/api/v1/sessions/{sid}/run",
                               json={"rubrics": ["sstew"]})
        assert conflict.status_code == 409

        gate.set()
        status = wait_for_state(client, sid)
        assert status["state"] == "done"

    def test_kill_and_resume_matches_uninterrupted_run(self, tmp_path):
        def ingest(root):
            config = make_config(root)
            app = create_app(config)
            with TestClient(app) as c:
                put_demo_rubric(c)
                sid = upload_audio(c).json()["session_id"]
            store = SessionStore(config.data_root)
            state = store.load_state(sid)
            state.run_options = RUN_OPTIONS
            store.save_state(state)
            return config, store, sid

        config_a, store_a, sid_a = ingest(tmp_path / "a")
        PipelineRunner(store_a, config_a).run_session(sid_a)
        baseline = {
            name: store_a.read_artifact(sid_a, name)
            for name in ("raw_transcript.json", "refined_transcript.json",
                         "refine_audit.json", "judgments.json",
                         "scale_summaries.json", "report.json")}

        config_b, store_b, sid_b = ingest(tmp_path / "b")
        runner = PipelineRunner(store_b, config_b)
        runner.run_session(sid_b, stop_after="refining")
        assert store_b.stage_complete(sid_b, "refining")
        assert not store_b.has_artifact(sid_b, "judgments.json")
        # fresh runner, same store: pick up where the dead worker stopped
        PipelineRunner(store_b, config_b).run_session(sid_b)
        for name, data in baseline.items():
            assert store_b.read_artifact(sid_b, name) == data, name


class TestOverride:
    def test_override_rescores_item_to_oracle_value(self, client):
        sid, _ = run_to_done(client)
        resp = client.post(
            f"/api/v1/sessions/{sid}/indicators/SSTEW.D2.L5.3/override",
            json={"new_observed": True, "expert_id": "expert-7",
                  "note": "notebook visible on shelf recording"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["validation"] == "overridden"
        assert body["overridden_by"] == "expert-7"

        report = client.get(f"/api/v1/sessions/{sid}/report").json()
        items = {i["item_id"]: i for i in report["scales"]["sstew"]["items"]}
        # with all three level-5 indicators true the item climbs to 5
        rubric = parse_rubric((FIXTURES / "rubrics" / "sstew_demo.json")
                              .read_bytes())
        item = [it for it in rubric.items if it.id == "SSTEW.D2"][0]
        judgments = {e["indicator_id"]: e["observed"]
                     for it in report["scales"]["sstew"]["items"]
                     for e in it["indicators"]}
        want = derive_item_score(item, judgments)
        assert items["SSTEW.D2"]["score"] == want.score == 5

    def test_override_flagged_judgment_resolves_provisional(self, client):
        put_demo_rubric(client)
        sid = upload_audio(client).json()["session_id"]
        client.post(f"/api/v1/sessions/{sid}/run",
                    json={"rubrics": ["sstew"],
                          "llm": {"endpoint": FLAG_LLM}})
        status = wait_for_state(client, sid)
        assert status["state"] == "done"
        report = client.get(f"/api/v1/sessions/{sid}/report").json()
        assert report["flags"]["needs_expert_review"] == 16
        assert all(item["provisional"]
                   for item in report["scales"]["sstew"]["items"])

        for ind_id in [e["indicator_id"]
                       for item in report["scales"]["sstew"]["items"]
                       for e in item["indicators"]
                       if item["item_id"] == "SSTEW.D1"]:
            client.post(
                f"/api/v1/sessions/{sid}/indicators/{ind_id}/override",
                json={"new_observed": False, "expert_id": "expert-7"})
        report = client.get(f"/api/v1/sessions/{sid}/report").json()
        items = {i["item_id"]: i for i in report["scales"]["sstew"]["items"]}
        assert items["SSTEW.D1"]["provisional"] is False
        assert items["SSTEW.D1"]["score"] == 1
        assert items["SSTEW.D2"]["provisional"] is True

    def test_missing_expert_id_is_422(self, client):
        sid, _ = run_to_done(client)
        resp = client.post(
            f"/api/v1/sessions/{sid}/indicators/SSTEW.D1.L1.1/override",
            json={"new_observed": False})
        assert resp.status_code == 422

    def test_unknown_indicator_is_404(self, client):
        sid, _ = run_to_done(client)
        resp = client.post(
            f"/api/v1/sessions/{sid}/indicators/SSTEW.GHOST/override",
            json={"new_observed": False, "expert_id": "e"})
        assert resp.status_code == 404

    def test_two_overrides_last_wins_audit_keeps_both(self, client):
        sid, _ = run_to_done(client)
        url = f"/api/v1/sessions/{sid}/indicators/SSTEW.D1.L7.1/override"
        client.post(url, json={"new_observed": True, "expert_id": "e1"})
        client.post(url, json={"new_observed": False, "expert_id": "e2"})
        report = client.get(f"/api/v1/sessions/{sid}/report").json()
        entry = [e for item in report["scales"]["sstew"]["items"]
                 for e in item["indicators"]
                 if e["indicator_id"] == "SSTEW.D1.L7.1"][0]
        assert entry["observed"] is False
        assert entry["overridden_by"] == "e2"
        audit = client.get(f"/api/v1/sessions/{sid}/audit").json()
        overrides = [e for e in audit if e["type"] == "override"]
        assert [o["expert_id"] for o in overrides] == ["e1", "e2"]


class TestRubricEndpoints:
    def test_empty_store_lists_nothing(self, client):
        assert client.get("/api/v1/rubrics").json() == []

    def test_put_then_list(self, client):
        put_demo_rubric(client)
        listed = client.get("/api/v1/rubrics").json()
        assert listed == [{"key": "sstew", "scale": "sstew",
                           "version": "demo-0.1", "profile": None,
                           "items": 2, "indicators": 17}]

    def test_duplicate_indicator_id_rejected(self, client):
        doc = json.loads((FIXTURES / "rubrics" / "sstew_demo.json")
                         .read_text(encoding="utf-8"))
        dup = json.loads(json.dumps(doc["items"][0]["indicators"][0]))
        doc["items"][0]["indicators"].insert(1, dup)
        resp = client.put("/api/v1/rubrics/sstew",
                          content=json.dumps(doc).encode())
        assert resp.status_code == 422

    def test_scale_key_mismatch_rejected(self, client):
        resp = client.put("/api/v1/rubrics/ecqrs_ec",
                          content=(FIXTURES / "rubrics" / "sstew_demo.json")
                          .read_bytes())
        assert resp.status_code == 422


class TestAgreementEndpoint:
    def test_annotation_equal_to_judgments_maxes_agreement(self, client):
        sid, _ = run_to_done(client)
        report = client.get(f"/api/v1/sessions/{sid}/report").json()
        judgments = {e["indicator_id"]: int(e["observed"])
                     for item in report["scales"]["sstew"]["items"]
                     for e in item["indicators"]}
        annotation = {"session_id": "sess-demo", "scale": "sstew",
                      "assessor_id": "echo", "judgments": judgments}
        resp = client.post("/api/v1/metrics/agreement",
                           json={"session_id": sid, "annotation": annotation})
        assert resp.status_code == 200
        body = resp.json()
        assert body["overall_pct"] == 1.0
        for stats in body["per_dimension"].values():
            assert stats["pct_agreement"] == 1.0
            assert stats["kappa"] == 1.0  # both dimensions have mixed labels

    def test_expert_annotation_agreement(self, client):
        sid, _ = run_to_done(client)
        annotation = json.loads((FIXTURES / "annotations" /
                                 "sess_demo_expert.json").read_text(
            encoding="utf-8"))
        resp = client.post("/api/v1/metrics/agreement",
                           json={"session_id": sid, "annotation": annotation})
        assert resp.status_code == 200, resp.text
        body = resp.json()
        lang = body["per_dimension"]["Language & Communication"]
        think = body["per_dimension"]["Learning & Critical Thinking"]
        assert lang["kappa"] == pytest.approx(0.7142857, abs=1e-6)
        assert think["kappa"] == pytest.approx(0.6, abs=1e-12)
        assert body["overall_kappa"] == pytest.approx(0.6571428, abs=1e-6)
        assert body["overall_pct"] == pytest.approx(0.875)

    def test_key_mismatch_lists_difference(self, client):
        sid, _ = run_to_done(client)
        annotation = json.loads((FIXTURES / "annotations" /
                                 "sess_demo_expert.json").read_text(
            encoding="utf-8"))
        del annotation["judgments"]["SSTEW.D1.L1.1"]
        annotation["judgments"]["SSTEW.D9.L1.1"] = 1
        resp = client.post("/api/v1/metrics/agreement",
                           json={"session_id": sid, "annotation": annotation})
        assert resp.status_code == 422
        body = resp.json()
        assert body["only_model"] == ["SSTEW.D1.L1.1"]
        assert body["only_annotation"] == ["SSTEW.D9.L1.1"]

    def test_not_done_session_is_409(self, client):
        sid = upload_audio(client).json()["session_id"]
        annotation = json.loads((FIXTURES / "annotations" /
                                 "sess_demo_expert.json").read_text(
            encoding="utf-8"))
        resp = client.post("/api/v1/metrics/agreement",
                           json={"session_id": sid, "annotation": annotation})
        assert resp.status_code == 409


class TestStatsAndAuth:
    def test_stats_counts_unassisted_successes(self, client):
        sid, _ = run_to_done(client)
        stats = client.get("/api/v1/stats").json()
        assert stats["sessions_total"] == 1
        assert stats["sessions_succeeded"] == 1
        assert stats["success_rate"] == 1.0
        assert set(stats["mean_stage_minutes"]) == {
            "transcribing", "refining", "evaluating", "scoring"}

    def test_bearer_token_guard(self, tmp_path):
        app = create_app(make_config(tmp_path, bearer_token="sekret"))
        with TestClient(app) as client:
            assert client.get("/api/v1/rubrics").status_code == 401
            ok = client.get("/api/v1/rubrics",
                            headers={"Authorization": "Bearer sekret"})
            assert ok.status_code == 200
            assert client.get("/healthz").status_code == 200
