#!/usr/bin/env python3
"""Export wire payloads for the web console's fixture-backed tests.

Drives the real service (mock backends) through the demo session and
captures the exact JSON the console consumes: status, report, refined
transcript, a fully-flagged run, the same run after an expert override,
and the audit trail. Also records the scoring-engine value the override
must produce, so console tests can assert the displayed score against
the engine rather than re-deriving math client-side.

Run from the repository root:

    python scripts/export_console_fixtures.py
"""

from __future__ import annotations

import json
import sys
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
OUT = ROOT / "frontend" / "fixtures"

sys.path.insert(0, str(ROOT / "src"))

from i2e.model.serialize import parse_rubric  # noqa: E402
from i2e.rubric import derive_item_score  # noqa: E402
from i2e.service import ServiceConfig, create_app  # noqa: E402

AUTO_LLM = f"mock:{FIXTURES / 'llm_scripts' / 'auto.json'}"
FLAG_LLM = f"mock:{FIXTURES / 'llm_scripts' / 'auto_flag.json'}"


def wait_done(client, sid, timeout=60.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        status = client.get(f"/api/v1/sessions/{sid}/status").json()
        if status["state"] in ("done", "failed"):
            assert status["state"] == "done", status
            return status
        time.sleep(0.05)
    raise RuntimeError("pipeline never finished")


def upload_and_run(client, llm_endpoint):
    payload = (FIXTURES / "session_demo.json").read_bytes()
    resp = client.post(
        "/api/v1/sessions",
        files={"audio": ("session.bin", payload, "application/octet-stream")},
        data={"meta": json.dumps({"session_id": "sess-demo",
                                  "duration_ms": 48000})})
    sid = resp.json()["session_id"]
    client.post(f"/api/v1/sessions/{sid}/run",
                json={"rubrics": ["sstew"],
                      "llm": {"endpoint": llm_endpoint}})
    return sid


def dump(name: str, payload) -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    path = OUT / name
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2,
                               sort_keys=False) + "\n", encoding="utf-8")
    print(f"wrote {path}")


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        config = ServiceConfig(data_root=Path(tmp) / "data", workers=2,
                               lexicon_path=FIXTURES / "lexicon.json")
        app = create_app(config)
        with TestClient(app) as client:
            client.put("/api/v1/rubrics/sstew",
                       content=(FIXTURES / "rubrics" / "sstew_demo.json")
                       .read_bytes()).raise_for_status()

            # clean run: everything valid
            sid = upload_and_run(client, AUTO_LLM)
            status = wait_done(client, sid)
            dump("status_done.json", status)
            dump("report_done.json",
                 client.get(f"/api/v1/sessions/{sid}/report").json())
            dump("transcript_refined.json",
                 client.get(f"/api/v1/sessions/{sid}/transcript").json())

            # flagged run: every judgment hallucinated, then one override
            flagged_sid = upload_and_run(client, FLAG_LLM)
            dump("status_flagged_done.json", wait_done(client, flagged_sid))
            report_flagged = client.get(
                f"/api/v1/sessions/{flagged_sid}/report").json()
            dump("report_flagged.json", report_flagged)

            indicator_id = "SSTEW.D1.L1.1"
            client.post(
                f"/api/v1/sessions/{flagged_sid}/indicators/"
                f"{indicator_id}/override",
                json={"new_observed": False, "expert_id": "expert-console",
                      "note": "no greeting audible on tape"}).raise_for_status()
            report_after = client.get(
                f"/api/v1/sessions/{flagged_sid}/report").json()
            dump("report_flagged_after_override.json", report_after)
            dump("audit_after_override.json",
                 client.get(f"/api/v1/sessions/{flagged_sid}/audit").json())
            dump("sessions_list.json", client.get("/api/v1/sessions").json())

            # scoring-engine value the override must yield for its item
            rubric = parse_rubric((FIXTURES / "rubrics" / "sstew_demo.json")
                                  .read_bytes())
            item = next(it for it in rubric.items if it.id == "SSTEW.D1")
            judgments = {e["indicator_id"]: e["observed"]
                         for it in report_after["scales"]["sstew"]["items"]
                         for e in it["indicators"]}
            oracle = derive_item_score(item, judgments)
            displayed = next(
                it["score"] for it in report_after["scales"]["sstew"]["items"]
                if it["item_id"] == "SSTEW.D1")
            assert displayed == oracle.score, (displayed, oracle.score)
            dump("override_meta.json", {
                "session_id": flagged_sid,
                "indicator_id": indicator_id,
                "item_id": "SSTEW.D1",
                "score_before": next(
                    it["score"] for it in report_flagged["scales"]["sstew"]["items"]
                    if it["item_id"] == "SSTEW.D1"),
                "score_after_engine": oracle.score,
                "accessible_indicators": sum(
                    1 for ind in rubric.all_indicators()
                    if ind.language_accessible),
            })


if __name__ == "__main__":
    main()
