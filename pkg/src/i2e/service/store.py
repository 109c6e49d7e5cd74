"""File-backed persistence: one directory per session, canonical JSON
artifacts, job state in an atomically-replaced file, append-only audit
log, and a queue directory that survives restarts.

Everything is plain inspectable files on purpose: the deployment scale
(hundreds of sessions) does not justify a database, and reviewers can
diff artifacts directly.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..model.serialize import dumps_canonical

STAGES = ("transcribing", "refining", "evaluating", "scoring")

# Artifacts a stage must persist before the pipeline may advance.
STAGE_ARTIFACTS: dict[str, tuple[str, ...]] = {
    "transcribing": ("raw_transcript.json",),
    "refining": ("refined_transcript.json", "refine_audit.json"),
    "evaluating": ("judgments.json",),
    "scoring": ("scale_summaries.json", "report.json"),
}

TERMINAL_DONE = "done"
TERMINAL_FAILED = "failed"
STATE_CREATED = "created"


@dataclass
class JobState:
    session_id: str
    state: str = STATE_CREATED
    failed_stage: str | None = None
    failure_reason: str | None = None
    transitions: list[dict] = field(default_factory=list)
    retry_count: dict[str, int] = field(default_factory=dict)
    stage_ms: dict[str, int] = field(default_factory=dict)
    interventions: int = 0
    run_options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "state": self.state,
            "failed_stage": self.failed_stage,
            "failure_reason": self.failure_reason,
            "transitions": self.transitions,
            "retry_count": self.retry_count,
            "stage_ms": self.stage_ms,
            "interventions": self.interventions,
            "run_options": self.run_options,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "JobState":
        return cls(
            session_id=doc["session_id"],
            state=doc.get("state", STATE_CREATED),
            failed_stage=doc.get("failed_stage"),
            failure_reason=doc.get("failure_reason"),
            transitions=list(doc.get("transitions", [])),
            retry_count=dict(doc.get("retry_count", {})),
            stage_ms=dict(doc.get("stage_ms", {})),
            interventions=int(doc.get("interventions", 0)),
            run_options=dict(doc.get("run_options", {})),
        )

    def transition(self, state: str) -> None:
        self.state = state
        self.transitions.append({"state": state, "at_ms": int(time.time() * 1000)})


class SessionStore:
    def __init__(self, data_root: str | Path):
        self.root = Path(data_root)
        self.sessions_dir = self.root / "sessions"
        self.rubrics_dir = self.root / "rubrics"
        self.idempotency_dir = self.root / "idempotency"
        self.queue_dir = self.root / "queue"
        for d in (self.sessions_dir, self.rubrics_dir,
                  self.idempotency_dir, self.queue_dir):
            d.mkdir(parents=True, exist_ok=True)

    # --- sessions ---------------------------------------------------------

    def session_dir(self, session_id: str) -> Path:
        return self.sessions_dir / session_id

    def session_exists(self, session_id: str) -> bool:
        return (self.session_dir(session_id) / "state.json").exists()

    def session_ids(self) -> list[str]:
        return sorted(p.name for p in self.sessions_dir.iterdir()
                      if (p / "state.json").exists())

    def create_session(self, session_id: str, meta: dict) -> None:
        sdir = self.session_dir(session_id)
        sdir.mkdir(parents=True, exist_ok=True)
        self._atomic_write(sdir / "meta.json", dumps_canonical(meta))
        state = JobState(session_id=session_id)
        state.transition(STATE_CREATED)
        self.save_state(state)

    def read_meta(self, session_id: str) -> dict:
        with open(self.session_dir(session_id) / "meta.json", "rb") as fh:
            return json.load(fh)

    # --- job state ----------------------------------------------------------

    def load_state(self, session_id: str) -> JobState:
        with open(self.session_dir(session_id) / "state.json", "rb") as fh:
            return JobState.from_dict(json.load(fh))

    def save_state(self, state: JobState) -> None:
        path = self.session_dir(state.session_id) / "state.json"
        self._atomic_write(path, dumps_canonical(state.to_dict()))

    # --- artifacts ------------------------------------------------------------

    def write_artifact(self, session_id: str, name: str, data: bytes) -> None:
        self._atomic_write(self.session_dir(session_id) / name, data)

    def read_artifact(self, session_id: str, name: str) -> bytes | None:
        path = self.session_dir(session_id) / name
        if not path.exists():
            return None
        return path.read_bytes()

    def has_artifact(self, session_id: str, name: str) -> bool:
        return (self.session_dir(session_id) / name).exists()

    def stage_complete(self, session_id: str, stage: str) -> bool:
        return all(self.has_artifact(session_id, name)
                   for name in STAGE_ARTIFACTS[stage])

    def write_blob(self, session_id: str, name: str, data: bytes) -> Path:
        path = self.session_dir(session_id) / name
        self._atomic_write(path, data)
        return path

    # --- audit log (append-only JSONL) ---------------------------------------

    def append_audit(self, session_id: str, entry: dict) -> None:
        entry = dict(entry)
        entry.setdefault("at_ms", int(time.time() * 1000))
        line = json.dumps(entry, ensure_ascii=False, sort_keys=True)
        with open(self.session_dir(session_id) / "audit.log", "a",
                  encoding="utf-8") as fh:
            fh.write(line + "\n")

    def read_audit(self, session_id: str) -> list[dict]:
        path = self.session_dir(session_id) / "audit.log"
        if not path.exists():
            return []
        entries = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    entries.append(json.loads(line))
        return entries

    # --- idempotency ----------------------------------------------------------

    @staticmethod
    def payload_hash(payload: bytes) -> str:
        return hashlib.sha256(payload).hexdigest()

    def idempotency_lookup(self, key: str) -> dict | None:
        path = self.idempotency_dir / f"{_safe_name(key)}.json"
        if not path.exists():
            return None
        with open(path, "rb") as fh:
            return json.load(fh)

    def idempotency_record(self, key: str, payload_sha: str,
                           session_id: str) -> None:
        path = self.idempotency_dir / f"{_safe_name(key)}.json"
        self._atomic_write(path, dumps_canonical(
            {"key": key, "payload_sha": payload_sha, "session_id": session_id}))

    # --- rubric store -----------------------------------------------------------

    def put_rubric(self, scale_key: str, data: bytes) -> None:
        self._atomic_write(self.rubrics_dir / f"{_safe_name(scale_key)}.json", data)

    def get_rubric_bytes(self, scale_key: str) -> bytes | None:
        path = self.rubrics_dir / f"{_safe_name(scale_key)}.json"
        if not path.exists():
            return None
        return path.read_bytes()

    def rubric_keys(self) -> list[str]:
        return sorted(p.stem for p in self.rubrics_dir.glob("*.json"))

    # --- queue --------------------------------------------------------------------

    def enqueue(self, session_id: str, options: dict) -> None:
        path = self.queue_dir / f"{_safe_name(session_id)}.json"
        self._atomic_write(path, dumps_canonical(
            {"session_id": session_id, "options": options}))

    def dequeue(self, session_id: str) -> None:
        path = self.queue_dir / f"{_safe_name(session_id)}.json"
        if path.exists():
            path.unlink()

    def pending_tickets(self) -> list[dict]:
        tickets = []
        for path in sorted(self.queue_dir.glob("*.json")):
            with open(path, "rb") as fh:
                tickets.append(json.load(fh))
        return tickets

    # --- internals -------------------------------------------------------------------

    @staticmethod
    def _atomic_write(path: Path, data: bytes) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)


def _safe_name(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)
