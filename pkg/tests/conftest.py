from __future__ import annotations

import json
from pathlib import Path

import pytest

from i2e.model import Provenance, Segment, SpeakerRole, Transcript

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): acceptance criterion this test decides")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("criterion")
    if marker:
        status = "PASS" if report.passed else "FAIL"
        capman = item.config.pluginmanager.getplugin("capturemanager")
        line = f"[ACCEPTANCE] {marker.args[0]}: {status}"
        if capman:
            with capman.global_and_fixture_disabled():
                print(f"\n{line}")
        else:
            print(f"\n{line}")


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def demo_session_fixture() -> dict:
    with open(FIXTURES / "session_demo.json", "r", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def demo_rubric_bytes() -> bytes:
    return (FIXTURES / "rubrics" / "sstew_demo.json").read_bytes()


@pytest.fixture(scope="session")
def lexicon_path() -> Path:
    return FIXTURES / "lexicon.json"


def make_transcript(texts, session_id="sess-t", provenance=Provenance.RAW,
                    speakers=None, seg_ms=1000):
    """Small transcript builder: consecutive segments seg1..segN."""
    segments = []
    for i, text in enumerate(texts):
        speaker = (speakers[i] if speakers else
                   (SpeakerRole.TEACHER if i % 2 == 0 else SpeakerRole.CHILD))
        segments.append(Segment(
            id=f"seg{i + 1}",
            speaker=speaker,
            start_ms=i * seg_ms,
            end_ms=(i + 1) * seg_ms,
            text=text,
        ))
    return Transcript(session_id=session_id, provenance=provenance,
                      segments=tuple(segments))
