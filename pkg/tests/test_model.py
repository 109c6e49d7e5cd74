import json
import unicodedata

import pytest

from i2e.errors import InvariantViolation, ParseError
from i2e.model import (
    Indicator,
    Provenance,
    Scale,
    Segment,
    SpeakerRole,
    Transcript,
    canonical_serialize,
    parse_annotation,
    parse_rubric,
    parse_transcript,
    validate_transcript,
)
from i2e.model.serialize import judgment_to_dict, parse_judgments

from .conftest import make_transcript


class TestValidateTranscript:
    def test_well_formed_transcript_has_no_violations(self):
        t = make_transcript(["早上好", "老师好", "开始吧"])
        assert validate_transcript(t) == []

    def test_zero_duration_segment_flagged(self):
        t = Transcript("s", Provenance.RAW, (
            Segment("a", SpeakerRole.TEACHER, 0, 0, "text"),))
        codes = [v.code for v in validate_transcript(t)]
        assert "NonPositiveDuration" in codes

    def test_dropped_segment_vs_raw_parent_flagged(self):
        raw = make_transcript(["一", "二", "三"])
        refined = Transcript(raw.session_id, Provenance.REFINED,
                             raw.segments[:2])
        codes = [v.code for v in validate_transcript(refined, raw_parent=raw)]
        assert "SegmentSetMismatch" in codes

    def test_duplicate_id_flagged(self):
        t = Transcript("s", Provenance.RAW, (
            Segment("a", SpeakerRole.TEACHER, 0, 10, "x"),
            Segment("a", SpeakerRole.CHILD, 10, 20, "y"),
        ))
        assert "DuplicateId" in [v.code for v in validate_transcript(t)]

    def test_unsorted_segments_flagged(self):
        t = Transcript("s", Provenance.RAW, (
            Segment("b", SpeakerRole.TEACHER, 50, 60, "x"),
            Segment("a", SpeakerRole.CHILD, 0, 10, "y"),
        ))
        assert "OrderViolation" in [v.code for v in validate_transcript(t)]

    def test_empty_text_flagged(self):
        t = Transcript("s", Provenance.RAW, (
            Segment("a", SpeakerRole.TEACHER, 0, 10, "   "),))
        assert "EmptyText" in [v.code for v in validate_transcript(t)]

    @pytest.mark.parametrize("mutate,code", [
        (lambda segs: (segs[0],
                       Segment("seg2", SpeakerRole.TEACHER, segs[1].start_ms,
                               segs[1].end_ms, segs[1].text)),
         "SpeakerMismatch"),
        (lambda segs: (segs[0],
                       Segment("seg2", segs[1].speaker, segs[1].start_ms + 1,
                               segs[1].end_ms, segs[1].text)),
         "TimestampMismatch"),
        (lambda segs: (segs[1], segs[0]), "OrderMismatch"),
    ])
    def test_refinement_structural_edits_flagged(self, mutate, code):
        raw = make_transcript(["你好", "大家好"])
        refined = Transcript(raw.session_id, Provenance.REFINED,
                             mutate(list(raw.segments)))
        codes = [v.code for v in validate_transcript(refined, raw_parent=raw)]
        assert code in codes

    def test_text_only_change_is_clean(self):
        raw = make_transcript(["进去了", "好"])
        refined = raw.with_texts({"seg1": "进区了"}, Provenance.REFINED)
        assert validate_transcript(refined, raw_parent=raw) == []


class TestCanonicalSerialization:
    def test_transcript_round_trip(self):
        t = make_transcript(["早上好，小朋友们！", "老师早上好"])
        assert parse_transcript(canonical_serialize(t)) == t

    def test_rubric_round_trip(self, demo_rubric_bytes):
        rubric = parse_rubric(demo_rubric_bytes)
        assert parse_rubric(canonical_serialize(rubric)) == rubric

    def test_serialization_is_deterministic(self):
        t = make_transcript(["甲", "乙"])
        t2 = make_transcript(["甲", "乙"])
        assert canonical_serialize(t) == canonical_serialize(t2)

    def test_source_meta_key_order_is_stable(self):
        t1 = Transcript("s", Provenance.RAW,
                        (Segment("a", SpeakerRole.TEACHER, 0, 10, "x"),),
                        {"zeta": "1", "alpha": "2"})
        t2 = Transcript("s", Provenance.RAW,
                        (Segment("a", SpeakerRole.TEACHER, 0, 10, "x"),),
                        {"alpha": "2", "zeta": "1"})
        assert canonical_serialize(t1) == canonical_serialize(t2)

    def test_truncated_bytes_raise_parse_error_with_offset(self):
        data = canonical_serialize(make_transcript(["好"]))[:-5]
        with pytest.raises(ParseError) as err:
            parse_transcript(data)
        assert err.value.offset is not None

    def test_bad_field_type_reports_path(self):
        doc = {"session_id": "s", "provenance": "raw",
               "segments": [{"id": "a", "speaker": "teacher",
                             "start_ms": "soon", "end_ms": 5, "text": "x"}]}
        with pytest.raises(ParseError) as err:
            parse_transcript(json.dumps(doc))
        assert "segments[0]" in err.value.path

    def test_output_is_utf8_unescaped(self):
        data = canonical_serialize(make_transcript(["进区了"]))
        assert "进区了" in data.decode("utf-8")

    def test_judgment_round_trip_with_override(self):
        from i2e.model import Evidence, IndicatorJudgment, ValidationStatus
        j = IndicatorJudgment(
            indicator_id="X.1.L1.1", observed=True,
            evidence=(Evidence("s1", "quote"),), rationale="r",
            suggestion=None, validation=ValidationStatus.OVERRIDDEN,
            overridden_by="expert-9", model_meta={"model_id": "m"})
        parsed = parse_judgments(json.dumps([judgment_to_dict(j)]))
        assert parsed == [j]


class TestTypeInvariants:
    def test_text_is_nfc_normalized(self):
        decomposed = unicodedata.normalize("NFD", "café进区")
        seg = Segment("a", SpeakerRole.TEACHER, 0, 10, decomposed)
        assert seg.text == unicodedata.normalize("NFC", decomposed)

    def test_speaker_roles_are_closed(self):
        assert {r.value for r in SpeakerRole} == {"teacher", "child", "unknown"}

    def test_indicator_rejects_bad_level(self):
        with pytest.raises(InvariantViolation):
            Indicator(id="X.1.L4.1", scale=Scale.SSTEW, item_id="X.1",
                      level=4, description="d")

    def test_overridden_requires_expert(self):
        from i2e.model import IndicatorJudgment, ValidationStatus
        with pytest.raises(InvariantViolation):
            IndicatorJudgment(indicator_id="i", observed=False,
                              validation=ValidationStatus.OVERRIDDEN)

    def test_audio_session_requires_positive_duration(self):
        from i2e.model import AudioSession
        with pytest.raises(InvariantViolation):
            AudioSession(session_id="s", duration_ms=0)


class TestRubricParsing:
    def test_minimal_rubric_loads(self):
        doc = {"scale": "sstew", "version": "t", "items": [{
            "id": "SSTEW.X", "scale": "sstew", "dimension": "D", "title": "T",
            "indicators": [{"id": "SSTEW.X.L1.1", "scale": "sstew",
                            "item_id": "SSTEW.X", "level": 1,
                            "description": "d", "positive_examples": [],
                            "negative_examples": [],
                            "language_accessible": True}]}]}
        rubric = parse_rubric(json.dumps(doc))
        assert len(rubric.items) == 1

    def test_duplicate_indicator_ids_rejected(self):
        ind = {"id": "SSTEW.X.L1.1", "scale": "sstew", "item_id": "SSTEW.X",
               "level": 1, "description": "d", "positive_examples": [],
               "negative_examples": [], "language_accessible": True}
        doc = {"scale": "sstew", "version": "t", "items": [{
            "id": "SSTEW.X", "scale": "sstew", "dimension": "D", "title": "T",
            "indicators": [ind, dict(ind)]}]}
        with pytest.raises(InvariantViolation):
            parse_rubric(json.dumps(doc))

    def test_standard_profile_counts_enforced(self, fixtures_dir):
        doc = json.loads(
            (fixtures_dir / "rubrics" / "ecqrs_ec_standard.json").read_text(
                encoding="utf-8"))
        # drop one indicator: 111 != 112 must be rejected
        doc["items"][0]["indicators"] = doc["items"][0]["indicators"][1:]
        with pytest.raises(InvariantViolation, match="112"):
            parse_rubric(json.dumps(doc))

    def test_standard_profiles_load(self, fixtures_dir):
        ecqrs = parse_rubric((fixtures_dir / "rubrics" /
                              "ecqrs_ec_standard.json").read_bytes())
        sstew = parse_rubric((fixtures_dir / "rubrics" /
                              "sstew_standard.json").read_bytes())
        assert (len(ecqrs.items), len(ecqrs.all_indicators())) == (17, 112)
        assert (len(sstew.items), len(sstew.all_indicators())) == (14, 94)


class TestAnnotationParsing:
    def test_zero_one_coding(self):
        doc = {"session_id": "s", "scale": "sstew", "assessor_id": "a",
               "judgments": {"SSTEW.X.L1.1": 1, "SSTEW.X.L1.2": 0}}
        ann = parse_annotation(json.dumps(doc))
        assert ann.judgments == {"SSTEW.X.L1.1": True, "SSTEW.X.L1.2": False}

    def test_non_binary_value_rejected(self):
        doc = {"session_id": "s", "scale": "sstew", "assessor_id": "a",
               "judgments": {"SSTEW.X.L1.1": 2}}
        with pytest.raises(ParseError):
            parse_annotation(json.dumps(doc))
