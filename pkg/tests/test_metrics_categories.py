import copy
import json

import pytest

from i2e.asr.mock import load_fixture, mock_transcribe
from i2e.metrics import categorize_errors
from i2e.metrics.categories import (
    EXTRA_WORDS,
    HOMOPHONE,
    OMISSION,
    OTHER_SUBSTITUTION,
    PUNCTUATION_SEGMENTATION,
    SPEAKER_IDENTIFICATION,
)
from i2e.refine import HomophoneLexicon

FIXTURE_BASE = {
    "session_id": "sess-cat",
    "utterances": [
        {"id": "u1", "speaker": "teacher", "start_ms": 0, "end_ms": 2000,
         "gold_text": "小朋友们可以进区了。"},
        {"id": "u2", "speaker": "child", "start_ms": 2000, "end_ms": 4000,
         "gold_text": "我们一起看沉浮实验。"},
        {"id": "u3", "speaker": "teacher", "start_ms": 4000, "end_ms": 6000,
         "gold_text": "现在大家排好队伍出发。"},
    ],
}


@pytest.fixture(scope="module")
def lexicon(lexicon_path=None):
    from .conftest import FIXTURES
    return HomophoneLexicon.from_file(FIXTURES / "lexicon.json")


def run_categorize(fixture, lexicon):
    out = mock_transcribe(fixture)
    return categorize_errors(out.gold, out.result.transcript, lexicon), out


class TestManifestRecovery:
    def test_two_homophones_one_omission(self, lexicon):
        fixture = copy.deepcopy(FIXTURE_BASE)
        fixture["utterances"][0]["inject"] = {
            "category": "homophone", "from": "进区", "to": "进去"}
        fixture["utterances"][1]["inject"] = {
            "category": "homophone", "from": "沉浮", "to": "臣服"}
        fixture["utterances"][2]["inject"] = {
            "category": "omission", "drop": "大家"}
        report, _ = run_categorize(fixture, lexicon)
        assert report.counts[HOMOPHONE] == 2
        assert report.counts[OMISSION] == 1
        assert report.total == 3
        assert report.shares[HOMOPHONE] == pytest.approx(2 / 3)
        assert report.shares[OMISSION] == pytest.approx(1 / 3)

    def test_all_six_categories_recovered(self, lexicon, fixtures_dir):
        fixture = copy.deepcopy(FIXTURE_BASE)
        fixture["utterances"][0]["inject"] = [
            {"category": "homophone", "from": "进区", "to": "进去"}]
        fixture["utterances"][1]["inject"] = [
            {"category": "extra_words", "insert": "那个", "after": ""}]
        fixture["utterances"][2]["inject"] = [
            {"category": "other_substitution", "from": "出发", "to": "初发"}]
        fixture["utterances"].append(
            {"id": "u4", "speaker": "child", "start_ms": 6000, "end_ms": 8000,
             "gold_text": "我想先去洗手。",
             "inject": [{"category": "speaker_flip"}]})
        fixture["utterances"].append(
            {"id": "u5", "speaker": "teacher", "start_ms": 8000,
             "end_ms": 10000, "gold_text": "好的，快一点。",
             "inject": [{"category": "punctuation", "from": "，", "to": ""}]})
        fixture["utterances"].append(
            {"id": "u6", "speaker": "teacher", "start_ms": 10000,
             "end_ms": 12000, "gold_text": "回来之后我们继续讲故事。",
             "inject": [{"category": "omission", "drop": "继续"}]})
        report, out = run_categorize(fixture, lexicon)
        manifest_counts: dict[str, int] = {}
        remap = {"speaker_flip": SPEAKER_IDENTIFICATION,
                 "punctuation": PUNCTUATION_SEGMENTATION}
        for entry in out.manifest:
            key = remap.get(entry.category, entry.category)
            manifest_counts[key] = manifest_counts.get(key, 0) + 1
        assert {k: v for k, v in report.counts.items() if v} == manifest_counts
        assert sum(report.shares.values()) == pytest.approx(1.0)

    def test_demo_session_manifest_recovered_exactly(self, lexicon,
                                                     fixtures_dir):
        fixture = load_fixture(fixtures_dir / "session_demo.json")
        report, out = run_categorize(fixture, lexicon)
        assert report.counts[HOMOPHONE] == 2
        assert report.counts[EXTRA_WORDS] == 1
        assert report.counts[SPEAKER_IDENTIFICATION] == 1
        assert report.counts[PUNCTUATION_SEGMENTATION] == 1
        assert report.counts[OMISSION] == 1
        assert report.counts[OTHER_SUBSTITUTION] == 0
        assert report.total == len(out.manifest) == 6

    def test_segment_split_counts_as_segmentation_damage(self, lexicon):
        fixture = copy.deepcopy(FIXTURE_BASE)
        fixture["utterances"][0]["inject"] = {
            "category": "segmentation", "split_at": 4}
        report, _ = run_categorize(fixture, lexicon)
        assert report.counts[PUNCTUATION_SEGMENTATION] == 1
        assert report.total == 1

    def test_non_lexicon_substitution_is_other(self, lexicon):
        fixture = copy.deepcopy(FIXTURE_BASE)
        fixture["utterances"][2]["inject"] = {
            "category": "other_substitution", "from": "队伍", "to": "堆雾"}
        report, _ = run_categorize(fixture, lexicon)
        assert report.counts[OTHER_SUBSTITUTION] == 1
        assert report.counts[HOMOPHONE] == 0


class TestDegenerateCases:
    def test_identical_transcripts_report_zero_total(self, lexicon):
        report, _ = run_categorize(copy.deepcopy(FIXTURE_BASE), lexicon)
        assert report.total == 0
        assert all(v == 0 for v in report.counts.values())
        assert all(v == 0.0 for v in report.shares.values())


class TestMisrecognizedTerms:
    def test_demo_fixture_term_table(self, fixtures_dir):
        from i2e.metrics import misrecognized_terms
        out = mock_transcribe(load_fixture(fixtures_dir / "session_demo.json"))
        rows = misrecognized_terms(out.gold, out.result.transcript)
        assert {(r["gold"], r["hyp"], r["count"]) for r in rows} == {
            ("沉浮", "臣服", 1), ("区", "去", 1)}

    def test_repeated_confusion_counts_up(self):
        from i2e.metrics import misrecognized_terms
        fixture = copy.deepcopy(FIXTURE_BASE)
        fixture["utterances"][0]["gold_text"] = "进区前先收好，进区后再选角。"
        fixture["utterances"][0]["inject"] = [
            {"category": "homophone", "from": "进区", "to": "进去"}]
        fixture["utterances"][2]["gold_text"] = "现在我们进区吧。"
        fixture["utterances"][2]["inject"] = [
            {"category": "homophone", "from": "进区", "to": "进去"}]
        out = mock_transcribe(fixture)
        rows = misrecognized_terms(out.gold, out.result.transcript)
        assert rows[0]["count"] == 2
        assert (rows[0]["gold"], rows[0]["hyp"]) == ("区", "去")

    def test_identical_transcripts_have_no_terms(self):
        from i2e.metrics import misrecognized_terms
        out = mock_transcribe(copy.deepcopy(FIXTURE_BASE))
        assert misrecognized_terms(out.gold, out.result.transcript) == []


class TestPublishedShares:
    def test_category_shares_sum_to_one_hundred(self, fixtures_dir):
        doc = json.loads((fixtures_dir / "paper_error_categories.json")
                         .read_text(encoding="utf-8"))
        total = sum(doc["shares_pct"].values())
        assert total == pytest.approx(100.00, abs=0.01)
