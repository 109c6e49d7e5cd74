import itertools

import pytest
from hypothesis import given, settings, strategies as st

from i2e.errors import MissingJudgment
from i2e.model import Indicator, Rubric, RubricItem, Scale
from i2e.rubric import ScoringInput, derive_item_score, score_scale

from .oracles import score_by_rule


def make_item(level_counts: dict[int, int], item_id="SSTEW.T1",
              dimension="Dim", inaccessible=()):
    indicators = []
    for level in sorted(level_counts):
        for ordinal in range(1, level_counts[level] + 1):
            ind_id = f"{item_id}.L{level}.{ordinal}"
            indicators.append(Indicator(
                id=ind_id, scale=Scale.SSTEW, item_id=item_id, level=level,
                description=f"synthetic {ind_id}",
                language_accessible=(level, ordinal) not in inaccessible,
            ))
    return RubricItem(id=item_id, scale=Scale.SSTEW, dimension=dimension,
                      title=item_id, indicators=tuple(indicators))


def judge(item, truths_by_level: dict[int, list[bool]]):
    judgments = {}
    for level, truths in truths_by_level.items():
        for ordinal, value in enumerate(truths, start=1):
            judgments[f"{item.id}.L{level}.{ordinal}"] = value
    return judgments


class TestDeriveItemScore:
    def test_everything_true_scores_ceiling(self):
        item = make_item({1: 2, 3: 2, 5: 2, 7: 2})
        judgments = judge(item, {1: [True] * 2, 3: [True] * 2,
                                 5: [True] * 2, 7: [True] * 2})
        result = derive_item_score(item, judgments)
        assert result.score == 7
        assert result.satisfied_levels == (1, 3, 5, 7)
        assert result.next_level_fraction == 0.0

    def test_two_thirds_of_next_level_gives_midpoint(self):
        item = make_item({1: 2, 3: 2, 5: 3})
        judgments = judge(item, {1: [True] * 2, 3: [True] * 2,
                                 5: [True, True, False]})
        result = derive_item_score(item, judgments)
        assert result.score == 4
        assert result.satisfied_levels == (1, 3)
        assert result.next_level_fraction == pytest.approx(2 / 3)

    def test_false_at_level_one_floors_score(self):
        item = make_item({1: 2, 3: 2, 5: 2, 7: 2})
        judgments = judge(item, {1: [True, False], 3: [True] * 2,
                                 5: [True] * 2, 7: [True] * 2})
        result = derive_item_score(item, judgments)
        assert result.score == 1
        assert result.satisfied_levels == ()

    def test_exactly_half_of_next_level_stays_odd(self):
        item = make_item({1: 1, 3: 1, 5: 1, 7: 2})
        judgments = judge(item, {1: [True], 3: [True], 5: [True],
                                 7: [True, False]})
        result = derive_item_score(item, judgments)
        assert result.score == 5
        assert result.next_level_fraction == 0.5

    def test_gap_in_interrupted_ladder_does_not_resume(self):
        # level 3 broken, level 5 perfect: ascent stops at 3
        item = make_item({1: 1, 3: 2, 5: 2})
        judgments = judge(item, {1: [True], 3: [True, False], 5: [True] * 2})
        result = derive_item_score(item, judgments)
        assert result.satisfied_levels == (1,)
        # level-3 fraction is 0.5, not above half: no midpoint
        assert result.score == 1 + 0  # stays at level 1
        assert result.next_level_fraction == 0.5

    def test_ladder_missing_low_levels(self):
        item = make_item({5: 2, 7: 1})
        judgments = judge(item, {5: [True, True], 7: [False]})
        result = derive_item_score(item, judgments)
        assert result.score == 5
        assert result.satisfied_levels == (5,)

    def test_midpoint_across_level_gap_is_odd(self):
        item = make_item({3: 1, 7: 2})
        judgments = judge(item, {3: [True], 7: [True, True]})
        # both of level 7 true would be full ascent; break one
        judgments[f"{item.id}.L7.2"] = False
        result = derive_item_score(item, judgments)
        assert result.next_level_fraction == 0.5
        assert result.score == 3

    def test_missing_judgment_is_an_error(self):
        item = make_item({1: 2})
        with pytest.raises(MissingJudgment):
            derive_item_score(item, {f"{item.id}.L1.1": True})

    def test_inaccessible_level_drops_from_ladder(self):
        item = make_item({1: 1, 3: 1, 5: 1},
                         inaccessible=((3, 1),))
        judgments = {f"{item.id}.L1.1": True, f"{item.id}.L5.1": True}
        result = derive_item_score(item, judgments)
        assert result.score == 5
        assert result.satisfied_levels == (1, 5)


class TestOracleEquivalence:
    def test_exhaustive_small_shapes(self):
        # every ladder over levels {1,3}/{1,3,5} with 1..3 indicators,
        # every judgment pattern; the full 4x4 sweep runs in acceptance
        for levels in [(1,), (1, 3), (3, 5), (1, 3, 5)]:
            for counts in itertools.product((1, 2, 3), repeat=len(levels)):
                level_counts = dict(zip(levels, counts))
                item = make_item(level_counts)
                total = sum(counts)
                for pattern in range(2 ** total):
                    bits = [(pattern >> k) & 1 == 1 for k in range(total)]
                    truths_by_level = {}
                    i = 0
                    for level in levels:
                        truths_by_level[level] = bits[i:i + level_counts[level]]
                        i += level_counts[level]
                    judgments = judge(item, truths_by_level)
                    got = derive_item_score(item, judgments)
                    ladder = [(level, truths_by_level[level]) for level in levels]
                    want_score, want_fraction = score_by_rule(ladder)
                    assert got.score == want_score, (level_counts, bits)
                    assert got.next_level_fraction == pytest.approx(want_fraction)

    @settings(max_examples=300, deadline=None)
    @given(st.data())
    def test_flipping_false_to_true_never_lowers_score(self, data):
        levels = data.draw(st.lists(st.sampled_from([1, 3, 5, 7]), min_size=1,
                                    max_size=4, unique=True).map(sorted))
        level_counts = {level: data.draw(st.integers(1, 3)) for level in levels}
        item = make_item(level_counts)
        ids = [ind.id for ind in item.indicators]
        judgments = {ind_id: data.draw(st.booleans(), label=ind_id)
                     for ind_id in ids}
        base = derive_item_score(item, judgments).score
        false_ids = [i for i in ids if not judgments[i]]
        if not false_ids:
            return
        flip = data.draw(st.sampled_from(false_ids))
        judgments[flip] = True
        assert derive_item_score(item, judgments).score >= base

    @settings(max_examples=300, deadline=None)
    @given(st.data())
    def test_midpoint_parity_on_full_ladders(self, data):
        level_counts = {level: data.draw(st.integers(1, 3))
                        for level in (1, 3, 5, 7)}
        item = make_item(level_counts)
        judgments = {ind.id: data.draw(st.booleans(), label=ind.id)
                     for ind in item.indicators}
        result = derive_item_score(item, judgments)
        is_even = result.score % 2 == 0
        fired = (result.next_level_fraction > 0.5
                 and result.satisfied_levels != ()
                 and result.satisfied_levels[-1] != 7)
        assert is_even == fired


class TestScoreScale:
    def test_single_item_rubric(self):
        item = make_item({1: 1, 3: 1, 5: 1}, item_id="SSTEW.A", dimension="D")
        rubric = Rubric(scale=Scale.SSTEW, version="t", items=(item,))
        judgments = judge(item, {1: [True], 3: [True], 5: [True]})
        summary = score_scale(ScoringInput(rubric=rubric, judgments=judgments))
        assert summary.per_dimension == {"D": 5.0}
        assert summary.overall_mean == 5.0

    def test_dimension_and_overall_means(self):
        # dimension A holds items scoring 3 and 5, dimension B one item at 7
        item_a1 = make_item({3: 1}, item_id="SSTEW.A1", dimension="A")
        item_a2 = make_item({5: 1}, item_id="SSTEW.A2", dimension="A")
        item_b = make_item({7: 1}, item_id="SSTEW.B1", dimension="B")
        rubric = Rubric(scale=Scale.SSTEW, version="t",
                        items=(item_a1, item_a2, item_b))
        judgments = {"SSTEW.A1.L3.1": True, "SSTEW.A2.L5.1": True,
                     "SSTEW.B1.L7.1": True}
        summary = score_scale(ScoringInput(rubric=rubric, judgments=judgments))
        assert summary.per_dimension == {"A": 4.0, "B": 7.0}
        assert summary.overall_mean == 5.5

    def test_fully_inaccessible_item_excluded(self):
        item_a = make_item({1: 1}, item_id="SSTEW.A1", dimension="A")
        item_b = make_item({1: 1}, item_id="SSTEW.B1", dimension="B",
                           inaccessible=((1, 1),))
        rubric = Rubric(scale=Scale.SSTEW, version="t", items=(item_a, item_b))
        summary = score_scale(ScoringInput(
            rubric=rubric, judgments={"SSTEW.A1.L1.1": True}))
        assert "B" not in summary.per_dimension
        assert [s.item_id for s in summary.per_item] == ["SSTEW.A1"]

    def test_missing_judgment_error_not_implicit_false(self):
        item = make_item({1: 2}, item_id="SSTEW.A1")
        rubric = Rubric(scale=Scale.SSTEW, version="t", items=(item,))
        with pytest.raises(MissingJudgment):
            ScoringInput(rubric=rubric, judgments={"SSTEW.A1.L1.1": True})
