import json

import pytest

from i2e.errors import ZeroAutomatedTime
from i2e.metrics import (
    AutomatedTimings,
    TraditionalTimings,
    WorkflowTimings,
    efficiency_gain,
)


@pytest.fixture()
def reference_timings(fixtures_dir):
    doc = json.loads((fixtures_dir / "timings_reference.json").read_text(
        encoding="utf-8"))
    return WorkflowTimings.from_dict(doc)


class TestEfficiencyGain:
    def test_reference_workflow_totals_and_label(self, reference_timings):
        report = efficiency_gain(reference_timings)
        assert report.total_traditional_min == 380
        assert report.total_automated_min == 21
        assert report.speedup == pytest.approx(380 / 21)
        assert report.speedup == pytest.approx(18.095, abs=0.001)
        assert report.speedup_label == "18×"

    def test_hours_at_one_hundred_classrooms(self, reference_timings):
        report = efficiency_gain(reference_timings)
        traditional_h, automated_h = report.hours_at(100)
        assert traditional_h == pytest.approx(633.3, abs=0.05)
        assert automated_h == pytest.approx(35.0, abs=0.01)

    def test_equal_totals_give_unity(self):
        timings = WorkflowTimings(
            traditional=TraditionalTimings(10, 5, 6),
            automated=AutomatedTimings(10, 5, 6))
        assert efficiency_gain(timings).speedup == 1.0

    def test_zero_automated_time_rejected(self):
        timings = WorkflowTimings(
            traditional=TraditionalTimings(10, 5, 6),
            automated=AutomatedTimings(0, 0, 0))
        with pytest.raises(ZeroAutomatedTime):
            efficiency_gain(timings)

    def test_negative_components_rejected(self):
        with pytest.raises(ValueError):
            WorkflowTimings(traditional=TraditionalTimings(-1, 5, 6),
                            automated=AutomatedTimings(1, 1, 1))
