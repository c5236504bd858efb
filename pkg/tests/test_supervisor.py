import numpy as np
import pytest
from hypothesis import given, strategies as st

from primal.classification import Label
from primal.model import FieldMask as F, GroundTruth, Measurement, Message, Purpose
from primal.supervisor import ConfusionCounts, Supervisor, feedback, metrics

VALID = F.L | F.T | F.E_TYPE


def alarm(l, t, mask=VALID):
    return Message.from_measurement(Measurement(l, 4.0, t), mask, Purpose.ALARM, 0)


def grid(events, n=10, steps=1):
    g = np.zeros((n, steps), dtype=bool)
    for l in events:
        g[l, 0] = True
    return GroundTruth(g)


def test_quiet_iteration_is_all_true_negatives():
    sup = Supervisor(grid([]))
    assert sup.close_iteration(0) == ConfusionCounts(tn=10)


def test_mixed_iteration():
    sup = Supervisor(grid([0, 1, 2]))
    for l in (0, 1, 7):
        assert sup.log_alarm(alarm(l, 0))
    assert sup.close_iteration(0) == ConfusionCounts(tp=2, fp=1, tn=6, fn=1)


def test_saturated_grid():
    sup = Supervisor(grid(range(10)))
    for l in range(10):
        sup.log_alarm(alarm(l, 0))
    assert sup.close_iteration(0).tp == 10


def test_locationless_alarm_rejected_and_counts_as_miss():
    sup = Supervisor(grid([4]))
    assert not sup.log_alarm(alarm(4, 0, F.X | F.T | F.E_TYPE))
    assert sup.close_iteration(0).fn == 1
    assert sup.log[0].accepted is False


def test_out_of_range_alarm_rejected():
    sup = Supervisor(grid([]))
    assert not sup.log_alarm(alarm(12, 0))


def test_duplicate_alarms_mark_once():
    sup = Supervisor(grid([3]))
    sup.log_alarm(alarm(3, 0))
    sup.log_alarm(alarm(3, 0))
    assert sup.close_iteration(0) == ConfusionCounts(tp=1, tn=9)
    assert len(sup.log) == 2


def test_only_alarms_can_be_logged():
    with pytest.raises(ValueError):
        Supervisor(grid([])).log_alarm(
            Message.from_measurement(Measurement(0, 1.0, 0), F.X | F.E_TYPE, Purpose.OPINION_REQUEST, 0)
        )


@pytest.mark.parametrize(
    "counts, expected",
    [
        (ConfusionCounts(tp=10), (1.0, 1.0, 1.0)),
        (ConfusionCounts(tp=8, fp=2, fn=2), (0.8, 0.8, 0.8)),
        (ConfusionCounts(fn=5), (0.0, 0.0, 0.0)),
        (ConfusionCounts(), (0.0, 0.0, 0.0)),
    ],
)
def test_metrics(counts, expected):
    assert metrics(counts) == pytest.approx(expected)


@given(st.integers(0, 500), st.integers(0, 500), st.integers(0, 500), st.integers(0, 500))
def test_metrics_stay_in_unit_interval(tp, fp, tn, fn):
    assert all(0.0 <= v <= 1.0 for v in metrics(ConfusionCounts(tp, fp, tn, fn)))


def test_feedback_modes():
    gt = grid([2])
    full = Supervisor(gt, "full")
    assert full.feedback(2, 0) is Label.EVENT and full.feedback(5, 0) is Label.NORMAL
    assert Supervisor(gt, "none").feedback(5, 0) is None
    partial = Supervisor(gt, "alarm_only")
    assert partial.feedback(2, 0) is None
    partial.log_alarm(alarm(2, 0))
    assert partial.feedback(2, 0) is Label.EVENT
    assert feedback(5, 0, "full", gt) is Label.NORMAL
    assert feedback(2, 0, "alarm_only", gt, partial.triggered) is Label.EVENT


def test_unknown_feedback_mode():
    with pytest.raises(ValueError):
        Supervisor(grid([]), "sometimes")


def test_log_csv():
    sup = Supervisor(grid([1]))
    sup.log_alarm(alarm(1, 0))
    sup.log_alarm(alarm(1, 0, F.X | F.T))
    assert sup.log_csv() == "t,l,mask,comm_cost,privacy_cost,accepted\n0,1,26,0.0,0.0,1\n0,,12,0.0,0.0,0\n"
