import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from primal.classification import (
    COLD,
    ClassifierParams,
    ClassifierVerdict,
    Label,
    OneClassClassifier,
    aggregate_votes,
    form_opinion,
)
from primal.errors import ConfigError
from primal.model import FieldMask as F, Measurement, Message, Opinion, Purpose, Verdict

Z95 = 1.6448536269514722  # one-sided standard normal 0.95 quantile


def trained(values, **params):
    clf = OneClassClassifier(ClassifierParams(**params))
    for v in values:
        clf.train(v, Label.NORMAL)
    return clf


def request(value, mask=F.X | F.E_TYPE, event_type=0):
    meas = Measurement(location=0, value=value, timestep=0, event_type=event_type)
    return Message.from_measurement(meas, mask, Purpose.OPINION_REQUEST, 0)


def test_window_keeps_last_points():
    clf = trained(range(150))
    assert list(clf.window) == list(map(float, range(50, 150)))


def test_event_label_leaves_state_untouched():
    clf = trained(np.random.default_rng(0).normal(size=30))
    before = clf.snapshot()
    clf.train(42.0, Label.EVENT)
    assert clf.snapshot() == before


def test_undertrained_is_cold():
    clf = trained([0.1, -0.2])
    assert clf.classify(100.0) == COLD == ClassifierVerdict(Label.NORMAL, 0.0)


def test_radius_tracks_gaussian_quantile():
    for seed in range(5):
        values = np.random.default_rng(seed).normal(3.0, 2.0, size=100)
        clf = trained(values)
        assert abs(clf.radius * clf.std - Z95 * clf.std) <= 0.15 * Z95 * clf.std


def test_small_window_falls_back_to_gaussian_quantile():
    clf = trained([0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
    assert clf.radius == pytest.approx(Z95)


def test_center_is_normal():
    clf = trained(np.random.default_rng(1).normal(size=50))
    assert clf.classify(clf.mean).label is Label.NORMAL


def test_far_value_is_confident_event():
    clf = trained(np.random.default_rng(2).normal(size=200))
    verdict = clf.classify(5.0)
    assert verdict.label is Label.EVENT
    assert verdict.confidence > 0.9


def test_constant_window():
    clf = trained([2.0] * 10)
    assert clf.classify(2.5) == ClassifierVerdict(Label.EVENT, 1.0)
    assert clf.classify(2.0).label is Label.NORMAL


def test_classify_is_deterministic():
    clf = trained(np.random.default_rng(3).normal(size=40))
    assert clf.classify(1.7) == clf.classify(1.7)


@given(st.floats(-20, 20), st.floats(-20, 20))
def test_confidence_monotone_beyond_boundary(a, b):
    clf = trained(np.random.default_rng(4).normal(size=60))
    sa, sb = clf.score(a), clf.score(b)
    if sa > sb > clf.radius:
        assert clf.classify(a).confidence >= clf.classify(b).confidence


def test_agrees_with_analytic_rule_on_large_window():
    rng = np.random.default_rng(6)
    mu, sigma = 1.0, 2.0
    clf = trained(rng.normal(mu, sigma, size=500), window_size=500)
    tests = rng.normal(mu, sigma * 1.5, size=2000)
    agree = [clf.classify(x).is_event == (abs(x - mu) / sigma > Z95) for x in tests]
    assert np.mean(agree) >= 0.95


def test_params_validation():
    with pytest.raises(ConfigError):
        ClassifierParams(window_size=5, min_training_points=10)
    with pytest.raises(ConfigError):
        ClassifierParams(boundary_quantile=1.0)
    with pytest.raises(ConfigError):
        ClassifierParams(confidence_slope=0.0)


def test_vote_without_opinions_is_identity():
    own = ClassifierVerdict(Label.EVENT, 0.3)
    assert aggregate_votes(own, []) == own


def test_vote_is_outweighed():
    own = ClassifierVerdict(Label.EVENT, 0.6)
    result = aggregate_votes(own, [Opinion(Verdict.FALSE, 0.5), Opinion(Verdict.FALSE, 0.5)])
    assert result.label is Label.NORMAL
    assert result.confidence == pytest.approx(1.0 / 1.6)


def test_unknown_opinions_do_not_vote():
    own = ClassifierVerdict(Label.NORMAL, 0.4)
    assert aggregate_votes(own, [Opinion(Verdict.UNKNOWN, 0.9)] * 3) == own


def test_tie_keeps_own_label():
    own = ClassifierVerdict(Label.EVENT, 0.5)
    assert aggregate_votes(own, [Opinion(Verdict.FALSE, 0.5)]).label is Label.EVENT


opinions = st.lists(
    st.builds(Opinion, st.sampled_from(list(Verdict)), st.floats(0, 1)), max_size=8
)


@given(opinions, st.randoms(use_true_random=False))
def test_vote_is_permutation_invariant(ops, rnd):
    own = ClassifierVerdict(Label.EVENT, 0.5)
    shuffled = list(ops)
    rnd.shuffle(shuffled)
    a, b = aggregate_votes(own, ops), aggregate_votes(own, shuffled)
    assert a.label is b.label
    assert a.confidence == pytest.approx(b.confidence)


def test_opinion_without_value_is_unknown():
    clf = trained(np.random.default_rng(7).normal(size=50))
    assert form_opinion(clf, request(5.0, F.E_TYPE), 0.2).verdict is Verdict.UNKNOWN


def test_opinion_on_other_event_type_is_unknown():
    clf = trained(np.random.default_rng(7).normal(size=50))
    assert form_opinion(clf, request(5.0, event_type=3), 0.2).verdict is Verdict.UNKNOWN


def test_opinion_without_event_type_is_unknown():
    clf = trained(np.random.default_rng(7).normal(size=50))
    assert form_opinion(clf, request(5.0, F.X), 0.2).verdict is Verdict.UNKNOWN


def test_confident_opinion():
    clf = trained(np.random.default_rng(8).normal(size=100))
    o = form_opinion(clf, request(6.0), 0.2)
    assert o.verdict is Verdict.TRUE and o.confidence >= 0.2
    o = form_opinion(clf, request(clf.mean), 0.2)
    assert o.verdict is Verdict.FALSE


def test_low_confidence_opinion_is_unknown():
    clf = trained(np.random.default_rng(9).normal(size=100))
    boundary = clf.mean + clf.radius * clf.std * 1.001
    o = form_opinion(clf, request(boundary), 0.2)
    assert o.verdict is Verdict.UNKNOWN
    assert 0.0 <= o.confidence < 0.2


def test_cold_neighbor_answers_unknown():
    assert form_opinion(OneClassClassifier(), request(9.0), 0.2) == Opinion(Verdict.UNKNOWN, 0.0)
    assert math.isclose(Opinion(Verdict.UNKNOWN, 0.7).weight, 0.0)
