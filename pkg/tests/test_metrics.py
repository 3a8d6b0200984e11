"""Detection metrics, frame error rate, rater agreement, speed ratio."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dysfluent.alignment import AlignmentPath, Segment
from dysfluent.errors import FrameCountMismatch, LengthMismatch, ZeroDuration
from dysfluent.metrics import (
    alignment_error_rate,
    cohens_kappa,
    evaluate_detection,
    match_events,
    real_time_factor,
    temporal_iou,
)


def ev(cat, start, end):
    return (cat, start, end)


def path(frame_labels, segments):
    segs = [Segment(s, a, b, 1.0) for s, a, b in segments]
    return AlignmentPath(frame_labels, segs, 0.0, 62.5)


# -- IoU -------------------------------------------------------------------


def test_iou_basic_values():
    assert temporal_iou((0, 2), (0, 2)) == 1.0
    assert temporal_iou((0, 2), (1, 3)) == pytest.approx(1 / 3)
    assert temporal_iou((0, 1), (1, 2)) == 0.0
    assert temporal_iou((0, 1), (5, 6)) == 0.0


@settings(max_examples=60, deadline=None)
@given(
    a0=st.floats(0, 10), al=st.floats(0.01, 5),
    b0=st.floats(0, 10), bl=st.floats(0.01, 5),
)
def test_iou_symmetric_and_bounded(a0, al, b0, bl):
    a, b = (a0, a0 + al), (b0, b0 + bl)
    assert temporal_iou(a, b) == temporal_iou(b, a)
    assert 0.0 <= temporal_iou(a, b) <= 1.0


# -- matching --------------------------------------------------------------


def test_match_requires_category_agreement():
    assert match_events([ev("prolongation", 0, 1)], [ev("block_silent", 0, 1)]) == []


def test_match_requires_half_overlap():
    assert match_events([ev("prolongation", 0, 1)], [ev("prolongation", 0.6, 1.6)]) == []
    assert match_events([ev("prolongation", 0, 1)], [ev("prolongation", 0.2, 1.2)]) == [(0, 0)]


def test_matching_is_one_to_one():
    pred = [ev("prolongation", 0, 1), ev("prolongation", 0.1, 1.1)]
    gold = [ev("prolongation", 0, 1)]
    assert match_events(pred, gold) == [(0, 0)]


def test_best_overlap_wins():
    pred = [ev("prolongation", 0.3, 1.3), ev("prolongation", 0.05, 1.05)]
    gold = [ev("prolongation", 0, 1)]
    assert match_events(pred, gold) == [(1, 0)]


def test_matching_is_order_independent():
    pred = [ev("prolongation", 0, 1), ev("prolongation", 2, 3), ev("block_silent", 4, 5)]
    gold = [ev("block_silent", 4.1, 5.1), ev("prolongation", 1.9, 2.9), ev("prolongation", 0, 1)]
    forward = match_events(pred, gold)
    backward = match_events(list(reversed(pred)), list(reversed(gold)))
    remapped = sorted((len(pred) - 1 - p, len(gold) - 1 - g) for p, g in backward)
    assert sorted(forward) == remapped


def test_match_accepts_event_objects():
    class Obj:
        category = "prolongation"
        start_s = 0.0
        end_s = 1.0

    assert match_events([Obj()], [ev("prolongation", 0, 1)]) == [(0, 0)]


# -- detection summary -------------------------------------------------------


def test_worked_counts_give_point_nine_everywhere():
    # 9 matched pairs, one spurious prediction, one missed gold event.
    gold = [ev("prolongation", i * 10, i * 10 + 1) for i in range(10)]
    pred = [ev("prolongation", i * 10 + 0.05, i * 10 + 1.05) for i in range(9)]
    pred.append(ev("prolongation", 500, 501))
    rep = evaluate_detection(pred, gold)
    assert rep.precision == pytest.approx(0.9)
    assert rep.recall == pytest.approx(0.9)
    assert rep.f1 == pytest.approx(0.9)


def test_empty_set_conventions():
    both = evaluate_detection([], [])
    assert (both.precision, both.recall, both.f1, both.balanced_accuracy) == (1.0, 1.0, 1.0, 1.0)
    spurious = evaluate_detection([ev("prolongation", 0, 1)], [])
    assert (spurious.precision, spurious.recall) == (0.0, 1.0)
    missed = evaluate_detection([], [ev("prolongation", 0, 1)])
    assert (missed.precision, missed.recall, missed.f1) == (1.0, 0.0, 0.0)


def test_balanced_accuracy_averages_per_category_recall():
    gold = [ev("prolongation", 0, 1), ev("prolongation", 2, 3), ev("block_silent", 4, 5)]
    pred = [ev("prolongation", 0, 1)]  # recalls: 1/2 and 0/1
    rep = evaluate_detection(pred, gold)
    assert rep.balanced_accuracy == pytest.approx(0.25)


# -- alignment error rate -----------------------------------------------------


def test_perfect_path_scores_zero():
    p = path(["a", "a", "b", "b"], [("a", 0, 2), ("b", 2, 4)])
    assert alignment_error_rate(p, ["a", "a", "b", "b"]) == 0.0


def test_every_frame_wrong_scores_hundred():
    p = path(["a", "a", "a", "a"], [("a", 0, 4)])
    assert alignment_error_rate(p, ["b", "b", "b", "b"]) == 100.0


def test_blank_frames_inherit_preceding_segment():
    p = path(["a", "a", None, "b"], [("a", 0, 2), ("b", 3, 4)])
    assert alignment_error_rate(p, ["a", "a", "a", "b"]) == 0.0
    assert alignment_error_rate(p, ["a", "a", "b", "b"]) == 25.0


def test_leading_blanks_inherit_first_segment():
    p = path([None, None, "a", "a"], [("a", 2, 4)])
    assert alignment_error_rate(p, ["a", "a", "a", "a"]) == 0.0


def test_frame_count_mismatch_raises():
    p = path(["a", "a"], [("a", 0, 2)])
    with pytest.raises(FrameCountMismatch):
        alignment_error_rate(p, ["a", "a", "a"])


def test_empty_gold_is_zero_error():
    p = path([], [])
    assert alignment_error_rate(p, []) == 0.0


# -- kappa ---------------------------------------------------------------------


def test_kappa_worked_example_is_exactly_zero():
    assert cohens_kappa(["x", "x", "y", "y"], ["x", "y", "x", "y"]) == 0.0


def test_kappa_perfect_agreement():
    assert cohens_kappa(["x", "y", "x"], ["x", "y", "x"]) == 1.0


def test_kappa_constant_identical_raters():
    assert cohens_kappa(["x", "x", "x"], ["x", "x", "x"]) == 1.0


def test_kappa_can_go_negative():
    assert cohens_kappa(["x", "y"], ["y", "x"]) < 0.0


@pytest.mark.parametrize("a, b", [([], []), (["x"], ["x", "y"])])
def test_kappa_rejects_bad_lengths(a, b):
    with pytest.raises(LengthMismatch):
        cohens_kappa(a, b)


# -- real-time factor --------------------------------------------------------------


def test_rtf_worked_examples():
    assert real_time_factor(1.0, 5.0) == pytest.approx(0.2)
    assert real_time_factor(5.0, 5.0) == pytest.approx(1.0)


def test_rtf_rejects_zero_duration():
    with pytest.raises(ZeroDuration):
        real_time_factor(1.0, 0.0)
