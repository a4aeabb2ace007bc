import pytest
from hypothesis import given
from hypothesis import strategies as st

from childq import errors
from childq.model import Phase, TouchEvent
from childq.result import QScore
from childq.touch import PINCH_WINDOW_MS, count_taps, p_taps_simple, p_taps_test1, p_time, q_touch

from .helpers import tap, touch_record


@pytest.mark.parametrize("t_real, t_max, expected", [(0, 30, 100), (30, 30, 0), (15, 30, 50)])
def test_p_time(t_real, t_max, expected):
    assert p_time(t_real, t_max) == expected


@pytest.mark.parametrize("in_taps, out_taps, expected", [(4, 0, 100), (4, 3, 85), (4, 25, 0), (0, 0, 0), (2, 1, 45)])
def test_p_taps_test1(in_taps, out_taps, expected):
    assert p_taps_test1(in_taps, out_taps) == expected


@pytest.mark.parametrize("n, expected", [(0, 0), (1, 100), (4, 25), (3, 100 / 3)])
def test_p_taps_simple(n, expected):
    assert p_taps_simple(n) == expected


@pytest.mark.parametrize(
    "call",
    [lambda: p_time(-1, 30), lambda: p_time(31, 30), lambda: p_time(0, 0), lambda: p_taps_test1(5, 0),
     lambda: p_taps_test1(1, -1), lambda: p_taps_simple(-1)],
)
def test_range_errors(call):
    with pytest.raises(errors.RangeError):
        call()


@given(st.floats(0, 30), st.floats(0, 30))
def test_p_time_decreasing(a, b):
    lo, hi = sorted((a, b))
    assert p_time(lo, 30) >= p_time(hi, 30)


@given(st.integers(0, 4), st.integers(0, 40))
def test_p_taps_test1_monotone(in_taps, out_taps):
    v = p_taps_test1(in_taps, out_taps)
    assert 0 <= v <= 100
    assert p_taps_test1(in_taps, out_taps + 1) <= v
    if in_taps < 4:
        assert p_taps_test1(in_taps + 1, out_taps) >= v


@given(st.integers(1, 500))
def test_p_taps_simple_decreasing(n):
    assert p_taps_simple(n + 1) < p_taps_simple(n) <= 100


def _two_finger(dt):
    return [
        TouchEvent(100, 0, Phase.DOWN, 600.0, 400.0),
        TouchEvent(100 + dt, 1, Phase.DOWN, 700.0, 400.0),
        TouchEvent(600, 0, Phase.UP, 600.0, 400.0),
        TouchEvent(600, 1, Phase.UP, 700.0, 400.0),
    ]


class TestCountTaps:
    def test_pinch_within_window_is_one(self):
        rec = touch_record(3, _two_finger(PINCH_WINDOW_MS))
        assert count_taps(rec, merge_pinches=True) == 1
        assert count_taps(rec) == 2

    def test_pinch_outside_window_is_two(self):
        assert count_taps(touch_record(3, _two_finger(PINCH_WINDOW_MS + 1)), merge_pinches=True) == 2

    def test_lifted_finger_does_not_pair(self):
        events = tap(100, 600, 400, pointer=0, hold=20) + tap(150, 700, 400, pointer=1)
        assert count_taps(touch_record(3, events), merge_pinches=True) == 2

    def test_three_fingers(self):
        events = _two_finger(50) + [TouchEvent(120, 2, Phase.DOWN, 1.0, 1.0), TouchEvent(700, 2, Phase.UP, 1.0, 1.0)]
        assert count_taps(touch_record(3, events), merge_pinches=True) == 2


class TestQTouch:
    def test_ideal_drag(self, scene):
        s = scene[2]
        c, r = s.carrot_region, s.rabbit_region
        events = [
            TouchEvent(0, 0, Phase.DOWN, c.x, c.y),
            TouchEvent(10, 0, Phase.MOVE, r.x, r.y),
            TouchEvent(20, 0, Phase.UP, r.x, r.y),
        ]
        score = q_touch(touch_record(2, events, t_real=0.0), s)
        assert (score.q, score.completed) == (100.0, True)

    def test_uncompleted_pinch_is_zero(self, scene):
        events = []
        for i in range(10):
            events += tap(100 + 300 * i, 200, 200, pointer=i % 3)
        score = q_touch(touch_record(3, events, t_real=12.0), scene[3])
        assert score.q == 0 and not score.completed
        assert score.components["n_taps"] == 10

    def test_mole_example(self, scene):
        s = scene[1]
        events = []
        for i, idx in enumerate(s.activation):
            m = s.mole_positions[idx]
            events += tap(500 + 400 * i, m.x, m.y, pointer=i)
        score = q_touch(touch_record(1, events, t_real=15.0), s)
        assert score.q == 75
        assert score.components["in_taps"] == 4 and score.components["out_taps"] == 0

    def test_wrong_test(self, scene):
        with pytest.raises(errors.ConfigMismatch):
            q_touch(touch_record(5, []), scene[5])


class TestReportedQ:
    def test_touch_rounds_half_up(self):
        assert QScore(1, 62.25, True, {}).reported_q() == 62.3
        assert QScore(1, 62.24999, True, {}).reported_q() == 62.2

    def test_stylus_full_precision(self):
        assert QScore(5, 60.6530659713, True, {}).reported_q() == 60.6530659713

    def test_uncompleted_touch_must_be_zero(self):
        with pytest.raises(errors.RangeError):
            QScore(2, 10.0, False, {})

    def test_q_bounds(self):
        with pytest.raises(errors.RangeError):
            QScore(6, 100.5, True, {})
