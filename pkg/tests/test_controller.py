"""Feedback controller state machine tests."""

import math
import random

import pytest

from eyerofeedback.controller import (
    ActuatorIntent,
    ControllerState,
    FeedbackMode,
    FilterParams,
    controller_step,
    initial_state,
    pulse_schedule,
    release_active_site,
)
from eyerofeedback.errors import TimingError
from eyerofeedback.gaze import BodySite, GazeSample


def _sample(ts, x, y, valid=True):
    return GazeSample(ts_ms=ts, x=x, y=y, valid=valid)


def _run(mode, points, params=FilterParams()):
    state = initial_state(mode, 0)
    intents = []
    for ts, x, y in points:
        state, step_intents = controller_step(state, _sample(ts, x, y), params)
        intents.extend(step_intents)
    return state, intents


def test_silence_never_actuates():
    rng = random.Random(5)
    points = [(i * 10, rng.random(), rng.random()) for i in range(500)]
    state, intents = _run(FeedbackMode.SILENCE, points)
    assert intents == []
    assert state.active_site is None
    assert state.last_update_ms == points[-1][0]


def test_stationary_activates_quadrant_site():
    _, intents = _run(FeedbackMode.STATIONARY, [(10, 0.2, 0.2)])
    assert intents == [ActuatorIntent(BodySite.LEFT_WRIST, True, 10)]


def test_stationary_is_edge_triggered():
    points = [(10, 0.2, 0.2), (20, 0.3, 0.1), (30, 0.4, 0.45)]
    _, intents = _run(FeedbackMode.STATIONARY, points)
    assert intents == [ActuatorIntent(BodySite.LEFT_WRIST, True, 10)]


def test_stationary_retarget_deactivates_then_activates():
    points = [(10, 0.2, 0.2), (20, 0.8, 0.2)]
    _, intents = _run(FeedbackMode.STATIONARY, points)
    assert intents == [
        ActuatorIntent(BodySite.LEFT_WRIST, True, 10),
        ActuatorIntent(BodySite.LEFT_WRIST, False, 20),
        ActuatorIntent(BodySite.RIGHT_WRIST, True, 20),
    ]


def test_stationary_crossing_all_quadrants():
    points = [(10, 0.2, 0.2), (20, 0.8, 0.2), (30, 0.2, 0.8), (40, 0.8, 0.8)]
    _, intents = _run(FeedbackMode.STATIONARY, points)
    active = [i for i in intents if i.active]
    assert [i.site for i in active] == [
        BodySite.LEFT_WRIST,
        BodySite.RIGHT_WRIST,
        BodySite.LEFT_ANKLE,
        BodySite.RIGHT_ANKLE,
    ]


def test_filter_engages_only_beyond_r_on():
    # d = 0.15 at (0.35, 0.5): inside r_on=0.2 -> stays off.
    _, intents = _run(FeedbackMode.FILTER, [(10, 0.35, 0.5)])
    assert intents == []
    # d = 0.3 at (0.2, 0.5): beyond r_on -> left-lower region activates LA.
    state, intents = _run(FeedbackMode.FILTER, [(10, 0.2, 0.5)])
    assert intents == [ActuatorIntent(BodySite.LEFT_ANKLE, True, 10)]
    assert state.filter_engaged


def test_filter_r_on_boundary_is_strict():
    # d exactly r_on must NOT engage.
    x = 0.5 - 0.20
    assert math.isclose(abs(x - 0.5), 0.20)
    _, intents = _run(FeedbackMode.FILTER, [(10, x, 0.5)])
    assert intents == []


def test_filter_holds_between_thresholds():
    """Once engaged, distances in [r_off, r_on] keep the site active."""
    points = [
        (10, 0.2, 0.5),    # d=0.30 engage, LA
        (20, 0.32, 0.5),   # d=0.18 between thresholds: hold
        (30, 0.35, 0.5),   # d=0.15 == r_off: hold (disengage needs d < r_off)
    ]
    state, intents = _run(FeedbackMode.FILTER, points)
    assert intents == [ActuatorIntent(BodySite.LEFT_ANKLE, True, 10)]
    assert state.filter_engaged and state.active_site is BodySite.LEFT_ANKLE


def test_filter_disengages_below_r_off():
    points = [
        (10, 0.2, 0.5),     # engage LA
        (20, 0.36, 0.5),    # d=0.14 < r_off: release
    ]
    state, intents = _run(FeedbackMode.FILTER, points)
    assert intents == [
        ActuatorIntent(BodySite.LEFT_ANKLE, True, 10),
        ActuatorIntent(BodySite.LEFT_ANKLE, False, 20),
    ]
    assert not state.filter_engaged and state.active_site is None


def test_filter_no_chatter_across_band():
    """Oscillating inside the dead band emits nothing after engagement."""
    points = [(10, 0.2, 0.5)]
    ts = 20
    for _ in range(50):
        points.append((ts, 0.33, 0.5))   # d=0.17
        points.append((ts + 5, 0.31, 0.5))  # d=0.19
        ts += 10
    _, intents = _run(FeedbackMode.FILTER, points)
    assert len(intents) == 1


def test_filter_retargets_while_engaged():
    points = [(10, 0.2, 0.5), (20, 0.8, 0.5)]  # LA then RA, both d=0.3
    _, intents = _run(FeedbackMode.FILTER, points)
    assert intents == [
        ActuatorIntent(BodySite.LEFT_ANKLE, True, 10),
        ActuatorIntent(BodySite.LEFT_ANKLE, False, 20),
        ActuatorIntent(BodySite.RIGHT_ANKLE, True, 20),
    ]


def test_zero_threshold_filter_degenerates_to_stationary():
    """With r_on = r_off = 0, filter matches stationary off center."""
    rng = random.Random(77)
    zero = FilterParams(r_on=0.0, r_off=0.0)
    for _ in range(200):
        points = []
        for i in range(100):
            x, y = rng.random(), rng.random()
            if (x, y) == (0.5, 0.5):
                continue
            points.append((i * 10, x, y))
        _, filter_intents = _run(FeedbackMode.FILTER, points, zero)
        _, stationary_intents = _run(FeedbackMode.STATIONARY, points)
        assert filter_intents == stationary_intents


def test_invalid_sample_is_a_no_op():
    state = initial_state(FeedbackMode.STATIONARY, 0)
    state, intents = controller_step(state, _sample(10, 0.2, 0.2))
    bad = GazeSample(ts_ms=20, x=9.0, y=9.0, valid=False)
    next_state, more = controller_step(state, bad)
    assert next_state == state
    assert more == []


def test_timestamp_regression_raises():
    state = initial_state(FeedbackMode.STATIONARY, 0)
    state, _ = controller_step(state, _sample(100, 0.2, 0.2))
    with pytest.raises(TimingError):
        controller_step(state, _sample(99, 0.2, 0.2))


def test_equal_timestamp_is_allowed():
    state = initial_state(FeedbackMode.STATIONARY, 0)
    state, _ = controller_step(state, _sample(100, 0.2, 0.2))
    controller_step(state, _sample(100, 0.8, 0.2))


def test_filter_params_validation():
    FilterParams(r_on=0.0, r_off=0.0)
    FilterParams(r_on=0.3, r_off=0.3)
    with pytest.raises(ValueError):
        FilterParams(r_on=0.1, r_off=0.2)
    with pytest.raises(ValueError):
        FilterParams(r_on=0.8, r_off=0.1)
    with pytest.raises(ValueError):
        FilterParams(r_on=0.2, r_off=-0.1)


def test_controller_state_invariants():
    with pytest.raises(ValueError):
        ControllerState(
            mode=FeedbackMode.SILENCE, active_site=BodySite.LEFT_WRIST
        )
    with pytest.raises(ValueError):
        ControllerState(
            mode=FeedbackMode.FILTER,
            active_site=BodySite.LEFT_WRIST,
            filter_engaged=False,
        )


def test_release_active_site():
    state, _ = _run(FeedbackMode.STATIONARY, [(10, 0.2, 0.2)])
    state, intents = release_active_site(state, 50)
    assert intents == [ActuatorIntent(BodySite.LEFT_WRIST, False, 50)]
    assert state.active_site is None
    # Releasing again is a no-op.
    state, intents = release_active_site(state, 60)
    assert intents == []


def _site_states(intents):
    """Fold an intent list into per-site on/off state, checking alternation."""
    on = {}
    for intent in intents:
        assert on.get(intent.site, False) != intent.active, (
            "intent repeats current state"
        )
        on[intent.site] = intent.active
    return {site for site, active in on.items() if active}


def test_random_streams_hold_invariants():
    """Random gaze walks: at most one site active, intents alternate
    per site, at most 3 intents per step, silence stays dark."""
    rng = random.Random(314)
    for _ in range(300):
        mode = rng.choice(list(FeedbackMode))
        state = initial_state(mode, 0)
        intents = []
        ts = 0
        x, y = rng.random(), rng.random()
        for _ in range(200):
            ts += rng.randint(1, 40)
            x = min(1.0, max(0.0, x + rng.uniform(-0.15, 0.15)))
            y = min(1.0, max(0.0, y + rng.uniform(-0.15, 0.15)))
            valid = rng.random() > 0.05
            state, step = controller_step(state, _sample(ts, x, y, valid))
            assert len(step) <= 3
            intents.extend(step)
        active = _site_states(intents)
        assert len(active) <= 1
        if mode is FeedbackMode.SILENCE:
            assert intents == []
        if state.active_site is None:
            assert active == set()
        else:
            assert active == {state.active_site}


def test_pulse_schedule_square_wave():
    site = BodySite.LEFT_WRIST
    assert pulse_schedule(site, 0, 0) is True
    assert pulse_schedule(site, 499, 0) is True
    assert pulse_schedule(site, 500, 0) is False
    assert pulse_schedule(site, 999, 0) is False
    assert pulse_schedule(site, 1000, 0) is True
    assert pulse_schedule(site, 1499, 0) is True
    # Epoch offsets shift the wave.
    assert pulse_schedule(site, 700, 300) is True
    assert pulse_schedule(site, 800, 300) is False


def test_pulse_schedule_without_site_is_off():
    assert pulse_schedule(None, 123, 0) is False


def test_pulse_schedule_rejects_time_before_epoch():
    with pytest.raises(ValueError):
        pulse_schedule(BodySite.LEFT_WRIST, 10, 20)
