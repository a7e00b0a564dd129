"""Feedback state machine turning gaze samples into body-site activations.

Three modes:

* silence    -- never actuates; the control condition.
* stationary -- the site matching the current gaze quadrant is always active.
* filter     -- stationary behavior, but only while gaze distance from the
                screen center is beyond a threshold (with hysteresis so the
                boundary does not chatter).

The controller is edge-triggered: it emits an intent only when a site turns
on or off, never repeats at sample rate. Downstream the active site is pulsed
at 1 Hz with a 50% duty cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .errors import TimingError
from .gaze import (
    BodySite,
    GazeSample,
    classify_quadrant,
    distance_from_center,
    quadrant_to_body_site,
)

PULSE_PERIOD_MS = 1000
PULSE_ON_MS = 500

DEFAULT_R_ON = 0.20
DEFAULT_R_OFF = 0.15


class FeedbackMode(Enum):
    SILENCE = "silence"
    STATIONARY = "stationary"
    FILTER = "filter"


@dataclass(frozen=True)
class FilterParams:
    """Hysteresis pair for the filter mode.

    Engages when distance exceeds ``r_on`` (strict), disengages when it
    drops below ``r_off``. Zero thresholds are allowed and degenerate to
    stationary behavior for any off-center gaze.
    """

    r_on: float = DEFAULT_R_ON
    r_off: float = DEFAULT_R_OFF

    def __post_init__(self) -> None:
        if not (0.0 <= self.r_off <= self.r_on < math.sqrt(0.5)):
            raise ValueError(
                f"need 0 <= r_off <= r_on < sqrt(0.5), got "
                f"r_on={self.r_on}, r_off={self.r_off}"
            )


@dataclass(frozen=True)
class ControllerState:
    mode: FeedbackMode
    active_site: BodySite | None = None
    filter_engaged: bool = False
    last_update_ms: int = 0

    def __post_init__(self) -> None:
        if self.mode is FeedbackMode.SILENCE:
            if self.active_site is not None or self.filter_engaged:
                raise ValueError("silence mode cannot hold an active site")
        if self.mode is FeedbackMode.FILTER and not self.filter_engaged:
            if self.active_site is not None:
                raise ValueError("disengaged filter cannot hold an active site")


@dataclass(frozen=True)
class ActuatorIntent:
    """Edge-triggered request to switch one site on or off."""

    site: BodySite
    active: bool
    ts_ms: int


def initial_state(mode: FeedbackMode, start_ms: int = 0) -> ControllerState:
    return ControllerState(mode=mode, last_update_ms=start_ms)


DEFAULT_FILTER_PARAMS = FilterParams()


def controller_step(
    state: ControllerState,
    sample: GazeSample,
    params: FilterParams = DEFAULT_FILTER_PARAMS,
) -> tuple[ControllerState, list[ActuatorIntent]]:
    """Advance the state machine by one gaze sample.

    Returns the successor state and the intents (if any) emitted by the
    transition. Invalid samples leave the state untouched and emit nothing.

    Raises:
        TimingError: the sample's timestamp precedes the last update;
            callers should drop the sample.
    """
    if not sample.valid:
        return state, []
    if sample.ts_ms < state.last_update_ms:
        raise TimingError(
            f"sample at {sample.ts_ms} ms precedes state at {state.last_update_ms} ms"
        )

    if state.mode is FeedbackMode.SILENCE:
        return replace(state, last_update_ms=sample.ts_ms), []

    if state.mode is FeedbackMode.STATIONARY:
        target = quadrant_to_body_site(classify_quadrant(sample))
        return _retarget(state, target, sample.ts_ms)

    # Filter: hysteresis decides whether stationary behavior applies.
    d = distance_from_center(sample)
    engaged = (d >= params.r_off) if state.filter_engaged else (d > params.r_on)
    if engaged:
        target = quadrant_to_body_site(classify_quadrant(sample))
        return _retarget(replace(state, filter_engaged=True), target, sample.ts_ms)
    intents = []
    if state.active_site is not None:
        intents.append(ActuatorIntent(state.active_site, False, sample.ts_ms))
    next_state = replace(
        state, active_site=None, filter_engaged=False, last_update_ms=sample.ts_ms
    )
    return next_state, intents


def _retarget(
    state: ControllerState, target: BodySite, ts_ms: int
) -> tuple[ControllerState, list[ActuatorIntent]]:
    if target is state.active_site:
        return replace(state, last_update_ms=ts_ms), []
    intents = []
    if state.active_site is not None:
        intents.append(ActuatorIntent(state.active_site, False, ts_ms))
    intents.append(ActuatorIntent(target, True, ts_ms))
    return replace(state, active_site=target, last_update_ms=ts_ms), intents


def release_active_site(
    state: ControllerState, ts_ms: int
) -> tuple[ControllerState, list[ActuatorIntent]]:
    """Force any active site off, e.g. when leaving an actuating phase."""
    if state.active_site is None:
        return replace(state, last_update_ms=max(ts_ms, state.last_update_ms)), []
    intent = ActuatorIntent(state.active_site, False, ts_ms)
    next_state = replace(
        state,
        active_site=None,
        filter_engaged=False,
        last_update_ms=max(ts_ms, state.last_update_ms),
    )
    return next_state, [intent]


def pulse_schedule(
    active_site: BodySite | None, now_ms: int, epoch_ms: int
) -> bool:
    """Motor on/off at ``now_ms`` for a site activated at ``epoch_ms``.

    1 Hz square wave, on for the first half of each period. Always off
    with no active site.
    """
    if active_site is None:
        return False
    if now_ms < epoch_ms:
        raise ValueError("now precedes the activation epoch")
    return (now_ms - epoch_ms) % PULSE_PERIOD_MS < PULSE_ON_MS
