"""Three-choice vigilance task: trial plan generation and response scoring.

Ten trials per session, shapes in a 4:3:3 target:non-target:distractor
ratio with the order shuffled. Targets take a left-arrow press, non-targets
a right-arrow press, distractors no press at all.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

TRIALS_PER_SESSION = 10
SHAPE_COUNTS = {"target": 4, "non_target": 3, "distractor": 3}

DEFAULT_DISPLAY_MS = 200
DEFAULT_RESPONSE_WINDOW_MS = 2000


class StimulusShape(Enum):
    TARGET = "target"          # upward triangle
    NON_TARGET = "non_target"  # downward triangle
    DISTRACTOR = "distractor"  # diamond


class ResponseKey(Enum):
    LEFT = "Left"
    RIGHT = "Right"


class DurationClass(Enum):
    """Pre-stimulus interval range, in milliseconds (inclusive bounds)."""

    SHORT = (2000, 5000)
    LONG = (25000, 35000)

    @property
    def interval_range(self) -> tuple[int, int]:
        return self.value


# Correct key per shape; distractors expect no press.
_EXPECTED_KEY = {
    StimulusShape.TARGET: ResponseKey.LEFT,
    StimulusShape.NON_TARGET: ResponseKey.RIGHT,
}


@dataclass(frozen=True)
class TrialSpec:
    index: int
    shape: StimulusShape
    pre_interval_ms: int
    display_ms: int = DEFAULT_DISPLAY_MS


@dataclass(frozen=True)
class TrialOutcome:
    responded: bool
    key: ResponseKey | None
    rt_ms: int | None
    correct: bool
    missed: bool

    def __post_init__(self) -> None:
        if self.responded != (self.rt_ms is not None):
            raise ValueError("rt_ms must be present exactly when responded")
        if self.rt_ms is not None and self.rt_ms <= 0:
            raise ValueError(f"rt_ms must be positive, got {self.rt_ms}")
        if self.missed and self.responded:
            raise ValueError("a missed trial cannot carry a response")


def generate_trial_plan(
    duration: DurationClass,
    seed: int,
    display_ms: int = DEFAULT_DISPLAY_MS,
) -> list[TrialSpec]:
    """Ten trials: 4:3:3 shape mix, uniformly shuffled, intervals drawn
    uniformly from the duration class range. Deterministic per seed."""
    rng = random.Random(seed)
    shapes = (
        [StimulusShape.TARGET] * SHAPE_COUNTS["target"]
        + [StimulusShape.NON_TARGET] * SHAPE_COUNTS["non_target"]
        + [StimulusShape.DISTRACTOR] * SHAPE_COUNTS["distractor"]
    )
    rng.shuffle(shapes)
    lo, hi = duration.interval_range
    return [
        TrialSpec(
            index=i,
            shape=shape,
            pre_interval_ms=rng.randint(lo, hi),
            display_ms=display_ms,
        )
        for i, shape in enumerate(shapes)
    ]


def score_response(
    spec: TrialSpec,
    key_event: tuple[ResponseKey, int] | None,
    onset_ms: int,
    window_ms: int = DEFAULT_RESPONSE_WINDOW_MS,
) -> TrialOutcome:
    """Score one trial from its (first) key press, if any.

    A press outside (onset, onset + window] is ignored as if absent.
    Distractors score correct exactly when no press lands in the window;
    a press on a distractor is a commission error, never a miss.
    """
    if key_event is not None:
        _, ts_ms = key_event
        if not onset_ms < ts_ms <= onset_ms + window_ms:
            key_event = None

    if key_event is None:
        if spec.shape is StimulusShape.DISTRACTOR:
            return TrialOutcome(
                responded=False, key=None, rt_ms=None, correct=True, missed=False
            )
        return TrialOutcome(
            responded=False, key=None, rt_ms=None, correct=False, missed=True
        )

    key, ts_ms = key_event
    expected = _EXPECTED_KEY.get(spec.shape)
    return TrialOutcome(
        responded=True,
        key=key,
        rt_ms=ts_ms - onset_ms,
        correct=key is expected,
        missed=False,
    )


@dataclass(frozen=True)
class SessionMetrics:
    mean_rt_ms: float | None
    missed_count: int
    accuracy: float


def session_metrics(outcomes: list[TrialOutcome]) -> SessionMetrics:
    """Aggregate one session's ten outcomes.

    Mean RT is taken over correct responded trials only and is absent when
    there are none. Accuracy counts correct distractor non-responses.
    """
    if len(outcomes) != TRIALS_PER_SESSION:
        raise ValueError(
            f"expected {TRIALS_PER_SESSION} outcomes, got {len(outcomes)}"
        )
    rts = [o.rt_ms for o in outcomes if o.responded and o.correct]
    mean_rt = sum(rts) / len(rts) if rts else None
    return SessionMetrics(
        mean_rt_ms=mean_rt,
        missed_count=sum(1 for o in outcomes if o.missed),
        accuracy=sum(1 for o in outcomes if o.correct) / TRIALS_PER_SESSION,
    )
