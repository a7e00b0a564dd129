"""Screen quadrants and their mapping onto body sites.

The screen is split into four equal sub-areas around its center. Each
sub-area drives exactly one vibration site: upper areas map to wrists,
lower areas to ankles, left/right preserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import InvalidSampleError

SCREEN_CENTER = (0.5, 0.5)

# Largest possible center distance (a screen corner).
MAX_CENTER_DISTANCE = math.sqrt(0.5)


@dataclass(frozen=True)
class GazeSample:
    """One on-screen gaze point in normalized coordinates.

    x runs 0 (left edge) to 1 (right edge), y runs 0 (top edge) to
    1 (bottom edge). ``valid`` is the tracker's quality flag; invalid
    samples carry no usable position and must never actuate.
    """

    ts_ms: int
    x: float
    y: float
    valid: bool = True

    def __post_init__(self) -> None:
        if self.valid and not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise ValueError(
                f"valid sample out of range: x={self.x}, y={self.y}"
            )


def sample_from_fields(
    ts_ms: int, x: object, y: object, valid: object = True
) -> GazeSample | None:
    """Build a sample from untrusted wire fields.

    Returns None when the fields cannot form a usable sample (wrong
    types, non-finite or out-of-range coordinates on a valid sample).
    Both the live service and log replay route wire payloads through
    here so they skip exactly the same samples.
    """
    if not isinstance(valid, bool):
        return None
    if isinstance(x, bool) or isinstance(y, bool):
        return None
    if not isinstance(x, (int, float)) or not isinstance(y, (int, float)):
        return None
    if not (math.isfinite(x) and math.isfinite(y)):
        return None
    try:
        return GazeSample(ts_ms=ts_ms, x=float(x), y=float(y), valid=valid)
    except ValueError:
        return None


class Quadrant(Enum):
    UPPER_LEFT = "UL"
    UPPER_RIGHT = "UR"
    LOWER_LEFT = "LL"
    LOWER_RIGHT = "LR"


class BodySite(Enum):
    LEFT_WRIST = "LW"
    RIGHT_WRIST = "RW"
    LEFT_ANKLE = "LA"
    RIGHT_ANKLE = "RA"


_QUADRANT_TO_SITE = {
    Quadrant.UPPER_LEFT: BodySite.LEFT_WRIST,
    Quadrant.UPPER_RIGHT: BodySite.RIGHT_WRIST,
    Quadrant.LOWER_LEFT: BodySite.LEFT_ANKLE,
    Quadrant.LOWER_RIGHT: BodySite.RIGHT_ANKLE,
}


def classify_quadrant(sample: GazeSample) -> Quadrant:
    """Return the screen sub-area the sample falls in.

    Ties at exactly 0.5 go to the right/lower half, so the four
    quadrants partition the whole unit square.

    Raises:
        InvalidSampleError: the sample's quality flag is false.
    """
    if not sample.valid:
        raise InvalidSampleError("cannot classify an invalid gaze sample")
    if sample.y < 0.5:
        return Quadrant.UPPER_LEFT if sample.x < 0.5 else Quadrant.UPPER_RIGHT
    return Quadrant.LOWER_LEFT if sample.x < 0.5 else Quadrant.LOWER_RIGHT


def quadrant_to_body_site(quadrant: Quadrant) -> BodySite:
    """Fixed bijection from screen sub-area to vibration site."""
    return _QUADRANT_TO_SITE[quadrant]


def distance_from_center(sample: GazeSample) -> float:
    """Euclidean distance from the screen center, in normalized units.

    Ranges from 0 (center) to sqrt(0.5) (a corner).

    Raises:
        InvalidSampleError: the sample's quality flag is false.
    """
    if not sample.valid:
        raise InvalidSampleError("cannot measure an invalid gaze sample")
    return math.hypot(sample.x - SCREEN_CENTER[0], sample.y - SCREEN_CENTER[1])
