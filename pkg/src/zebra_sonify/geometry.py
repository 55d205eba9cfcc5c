"""Planar world model: pedestrian pose, crossing layout, relative measures.

Conventions used throughout the package:

* world frame: x/y in metres, angles in radians, counterclockwise from +x,
  normalized to (-pi, pi];
* the crossing axis (``CrossingLayout.orientation``) points in the walking
  direction, perpendicular to the painted stripes;
* ``horizontal_rotation`` is ``heading - orientation``: positive means the
  crossing lies to the user's right, i.e. "rotate right to align";
* frontal distances are measured along the crossing axis, lateral distances
  along the axis perpendicular to it.  Lateral distances are signed: they go
  negative once the user has passed the corresponding border.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Device grip treated as ideal: tilted this far from vertical (camera pointing
# slightly down at the pavement ahead).
DEFAULT_CAPTURE_PITCH = math.radians(30.0)

GRAVITY = 9.80665


class NoRecognitionError(RuntimeError):
    """Heading fusion was queried before any recognition arrived."""


def wrap_angle(angle: float) -> float:
    """Normalize an angle to (-pi, pi].

    Values already in range pass through bit-identically, so wrapping is
    idempotent; sensor-fusion resets rely on that exactness.
    """
    if -math.pi < angle <= math.pi:
        return angle
    return math.pi - (math.pi - angle) % TWO_PI


@dataclass(frozen=True)
class Pose:
    """Pedestrian state: position, heading, and device pitch error.

    ``pitch`` is the deviation of the device tilt from the ideal capture
    angle (0 = held correctly, positive = tilted too far down).
    """

    x: float
    y: float
    heading: float
    pitch: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(self.heading))
        if not -math.pi / 2 <= self.pitch <= math.pi / 2:
            raise ValueError(f"pitch {self.pitch} outside [-pi/2, pi/2]")


@dataclass(frozen=True)
class CrossingLayout:
    """Zebra crossing: contiguous stripes spanning ``stripe_count * stripe_width``
    metres along the crossing axis, ``stripe_length`` metres laterally.

    ``origin`` is the centre of the near edge of the first stripe.
    """

    origin: tuple[float, float] = (0.0, 0.0)
    orientation: float = 0.0
    stripe_count: int = 5
    stripe_width: float = 0.5
    stripe_length: float = 2.5

    def __post_init__(self):
        if self.stripe_count < 1:
            raise ValueError("stripe_count must be >= 1")
        if self.stripe_width <= 0 or self.stripe_length <= 0:
            raise ValueError("stripe dimensions must be positive")
        object.__setattr__(self, "orientation", wrap_angle(self.orientation))

    @property
    def span(self) -> float:
        """Extent of the striped area along the crossing axis."""
        return self.stripe_count * self.stripe_width

    def axis(self) -> tuple[float, float]:
        return math.cos(self.orientation), math.sin(self.orientation)

    def lateral_axis(self) -> tuple[float, float]:
        """Unit vector pointing towards the left border (relative to the
        walking direction)."""
        ux, uy = self.axis()
        return -uy, ux

    def stripe_corners(self) -> np.ndarray:
        """World coordinates of every stripe corner, shape (4 * count, 2)."""
        ux, uy = self.axis()
        lx, ly = self.lateral_axis()
        ox, oy = self.origin
        half = 0.5 * self.stripe_length
        pts = []
        for k in range(self.stripe_count):
            near = k * self.stripe_width
            far = near + self.stripe_width
            for s in (near, far):
                for t in (-half, half):
                    pts.append((ox + s * ux + t * lx, oy + s * uy + t * ly))
        return np.asarray(pts, dtype=np.float64)


@dataclass(frozen=True)
class RelativeMeasures:
    """The five user-relative quantities the guidance logic consumes."""

    horizontal_rotation: float
    min_frontal: float
    max_frontal: float
    lateral_left: float
    lateral_right: float
    valid: bool = True

    @staticmethod
    def invalid() -> "RelativeMeasures":
        return RelativeMeasures(0.0, 0.0, 0.0, 0.0, 0.0, valid=False)


def compute_relative_measures(pose: Pose, layout: CrossingLayout) -> RelativeMeasures:
    """Exact geometric measures of the crossing relative to the user.

    Total function: always returns ``valid=True``; visibility gating is the
    recognizer model's job.  Frontal distances are clamped at zero once the
    user is on (or past) the corresponding edge; lateral distances stay
    signed so callers can tell how far outside a border the user is.
    """
    ux, uy = layout.axis()
    lx, ly = layout.lateral_axis()
    rx = pose.x - layout.origin[0]
    ry = pose.y - layout.origin[1]
    s = rx * ux + ry * uy
    lateral = rx * lx + ry * ly
    half = 0.5 * layout.stripe_length
    return RelativeMeasures(
        horizontal_rotation=wrap_angle(pose.heading - layout.orientation),
        min_frontal=max(0.0, -s),
        max_frontal=max(0.0, layout.span - s),
        lateral_left=half - lateral,
        lateral_right=half + lateral,
    )


@dataclass
class FusionState:
    """Gyroscope-corrected rotation estimate, reset at every recognition.

    Single-writer: updates must come from one thread (the simulation or
    session loop); reads are safe anywhere.
    """

    last_recognition_angle: float | None = None
    heading_at_recognition: float | None = None
    last_recognition_time: float = float("-inf")

    @property
    def initialized(self) -> bool:
        return self.last_recognition_angle is not None

    def update_recognition(self, angle: float, heading: float, time: float) -> None:
        if time < self.last_recognition_time:
            raise ValueError(
                f"recognition time went backwards: {time} < {self.last_recognition_time}"
            )
        self.last_recognition_angle = wrap_angle(angle)
        self.heading_at_recognition = wrap_angle(heading)
        self.last_recognition_time = time


def fuse_heading(state: FusionState, current_heading: float) -> float:
    """Rotation estimate between recognitions.

    Corrects the last recognized rotation angle by how much the user has
    turned since, so the estimate tracks at gyro rate instead of the much
    slower recognition rate.
    """
    if not state.initialized:
        raise NoRecognitionError("no recognition yet")
    turned = wrap_angle(current_heading - state.heading_at_recognition)
    return wrap_angle(state.last_recognition_angle + turned)


def gravity_vector(tilt: float, g: float = GRAVITY) -> tuple[float, float, float]:
    """Gravity direction in the device frame for a device tilted ``tilt``
    radians away from the vertical grip (0 = upright, pi/2 = flat, screen up).

    Device axes: +x right, +y towards the earpiece, +z out of the screen.
    """
    return (0.0, -g * math.cos(tilt), -g * math.sin(tilt))


def pitch_from_gravity(accel, ideal_capture_angle: float = DEFAULT_CAPTURE_PITCH) -> float:
    """Device pitch error from an accelerometer gravity sample.

    Returns 0 when the device sits at the configured ideal capture angle,
    positive when tilted further down (towards flat).
    """
    ax, ay, az = (float(v) for v in accel)
    if ax * ax + ay * ay + az * az == 0.0:
        raise ValueError("zero-magnitude acceleration vector")
    tilt = math.atan2(-az, -ay)
    return wrap_angle(tilt - ideal_capture_angle)
