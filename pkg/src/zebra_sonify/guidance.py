"""Guidance message machine: measures + device pitch -> one of nine instructions.

Priority order (highest first): device attitude, crossing detection, rotation,
lateral position, frontal distance.  A mis-held device invalidates everything
downstream, which is why raise/lower outranks the rest.

The decision function is pure: the only state it needs is the previous
instruction, passed explicitly, which drives the hysteresis rules.  Decisions
are consumed by the sonification scheduler through a latest-value handoff;
readers always observe a complete decision object, never a partial one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .geometry import RelativeMeasures


class Instruction(Enum):
    ROTATE_LEFT = "rotate-left"
    ROTATE_RIGHT = "rotate-right"
    STEP_LEFT = "step-left"
    STEP_RIGHT = "step-right"
    NOT_FOUND = "not-found"
    CROSSWALK_AHEAD = "crosswalk-ahead"
    CROSS = "cross"
    RAISE = "raise"
    LOWER = "lower"


_ROTATIONS = (Instruction.ROTATE_LEFT, Instruction.ROTATE_RIGHT)
_STEPS = (Instruction.STEP_LEFT, Instruction.STEP_RIGHT)


@dataclass(frozen=True)
class GuidanceDecision:
    """An instruction plus the signed "how much" the sonifications encode.

    ``quantity`` is non-negative: radians for rotations and pitch, metres for
    steps and frontal advance, 0 for NOT_FOUND.  ``lateral_bias`` is only
    nonzero for CROSS: -1 = correct fully left, +1 = fully right.
    """

    instruction: Instruction
    quantity: float
    lateral_bias: float = 0.0

    def __post_init__(self):
        if self.quantity < 0:
            raise ValueError("quantity must be >= 0")
        if self.lateral_bias and self.instruction is not Instruction.CROSS:
            raise ValueError("lateral_bias only applies to CROSS")


@dataclass(frozen=True)
class GuidanceConfig:
    """Thresholds for the decision rules.

    The rotation instruction enters above ``align_angle_threshold`` and, once
    active, persists until the angle drops below the stricter
    ``release_angle_threshold`` (classic hysteresis band, release < align).
    """

    align_angle_threshold: float = math.radians(10.0)
    release_angle_threshold: float = math.radians(5.0)
    lateral_margin: float = 0.15
    pitch_threshold: float = math.radians(10.0)
    ahead_max_distance: float = 10.0

    def __post_init__(self):
        values = (
            self.align_angle_threshold,
            self.release_angle_threshold,
            self.lateral_margin,
            self.pitch_threshold,
            self.ahead_max_distance,
        )
        if any(v <= 0 for v in values):
            raise ValueError("all guidance thresholds must be positive")
        if self.release_angle_threshold >= self.align_angle_threshold:
            raise ValueError("release threshold must be below the align threshold")


DEFAULT_GUIDANCE = GuidanceConfig()


def next_instruction(
    measures: RelativeMeasures,
    pitch: float,
    config: GuidanceConfig = DEFAULT_GUIDANCE,
    prev: Instruction | None = None,
) -> GuidanceDecision:
    """Evaluate the priority rules and return the active decision.

    Deterministic in (measures, pitch, config, prev).  ``prev`` is the
    previously active instruction; a rotation keeps its direction while the
    angle sits inside the hysteresis band, and a step persists until the user
    is back inside the borders.
    """
    if abs(pitch) > config.pitch_threshold:
        instr = Instruction.RAISE if pitch > 0 else Instruction.LOWER
        return GuidanceDecision(instr, abs(pitch))

    if not measures.valid:
        return GuidanceDecision(Instruction.NOT_FOUND, 0.0)

    rot = measures.horizontal_rotation
    holding_rotation = prev in _ROTATIONS and abs(rot) > config.release_angle_threshold
    if abs(rot) > config.align_angle_threshold:
        instr = Instruction.ROTATE_RIGHT if rot > 0 else Instruction.ROTATE_LEFT
        return GuidanceDecision(instr, abs(rot))
    if holding_rotation:
        return GuidanceDecision(prev, abs(rot))

    # metres past each border (negative while still inside)
    out_left = -measures.lateral_left
    out_right = -measures.lateral_right
    if out_left > config.lateral_margin or (prev is Instruction.STEP_RIGHT and out_left > 0):
        return GuidanceDecision(Instruction.STEP_RIGHT, out_left)
    if out_right > config.lateral_margin or (prev is Instruction.STEP_LEFT and out_right > 0):
        return GuidanceDecision(Instruction.STEP_LEFT, out_right)

    if measures.min_frontal > 0:
        return GuidanceDecision(
            Instruction.CROSSWALK_AHEAD,
            min(measures.min_frontal, config.ahead_max_distance),
        )

    # On the crossing: steer with a lateral bias derived from the
    # left/right imbalance.  The lateral distances sum to the observed
    # crossing width, so the bias needs no extra layout knowledge.
    width = measures.lateral_left + measures.lateral_right
    if width > 0:
        bias = (measures.lateral_right - measures.lateral_left) / width
        bias = max(-1.0, min(1.0, bias))
    else:
        bias = 0.0
    return GuidanceDecision(Instruction.CROSS, measures.max_frontal, lateral_bias=bias)


@dataclass(frozen=True)
class SpeechEvent:
    """A message to be uttered by the platform's text-to-speech facility."""

    time: float
    text: str
    instruction: Instruction


_SPEECH = {
    Instruction.ROTATE_LEFT: ("Ruota a sinistra", "Rotate left"),
    Instruction.ROTATE_RIGHT: ("Ruota a destra", "Rotate right"),
    Instruction.STEP_LEFT: ("Passo a sinistra", "Step left"),
    Instruction.STEP_RIGHT: ("Passo a destra", "Step right"),
    Instruction.NOT_FOUND: ("Non trovato", "Crosswalk not found"),
    Instruction.CROSSWALK_AHEAD: ("Strisce davanti", "Crosswalk ahead"),
    Instruction.CROSS: ("Attraversa", "Cross"),
    Instruction.RAISE: ("Alza il dispositivo", "Rise the phone"),
    Instruction.LOWER: ("Abbassa il dispositivo", "Lower the phone"),
}

LOCALES = ("it", "en")


def speech_text(instruction: Instruction, locale: str = "it") -> str:
    """Spoken message for an instruction, in Italian or English."""
    if locale not in LOCALES:
        raise ValueError(f"unknown locale {locale!r}; expected one of {LOCALES}")
    italian, english = _SPEECH[instruction]
    return italian if locale == "it" else english


def tap_hint(current: GuidanceDecision, locale: str = "it", time: float = 0.0) -> SpeechEvent:
    """Speech explanation of the instruction currently being conveyed.

    Works in every guiding mode: with sonification it explains the sound
    being played, with speech it repeats the last message.  Idempotent while
    the decision is unchanged.
    """
    return SpeechEvent(time, speech_text(current.instruction, locale), current.instruction)
