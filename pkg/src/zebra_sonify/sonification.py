"""Parameter-mapping layer: guidance decisions -> scheduled, panned stimuli.

Two sonification modes share one program model:

* mono encodes left/right in pitch (low = left, high = right, like a piano
  keyboard seen from the player) and urgency in repetition rate;
* stereo encodes left/right by lateralizing a fixed-pitch sound with
  interaural level and time differences.

Programs are re-derived from the latest decision at every control tick, so
rate, pitch and pan track the user continuously.  The scheduler state is
owned by a single audio-control thread; decisions arrive by latest-value
handoff and parameter changes take effect at the next event boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .guidance import GuidanceDecision, Instruction, SpeechEvent, speech_text
from .synthesis import StimulusSpec

MODES = ("speech", "mono", "stereo")


@dataclass(frozen=True)
class PanLaw:
    """Maximum interaural level (dB) and time (s) differences at full pan."""

    max_ild: float = 20.0
    max_itd: float = 0.001

    def __post_init__(self):
        if self.max_ild <= 0 or self.max_itd <= 0:
            raise ValueError("pan law maxima must be positive")


DEFAULT_PAN_LAW = PanLaw()


@dataclass(frozen=True)
class ProgramNote:
    """One note of a repeating pattern: onset offset from the group start,
    fundamental in Hz, optional per-note duration override."""

    onset: float
    fundamental: float
    duration: float | None = None


@dataclass(frozen=True)
class SonificationProgram:
    """A possibly repeating stream of panned stimuli.

    ``pattern`` onsets are strictly increasing; ``repetition_period`` is the
    spacing between group starts (None = one-shot).  ``pan`` is an azimuth
    ratio in [-1, +1], -1 full left.
    """

    stimulus: StimulusSpec
    pattern: tuple[ProgramNote, ...]
    repetition_period: float | None
    pan: float = 0.0
    gain_offset_db: float = 0.0

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("pattern must contain at least one note")
        onsets = [n.onset for n in self.pattern]
        if any(b <= a for a, b in zip(onsets, onsets[1:])):
            raise ValueError("pattern onsets must be strictly increasing")
        if self.repetition_period is not None and self.repetition_period <= 0:
            raise ValueError("repetition_period must be positive")
        if not -1.0 <= self.pan <= 1.0:
            raise ValueError("pan must be in [-1, 1]")


@dataclass(frozen=True)
class AudioEvent:
    """A stimulus onset placed on the session timeline."""

    time: float
    stimulus: StimulusSpec
    pan: float = 0.0
    gain_offset_db: float = 0.0


@dataclass(frozen=True)
class MappingConfig:
    """Every constant of the decision-to-sound mapping.

    Angles in radians, times in seconds, frequencies in Hz.  The rotation
    rate saturates at ``rotate_far_angle``: anything larger maps to the slow
    end of the scale.
    """

    # rotate (mono): pitch encodes side, rate encodes closeness to aligned
    rotate_low_hz: float = 300.0
    rotate_high_hz: float = 1200.0
    rotate_rate_far_hz: float = 1.6
    rotate_rate_near_hz: float = 3.3
    rotate_far_angle: float = math.pi / 2
    rotate_near_angle: float = math.radians(10.0)
    # rotate/step (stereo)
    stereo_impulse_hz: float = 500.0
    stereo_rotate_period: float = 0.4
    # step: double hit, period encodes required displacement
    step_low_hz: float = 300.0
    step_high_hz: float = 1200.0
    step_gap: float = 0.2
    step_period_far: float = 0.8
    step_far_displacement: float = 2.0
    step_period_near: float = 0.4
    step_near_displacement: float = 0.5
    # raise/lower: double beep, rate grows towards the correct inclination
    raise_hz: float = 800.0
    lower_hz: float = 200.0
    updown_rate_min_hz: float = 1.0
    updown_rate_max_hz: float = 3.3
    updown_far_angle: float = math.radians(60.0)
    updown_near_angle: float = math.radians(10.0)
    # not found: slow low pair
    notfound_hz: float = 200.0
    notfound_first_duration: float = 0.3
    notfound_second_duration: float = 0.5
    notfound_period: float = 2.0
    # crosswalk ahead: rising pure-tone scale, note count from distance
    scale_low_hz: float = 800.0
    scale_high_hz: float = 1700.0
    scale_note_gap: float = 0.1
    scale_period: float = 1.0
    # cross: three-note group; pitch shift / loudness convey the correction
    cross_fundamentals: tuple[float, float, float] = (500.0, 800.0, 1000.0)
    cross_note_gap: float = 0.15
    cross_period_far: float = 1.2
    cross_period_near: float = 0.7
    cross_near_distance: float = 4.0
    cross_left_factor: float = 0.33
    cross_right_factor: float = 2.0
    cross_boost_db: float = 20.0
    cross_gain_db: float = -34.0


DEFAULT_MAPPING = MappingConfig()

# Stimulus characters.  Partial counts stay within the 5..20 impulsive range
# (1 = pure tone); decays are short for the fast transients, long for the
# deliberately sluggish not-found pair.
_IMPULSE_DURATION = 0.12
_PURE_NOTE_DURATION = 0.09


def _beep(f0: float) -> StimulusSpec:
    return StimulusSpec(f0, partial_count=10, harmonicity="harmonic",
                        rolloff_db_per_octave=-6.0, duration=_IMPULSE_DURATION,
                        base_decay=0.06)


def _metal(f0: float) -> StimulusSpec:
    return StimulusSpec(f0, partial_count=12, harmonicity="inharmonic",
                        rolloff_db_per_octave=-3.0, duration=_IMPULSE_DURATION,
                        base_decay=0.05)


def _wood(f0: float, gain_db: float = -14.0) -> StimulusSpec:
    return StimulusSpec(f0, partial_count=8, harmonicity="inharmonic",
                        rolloff_db_per_octave=-6.0, duration=_IMPULSE_DURATION,
                        base_decay=0.04, gain_db=gain_db)


def _slow_low(f0: float, duration: float) -> StimulusSpec:
    return StimulusSpec(f0, partial_count=8, harmonicity="inharmonic",
                        rolloff_db_per_octave=-6.0, duration=duration,
                        base_decay=0.25)


def _pure(f0: float) -> StimulusSpec:
    return StimulusSpec(f0, partial_count=1, duration=_PURE_NOTE_DURATION,
                        base_decay=0.05)


def _linmap(x: float, x_far: float, x_near: float, y_far: float, y_near: float) -> float:
    """Linear map clamped to its endpoints; x_near maps to y_near."""
    if x_far == x_near:
        return y_near
    t = (x - x_near) / (x_far - x_near)
    t = max(0.0, min(1.0, t))
    return y_near + t * (y_far - y_near)


def notes_for_distance(frontal: float) -> int:
    """Note count of the rising scale for a required frontal advance."""
    if frontal < 0:
        raise ValueError("frontal distance must be >= 0")
    if frontal > 8.0:
        return 6
    if frontal > 6.0:
        return 5
    if frontal > 4.0:
        return 4
    if frontal > 2.0:
        return 3
    return 2


def scale_frequencies(count: int, cfg: MappingConfig = DEFAULT_MAPPING) -> list[float]:
    """``count`` notes spaced equally in log-frequency across the scale range."""
    if count < 2:
        raise ValueError("scale needs at least 2 notes")
    ratio = cfg.scale_high_hz / cfg.scale_low_hz
    return [cfg.scale_low_hz * ratio ** (k / (count - 1)) for k in range(count)]


def _updown_program(decision: GuidanceDecision, cfg: MappingConfig) -> SonificationProgram:
    f0 = cfg.raise_hz if decision.instruction is Instruction.RAISE else cfg.lower_hz
    stim = _beep(f0)
    rate = _linmap(decision.quantity, cfg.updown_far_angle, cfg.updown_near_angle,
                   cfg.updown_rate_min_hz, cfg.updown_rate_max_hz)
    # two quick repetitions with no pause in between
    pattern = (ProgramNote(0.0, f0), ProgramNote(stim.duration, f0))
    return SonificationProgram(stim, pattern, 1.0 / rate)


def _notfound_program(cfg: MappingConfig) -> SonificationProgram:
    pattern = (
        ProgramNote(0.0, cfg.notfound_hz, cfg.notfound_first_duration),
        ProgramNote(cfg.notfound_first_duration, cfg.notfound_hz, cfg.notfound_second_duration),
    )
    return SonificationProgram(_slow_low(cfg.notfound_hz, cfg.notfound_first_duration),
                               pattern, cfg.notfound_period)


def _ahead_program(decision: GuidanceDecision, cfg: MappingConfig) -> SonificationProgram:
    count = notes_for_distance(decision.quantity)
    freqs = scale_frequencies(count, cfg)
    pattern = tuple(ProgramNote(k * cfg.scale_note_gap, f) for k, f in enumerate(freqs))
    return SonificationProgram(_pure(freqs[0]), pattern, cfg.scale_period)


def _cross_period(decision: GuidanceDecision, cfg: MappingConfig) -> float:
    return _linmap(decision.quantity, cfg.cross_near_distance, 0.0,
                   cfg.cross_period_far, cfg.cross_period_near)


def map_mono(decision: GuidanceDecision, cfg: MappingConfig = DEFAULT_MAPPING) -> SonificationProgram:
    """Mono sonification: everything is conveyed by pitch, rate and level."""
    instr = decision.instruction

    if instr in (Instruction.RAISE, Instruction.LOWER):
        return _updown_program(decision, cfg)

    if instr in (Instruction.ROTATE_LEFT, Instruction.ROTATE_RIGHT):
        f0 = cfg.rotate_low_hz if instr is Instruction.ROTATE_LEFT else cfg.rotate_high_hz
        rate = _linmap(decision.quantity, cfg.rotate_far_angle, cfg.rotate_near_angle,
                       cfg.rotate_rate_far_hz, cfg.rotate_rate_near_hz)
        return SonificationProgram(_metal(f0), (ProgramNote(0.0, f0),), 1.0 / rate)

    if instr in (Instruction.STEP_LEFT, Instruction.STEP_RIGHT):
        f0 = cfg.step_low_hz if instr is Instruction.STEP_LEFT else cfg.step_high_hz
        period = _linmap(decision.quantity, cfg.step_far_displacement, cfg.step_near_displacement,
                         cfg.step_period_far, cfg.step_period_near)
        pattern = (ProgramNote(0.0, f0), ProgramNote(cfg.step_gap, f0))
        return SonificationProgram(_wood(f0), pattern, period)

    if instr is Instruction.NOT_FOUND:
        return _notfound_program(cfg)

    if instr is Instruction.CROSSWALK_AHEAD:
        return _ahead_program(decision, cfg)

    if instr is Instruction.CROSS:
        bias = decision.lateral_bias
        if bias < 0:
            factor = cfg.cross_left_factor
        elif bias > 0:
            factor = cfg.cross_right_factor
        else:
            factor = 1.0
        funds = [f * factor for f in cfg.cross_fundamentals]
        pattern = tuple(ProgramNote(k * cfg.cross_note_gap, f) for k, f in enumerate(funds))
        return SonificationProgram(
            _wood(funds[0], gain_db=cfg.cross_gain_db),
            pattern,
            _cross_period(decision, cfg),
            gain_offset_db=cfg.cross_boost_db * abs(bias),
        )

    raise ValueError(f"unmapped instruction {instr}")


def map_stereo(decision: GuidanceDecision, cfg: MappingConfig = DEFAULT_MAPPING) -> SonificationProgram:
    """Stereo sonification: left/right comes from lateralization instead of
    pitch; attitude, not-found and the rising scale are identical to mono."""
    instr = decision.instruction

    if instr in (Instruction.ROTATE_LEFT, Instruction.ROTATE_RIGHT):
        signed = decision.quantity if instr is Instruction.ROTATE_RIGHT else -decision.quantity
        pan = max(-1.0, min(1.0, signed / cfg.rotate_far_angle))
        f0 = cfg.stereo_impulse_hz
        return SonificationProgram(_metal(f0), (ProgramNote(0.0, f0),),
                                   cfg.stereo_rotate_period, pan=pan)

    if instr in (Instruction.STEP_LEFT, Instruction.STEP_RIGHT):
        pan = -1.0 if instr is Instruction.STEP_LEFT else 1.0
        f0 = cfg.stereo_impulse_hz
        period = _linmap(decision.quantity, cfg.step_far_displacement, cfg.step_near_displacement,
                         cfg.step_period_far, cfg.step_period_near)
        pattern = (ProgramNote(0.0, f0), ProgramNote(cfg.step_gap, f0))
        return SonificationProgram(_wood(f0), pattern, period, pan=pan)

    if instr is Instruction.CROSS:
        pan = max(-1.0, min(1.0, decision.lateral_bias))
        pattern = tuple(ProgramNote(k * cfg.cross_note_gap, f)
                        for k, f in enumerate(cfg.cross_fundamentals))
        return SonificationProgram(_wood(cfg.cross_fundamentals[0]), pattern,
                                   _cross_period(decision, cfg), pan=pan)

    return map_mono(decision, cfg)


def pan_ild_itd(
    mono: np.ndarray,
    azimuth_ratio: float,
    law: PanLaw = DEFAULT_PAN_LAW,
    sample_rate: float = 48000.0,
) -> np.ndarray:
    """Lateralize a mono buffer into an (n + delay, 2) stereo array.

    The contralateral channel is attenuated by ``|ratio| * max_ild`` dB and
    delayed by ``|ratio| * max_itd`` seconds (rounded to whole samples); the
    ipsilateral channel passes through untouched.  ratio 0 yields identical
    channels.
    """
    if not -1.0 <= azimuth_ratio <= 1.0:
        raise ValueError("azimuth_ratio must be in [-1, 1]")
    mono = np.asarray(mono, dtype=np.float64)
    amount = abs(azimuth_ratio)
    delay = int(round(amount * law.max_itd * sample_rate))
    atten = 10.0 ** (-amount * law.max_ild / 20.0)
    n = len(mono)
    out = np.zeros((n + delay, 2), dtype=np.float64)
    ipsi = 1 if azimuth_ratio > 0 else 0
    contra = 1 - ipsi
    out[:n, ipsi] = mono
    out[delay : delay + n, contra] = mono * atten
    return out


@dataclass
class SchedulerState:
    """Repetition clock for one session; owned by the audio-control thread."""

    mode: str
    time: float = 0.0
    prev_instruction: Instruction | None = None
    last_group_time: float | None = None
    pending: list[AudioEvent] = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")


def _group_events(program: SonificationProgram, start: float) -> list[AudioEvent]:
    events = []
    for note in program.pattern:
        stim = replace(program.stimulus, fundamental=note.fundamental)
        if note.duration is not None:
            stim = replace(stim, duration=note.duration)
        events.append(AudioEvent(start + note.onset, stim, program.pan,
                                 program.gain_offset_db))
    return events


def scheduler_advance(
    state: SchedulerState,
    decision: GuidanceDecision,
    dt: float,
    cfg: MappingConfig = DEFAULT_MAPPING,
    locale: str = "it",
) -> list:
    """Advance the clock by ``dt`` and return the events due in that window.

    The program is re-derived from ``decision`` on every call, so repetition
    rate, pitch and pan follow the user continuously; a pattern already in
    flight completes with the parameters it started with.  An instruction
    change restarts the pattern immediately and, in speech mode, emits
    exactly one speech event.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    t0 = state.time
    t1 = t0 + dt
    out: list = []

    if decision.instruction is not state.prev_instruction:
        state.prev_instruction = decision.instruction
        state.pending.clear()
        state.last_group_time = None
        if state.mode == "speech":
            out.append(SpeechEvent(t0, speech_text(decision.instruction, locale),
                                   decision.instruction))

    if state.mode != "speech":
        mapper = map_mono if state.mode == "mono" else map_stereo
        program = mapper(decision, cfg)
        while True:
            if state.last_group_time is None:
                target = t0
            elif program.repetition_period is None:
                break
            else:
                # retarget against the latest program so the rate tracks the
                # user; a shrinking period can pull the next onset up to "now"
                target = max(state.last_group_time + program.repetition_period, t0)
            if target >= t1:
                break
            state.pending.extend(_group_events(program, target))
            state.last_group_time = target

        state.pending.sort(key=lambda e: e.time)
        due = [e for e in state.pending if e.time < t1]
        if due:
            state.pending = [e for e in state.pending if e.time >= t1]
            out.extend(due)

    state.time = t1
    out.sort(key=lambda e: e.time)
    return out
