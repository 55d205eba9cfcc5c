import math

import numpy as np
import pytest

from oracles import rms_db, xcorr_lag
from zebra_sonify.guidance import GuidanceDecision, Instruction, SpeechEvent
from zebra_sonify.sonification import (
    AudioEvent,
    DEFAULT_MAPPING,
    MappingConfig,
    PanLaw,
    ProgramNote,
    SchedulerState,
    SonificationProgram,
    map_mono,
    map_stereo,
    notes_for_distance,
    pan_ild_itd,
    scale_frequencies,
    scheduler_advance,
)
from zebra_sonify.synthesis import StimulusSpec, render_stimulus

I = Instruction
CFG = DEFAULT_MAPPING
SR = 48000


def deg(x):
    return math.radians(x)


# -- mono mapping -------------------------------------------------------------

def test_rotate_right_rate_interpolation():
    p = map_mono(GuidanceDecision(I.ROTATE_RIGHT, deg(20.0)))
    assert p.stimulus.fundamental == 1200.0
    assert p.stimulus.harmonicity == "inharmonic"
    expected_rate = 3.3 - (3.3 - 1.6) * (20.0 - 10.0) / (90.0 - 10.0)
    assert 1.0 / p.repetition_period == pytest.approx(expected_rate, abs=1e-9)
    assert expected_rate == pytest.approx(3.0875)


def test_rotate_rate_saturates():
    p_far = map_mono(GuidanceDecision(I.ROTATE_LEFT, deg(150.0)))
    assert 1.0 / p_far.repetition_period == pytest.approx(1.6)
    p_near = map_mono(GuidanceDecision(I.ROTATE_LEFT, deg(5.0)))
    assert 1.0 / p_near.repetition_period == pytest.approx(3.3)
    assert p_far.stimulus.fundamental == 300.0


def test_updown_mapping():
    p = map_mono(GuidanceDecision(I.RAISE, deg(60.0)))
    assert p.stimulus.fundamental == 800.0
    assert p.stimulus.harmonicity == "harmonic"
    assert len(p.pattern) == 2  # double beep, back to back
    assert p.pattern[1].onset == pytest.approx(p.stimulus.duration)
    assert 1.0 / p.repetition_period == pytest.approx(1.0)
    near = map_mono(GuidanceDecision(I.LOWER, deg(10.0)))
    assert near.stimulus.fundamental == 200.0
    assert 1.0 / near.repetition_period == pytest.approx(3.3)


def test_step_period_tracks_displacement():
    far = map_mono(GuidanceDecision(I.STEP_LEFT, 2.0))
    mid = map_mono(GuidanceDecision(I.STEP_LEFT, 1.25))
    near = map_mono(GuidanceDecision(I.STEP_RIGHT, 0.5))
    assert far.repetition_period == pytest.approx(0.8)
    assert mid.repetition_period == pytest.approx(0.6)
    assert near.repetition_period == pytest.approx(0.4)
    assert far.stimulus.fundamental == 300.0
    assert near.stimulus.fundamental == 1200.0
    assert [n.onset for n in far.pattern] == pytest.approx([0.0, 0.2])


def test_notfound_pair():
    p = map_mono(GuidanceDecision(I.NOT_FOUND, 0.0))
    assert p.stimulus.fundamental == 200.0
    assert [n.onset for n in p.pattern] == pytest.approx([0.0, 0.3])
    assert p.pattern[0].duration == pytest.approx(0.3)
    assert p.pattern[1].duration == pytest.approx(0.5)


def test_ahead_scale_counts_and_spacing():
    p = map_mono(GuidanceDecision(I.CROSSWALK_AHEAD, 6.0))
    assert len(p.pattern) == 4
    assert [n.onset for n in p.pattern] == pytest.approx([0.0, 0.1, 0.2, 0.3])
    assert p.repetition_period == pytest.approx(1.0)
    assert p.stimulus.partial_count == 1  # pure tones
    freqs = [n.fundamental for n in p.pattern]
    assert freqs[0] == pytest.approx(800.0)
    assert freqs[-1] <= 1700.0 + 1e-9
    assert all(b > a for a, b in zip(freqs, freqs[1:]))  # rising
    ratios = [b / a for a, b in zip(freqs, freqs[1:])]
    assert all(r == pytest.approx(ratios[0]) for r in ratios)  # log spacing


def test_cross_centred():
    p = map_mono(GuidanceDecision(I.CROSS, 5.0, lateral_bias=0.0))
    assert [n.fundamental for n in p.pattern] == [500.0, 800.0, 1000.0]
    assert [n.onset for n in p.pattern] == pytest.approx([0.0, 0.15, 0.3])
    assert p.gain_offset_db == 0.0
    assert p.repetition_period == pytest.approx(1.2)


def test_cross_pitch_shift_and_boost():
    left = map_mono(GuidanceDecision(I.CROSS, 5.0, lateral_bias=-0.4))
    assert [n.fundamental for n in left.pattern] == pytest.approx(
        [500 * 0.33, 800 * 0.33, 1000 * 0.33])
    assert left.gain_offset_db == pytest.approx(8.0)
    right = map_mono(GuidanceDecision(I.CROSS, 5.0, lateral_bias=0.2))
    assert [n.fundamental for n in right.pattern] == pytest.approx([1000., 1600., 2000.])
    assert right.gain_offset_db == pytest.approx(4.0)
    # full boost stays under full scale given the low cross base level
    full = map_mono(GuidanceDecision(I.CROSS, 5.0, lateral_bias=-1.0))
    assert full.stimulus.gain_db + full.gain_offset_db <= -14.0 + 1e-9


def test_cross_period_shrinks_inside_four_metres():
    assert map_mono(GuidanceDecision(I.CROSS, 6.0)).repetition_period == pytest.approx(1.2)
    assert map_mono(GuidanceDecision(I.CROSS, 2.0)).repetition_period == pytest.approx(0.95)
    assert map_mono(GuidanceDecision(I.CROSS, 0.0)).repetition_period == pytest.approx(0.7)


def test_mono_pitch_lateralization_invariant():
    for left, right in ((I.ROTATE_LEFT, I.ROTATE_RIGHT), (I.STEP_LEFT, I.STEP_RIGHT)):
        fl = map_mono(GuidanceDecision(left, 1.0)).stimulus.fundamental
        fr = map_mono(GuidanceDecision(right, 1.0)).stimulus.fundamental
        assert fl < fr


def test_mapping_memoryless():
    d = GuidanceDecision(I.ROTATE_LEFT, deg(33.0))
    assert map_mono(d) == map_mono(d)
    assert map_stereo(d) == map_stereo(d)


# -- stereo mapping -------------------------------------------------------------

def test_stereo_rotate_full_left():
    p = map_stereo(GuidanceDecision(I.ROTATE_LEFT, deg(90.0)))
    assert p.pan == pytest.approx(-1.0)
    assert p.repetition_period == pytest.approx(0.4)
    assert p.stimulus.fundamental == 500.0


def test_stereo_rotate_aligned_is_centred():
    p = map_stereo(GuidanceDecision(I.ROTATE_RIGHT, 0.0))
    assert p.pan == 0.0


def test_stereo_rotate_pan_proportional():
    p = map_stereo(GuidanceDecision(I.ROTATE_RIGHT, deg(45.0)))
    assert p.pan == pytest.approx(0.5)


def test_stereo_step_full_side():
    left = map_stereo(GuidanceDecision(I.STEP_LEFT, 1.0))
    right = map_stereo(GuidanceDecision(I.STEP_RIGHT, 1.0))
    assert left.pan == -1.0 and right.pan == 1.0
    assert left.stimulus.fundamental == 500.0
    assert left.repetition_period == pytest.approx(
        map_mono(GuidanceDecision(I.STEP_LEFT, 1.0)).repetition_period)


def test_stereo_cross_pans_with_bias():
    p = map_stereo(GuidanceDecision(I.CROSS, 3.0, lateral_bias=-0.6))
    assert p.pan == pytest.approx(-0.6)
    assert [n.fundamental for n in p.pattern] == [500.0, 800.0, 1000.0]  # no shift


def test_stereo_rotate_centred_iff_not_rotating():
    # pipeline-level fixed point: while a rotation instruction is active the
    # sound sits off-centre; the moment guidance declares alignment the
    # program (now the approach cue) is centred again
    from zebra_sonify.geometry import RelativeMeasures
    from zebra_sonify.guidance import GuidanceConfig, next_instruction

    cfg = GuidanceConfig()
    prev = None
    for rot_deg in [0.0, 6.0, 12.0, 20.0, 14.0, 9.0, 6.0, 4.0, 2.0, 0.5]:
        m = RelativeMeasures(deg(rot_deg), 2.0, 4.5, 1.25, 1.25)
        d = next_instruction(m, 0.0, cfg, prev)
        prev = d.instruction
        program = map_stereo(d)
        rotating = d.instruction in (I.ROTATE_LEFT, I.ROTATE_RIGHT)
        if rotating:
            assert abs(program.pan) > 0
        else:
            assert program.pan == 0.0


def test_stereo_shared_programs_identical_to_mono():
    for d in (GuidanceDecision(I.CROSSWALK_AHEAD, 10.0),
              GuidanceDecision(I.NOT_FOUND, 0.0),
              GuidanceDecision(I.RAISE, deg(20.0)),
              GuidanceDecision(I.LOWER, deg(20.0))):
        assert map_stereo(d) == map_mono(d)


# -- distance -> note count -----------------------------------------------------

def test_notes_for_distance_table():
    assert notes_for_distance(10.0) == 6
    assert notes_for_distance(8.0) == 5
    assert notes_for_distance(6.0) == 4
    assert notes_for_distance(4.0) == 3
    assert notes_for_distance(2.0) == 2
    assert notes_for_distance(0.1) == 2
    assert notes_for_distance(8.01) == 6
    assert notes_for_distance(25.0) == 6
    with pytest.raises(ValueError):
        notes_for_distance(-1.0)


def test_scale_frequency_endpoints():
    for n in (2, 3, 4, 5, 6):
        freqs = scale_frequencies(n)
        assert freqs[0] == pytest.approx(800.0)
        assert freqs[-1] == pytest.approx(1700.0)


# -- ILD/ITD panning -------------------------------------------------------------

def _burst():
    return render_stimulus(StimulusSpec(700.0, 10, "harmonic", -6.0, duration=0.1), SR)


def test_pan_centre_identical_channels():
    st = pan_ild_itd(_burst(), 0.0, PanLaw(), SR)
    assert np.array_equal(st[:, 0], st[:, 1])


def test_pan_full_right():
    st = pan_ild_itd(_burst(), 1.0, PanLaw(20.0, 0.001), SR)
    level_diff = rms_db(st[:, 1]) - rms_db(st[:, 0])
    assert level_diff == pytest.approx(20.0, abs=0.1)
    assert xcorr_lag(st[:, 1], st[:, 0]) == round(0.001 * SR)


def test_pan_half_left():
    st = pan_ild_itd(_burst(), -0.5, PanLaw(20.0, 0.001), SR)
    level_diff = rms_db(st[:, 0]) - rms_db(st[:, 1])
    assert level_diff == pytest.approx(10.0, abs=0.1)
    assert xcorr_lag(st[:, 0], st[:, 1]) == round(0.0005 * SR)


def test_pan_monotonic_and_achieves_maxima():
    law = PanLaw(20.0, 0.001)
    x = _burst()
    ilds, itds = [], []
    for r in (0.0, 0.25, 0.5, 0.75, 1.0):
        st = pan_ild_itd(x, r, law, SR)
        if r == 0.0:
            ilds.append(0.0)
            itds.append(0)
            continue
        ilds.append(rms_db(st[:, 1]) - rms_db(st[:, 0]))
        itds.append(xcorr_lag(st[:, 1], st[:, 0]))
    assert all(b > a for a, b in zip(ilds, ilds[1:]))
    assert all(b > a for a, b in zip(itds, itds[1:]))
    assert ilds[-1] == pytest.approx(20.0, abs=0.1)
    assert itds[-1] == round(law.max_itd * SR)


def test_pan_rejects_out_of_range():
    with pytest.raises(ValueError):
        pan_ild_itd(_burst(), 1.5, PanLaw(), SR)


# -- scheduler ---------------------------------------------------------------

def advance_constant(state, decision, seconds, tick=1.0 / 30.0):
    events = []
    for _ in range(int(round(seconds / tick))):
        events.extend(scheduler_advance(state, decision, tick))
    return events


def audio_onsets(events):
    # group onsets: first pattern note of each repetition
    times = [e.time for e in events if isinstance(e, AudioEvent)]
    return times


def test_constant_two_hz_gives_two_onsets_per_second():
    # rotation angle whose rate maps exactly to 2.0 Hz
    t = (3.3 - 2.0) / (3.3 - 1.6)
    angle = deg(10.0 + t * 80.0)
    state = SchedulerState("mono")
    events = advance_constant(state, GuidanceDecision(I.ROTATE_RIGHT, angle), 1.0)
    onsets = audio_onsets(events)
    assert len(onsets) == 2
    assert onsets[0] == pytest.approx(0.0)
    assert onsets[1] == pytest.approx(0.5, abs=1e-9)


def test_speech_mode_single_event_per_transition():
    state = SchedulerState("speech")
    d = GuidanceDecision(I.ROTATE_LEFT, 1.0)
    events = advance_constant(state, d, 10.0)
    speech = [e for e in events if isinstance(e, SpeechEvent)]
    assert len(speech) == 1
    assert speech[0].text == "Ruota a sinistra"
    # change fires exactly one more
    events = advance_constant(state, GuidanceDecision(I.CROSS, 1.0), 5.0)
    speech = [e for e in events if isinstance(e, SpeechEvent)]
    assert len(speech) == 1
    assert not [e for e in events if isinstance(e, AudioEvent)]


def test_rotation_sweep_intervals_strictly_decrease():
    state = SchedulerState("mono")
    tick = 1.0 / 30.0
    events = []
    steps = int(5.0 / tick)
    for k in range(steps):
        angle = deg(90.0) * (1.0 - k / steps)
        d = GuidanceDecision(I.ROTATE_RIGHT, angle)
        events.extend(scheduler_advance(state, d, tick))
    onsets = audio_onsets(events)
    iois = np.diff(onsets)
    assert len(iois) >= 6
    fast = 1.0 / 3.3
    for a, b in zip(iois, iois[1:]):
        assert b < a or (abs(a - fast) < 1e-9 and abs(b - fast) < 1e-9)
    assert iois[0] > 0.5            # started near the slow end (1/1.6 = 0.625)
    assert iois[-1] < fast + 0.02   # ended at the fast end


def test_instruction_change_restarts_pattern_immediately():
    state = SchedulerState("mono")
    d1 = GuidanceDecision(I.ROTATE_LEFT, deg(80.0))
    advance_constant(state, d1, 0.1)
    events = scheduler_advance(state, GuidanceDecision(I.STEP_RIGHT, 1.0), 1.0 / 30.0)
    audio = [e for e in events if isinstance(e, AudioEvent)]
    assert audio and audio[0].stimulus.fundamental == 1200.0
    assert audio[0].time == pytest.approx(state.time - 1.0 / 30.0)


def test_scale_in_flight_completes_on_bucket_change():
    state = SchedulerState("mono")
    tick = 1.0 / 30.0
    events = []
    for k in range(60):  # 2 s
        q = 6.0 if state.time < 0.15 else 7.0  # bucket change mid-scale
        events.extend(scheduler_advance(state, GuidanceDecision(I.CROSSWALK_AHEAD, q), tick))
    audio = [e for e in events if isinstance(e, AudioEvent)]
    first_group = [e for e in audio if e.time < 0.9]
    second_group = [e for e in audio if 0.9 <= e.time < 1.9]
    assert len(first_group) == 4   # the 6 m scale finished intact
    assert len(second_group) == 5  # next repetition used the new distance


def test_scheduler_validation():
    state = SchedulerState("mono")
    with pytest.raises(ValueError):
        scheduler_advance(state, GuidanceDecision(I.CROSS, 1.0), 0.0)
    with pytest.raises(ValueError):
        SchedulerState("binaural")


def test_program_validation():
    stim = StimulusSpec(440.0)
    with pytest.raises(ValueError):
        SonificationProgram(stim, (), 1.0)
    with pytest.raises(ValueError):
        SonificationProgram(stim, (ProgramNote(0.0, 440.0), ProgramNote(0.0, 440.0)), 1.0)
    with pytest.raises(ValueError):
        SonificationProgram(stim, (ProgramNote(0.0, 440.0),), 1.0, pan=2.0)
