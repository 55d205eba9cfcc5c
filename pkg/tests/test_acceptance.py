"""Acceptance criteria, one test per criterion, each printing a PASS line.

Tolerances are pinned here and nowhere else: FFT fundamentals +-2 Hz,
rate-map inter-onset intervals +-5 ms, spatialization +-0.1 dB and +-1
sample, geometry vs brute-force oracle 1e-9, staircase bias 0.5 dB / 0.05 ms,
closed-loop 18/18 noiseless and >=17/18 noisy, streamed PCM byte-identical
to the offline render.
"""

import math
import time

import numpy as np
import pytest

from oracles import corner_oracle_measures, onset_times, rms_db, xcorr_lag
from zebra_sonify.audio_io import render_session_audio, stream_blocks
from zebra_sonify.guidance import GuidanceDecision, Instruction
from zebra_sonify.psychoacoustics import self_test
from zebra_sonify.simulator import (
    PolicyState,
    RecognizerModel,
    SessionEngine,
    default_scenarios,
    event_log_csv,
    instruction_follower,
    run_scripted,
)
from zebra_sonify.sonification import (
    AudioEvent,
    PanLaw,
    SchedulerState,
    map_mono,
    map_stereo,
    pan_ild_itd,
    scheduler_advance,
)
from zebra_sonify.synthesis import StimulusSpec, estimate_fundamental, render_stimulus
from zebra_sonify.geometry import Pose, CrossingLayout, compute_relative_measures

I = Instruction
SR = 48000
FREQ_TOL_HZ = 2.0
IOI_TOL_S = 0.005
ILD_TOL_DB = 0.1
ITD_TOL_SAMPLES = 1
GEOMETRY_TOL = 1e-9
ILD_BIAS_TOL_DB = 0.5
ITD_BIAS_TOL_MS = 0.05
NOISE_MODEL = RecognizerModel(angle_noise_sd=math.radians(2.0),
                              distance_noise_sd=0.1,
                              dropout_probability=0.05)


def _report(name: str) -> None:
    print(f"[ACCEPTANCE] {name}: PASS", flush=True)


def _note_fundamentals(program) -> list[float]:
    """Fundamentals measured from the rendered audio of each pattern note."""
    from dataclasses import replace
    out = []
    for note in program.pattern:
        stim = replace(program.stimulus, fundamental=note.fundamental)
        if note.duration is not None:
            stim = replace(stim, duration=note.duration)
        out.append(estimate_fundamental(render_stimulus(stim, SR), SR))
    return out


def test_sonification_parameter_conformance():
    start = time.monotonic()
    rotate_q = math.radians(45.0)

    # expected measured fundamentals, per mode and instruction
    table = {
        "mono": {
            GuidanceDecision(I.ROTATE_LEFT, rotate_q): [300.0],
            GuidanceDecision(I.ROTATE_RIGHT, rotate_q): [1200.0],
            GuidanceDecision(I.STEP_LEFT, 1.0): [300.0, 300.0],
            GuidanceDecision(I.STEP_RIGHT, 1.0): [1200.0, 1200.0],
            GuidanceDecision(I.RAISE, 0.5): [800.0, 800.0],
            GuidanceDecision(I.LOWER, 0.5): [200.0, 200.0],
            GuidanceDecision(I.NOT_FOUND, 0.0): [200.0, 200.0],
            GuidanceDecision(I.CROSS, 5.0): [500.0, 800.0, 1000.0],
        },
        "stereo": {
            GuidanceDecision(I.ROTATE_LEFT, rotate_q): [500.0],
            GuidanceDecision(I.ROTATE_RIGHT, rotate_q): [500.0],
            GuidanceDecision(I.STEP_LEFT, 1.0): [500.0, 500.0],
            GuidanceDecision(I.STEP_RIGHT, 1.0): [500.0, 500.0],
            GuidanceDecision(I.RAISE, 0.5): [800.0, 800.0],
            GuidanceDecision(I.LOWER, 0.5): [200.0, 200.0],
            GuidanceDecision(I.NOT_FOUND, 0.0): [200.0, 200.0],
            GuidanceDecision(I.CROSS, 5.0): [500.0, 800.0, 1000.0],
        },
    }
    for mode, rows in table.items():
        mapper = map_mono if mode == "mono" else map_stereo
        for decision, expected in rows.items():
            got = _note_fundamentals(mapper(decision))
            assert len(got) == len(expected), (mode, decision)
            for g, e in zip(got, expected):
                assert g == pytest.approx(e, abs=FREQ_TOL_HZ), (mode, decision, got)

    # rising-scale note counts at the five reference distances
    for distance, count in ((10.0, 6), (8.0, 5), (6.0, 4), (4.0, 3), (2.0, 2)):
        for mapper in (map_mono, map_stereo):
            program = mapper(GuidanceDecision(I.CROSSWALK_AHEAD, distance))
            assert len(program.pattern) == count, (distance, count)
            measured = _note_fundamentals(program)
            assert all(b > a for a, b in zip(measured, measured[1:]))
            assert measured[0] == pytest.approx(800.0, abs=FREQ_TOL_HZ)
            assert measured[-1] == pytest.approx(1700.0, abs=FREQ_TOL_HZ)

    elapsed = time.monotonic() - start
    assert elapsed < 30.0, f"conformance suite took {elapsed:.1f}s"
    _report(f"sonification parameter conformance ({elapsed:.1f}s)")


def _pattern_starts(decision, mode, seconds):
    """Onset time of each repetition (first note of every group)."""
    state = SchedulerState(mode)
    tick = 1.0 / 30.0
    starts = []
    mapper = map_mono if mode == "mono" else map_stereo
    span = max(n.onset for n in mapper(decision).pattern)
    events = []
    for _ in range(int(seconds / tick)):
        events.extend(e for e in scheduler_advance(state, decision, tick)
                      if isinstance(e, AudioEvent))
    times = sorted(e.time for e in events)
    for t in times:
        if not starts or t - starts[-1] > span + 1e-9:
            starts.append(t)
    return starts


def test_rate_mapping():
    # rotation: 1.6 Hz at >=90 deg to 3.3 Hz at the 10 deg threshold
    for angle_deg in (90.0, 60.0, 30.0, 12.0):
        expected_rate = 3.3 - (3.3 - 1.6) * (angle_deg - 10.0) / 80.0
        starts = _pattern_starts(GuidanceDecision(I.ROTATE_RIGHT, math.radians(angle_deg)),
                                 "mono", 6.0)
        iois = np.diff(starts)
        assert np.all(np.abs(iois - 1.0 / expected_rate) <= IOI_TOL_S), angle_deg

    # stereo rotation repeats every 400 ms regardless of angle
    starts = _pattern_starts(GuidanceDecision(I.ROTATE_LEFT, math.radians(45.0)),
                             "stereo", 4.0)
    assert np.all(np.abs(np.diff(starts) - 0.4) <= IOI_TOL_S)

    # step: 800 ms at 2 m shrinking linearly to 400 ms at 0.5 m
    for displacement, period in ((2.0, 0.8), (1.25, 0.6), (0.5, 0.4)):
        starts = _pattern_starts(GuidanceDecision(I.STEP_LEFT, displacement), "mono", 6.0)
        assert np.all(np.abs(np.diff(starts) - period) <= IOI_TOL_S), displacement

    # cross: 1200 ms outside 4 m shrinking linearly to 700 ms at the far edge
    for distance, period in ((6.0, 1.2), (4.0, 1.2), (2.0, 0.95), (0.0, 0.7)):
        starts = _pattern_starts(GuidanceDecision(I.CROSS, distance), "mono", 8.0)
        assert np.all(np.abs(np.diff(starts) - period) <= IOI_TOL_S), distance

    # spot-check one rate from rendered audio, not scheduler bookkeeping
    decision = GuidanceDecision(I.ROTATE_RIGHT, math.radians(20.0))
    state = SchedulerState("mono")
    events = []
    for _ in range(150):  # 5 s
        events.extend(e for e in scheduler_advance(state, decision, 1.0 / 30.0)
                      if isinstance(e, AudioEvent))
    pcm = render_session_audio(events, 5.0)
    onsets = onset_times(pcm.astype(np.float64) / 32767.0, SR,
                         threshold=0.02, refractory=0.15)
    expected = 1.0 / 3.0875
    iois = np.diff(onsets)
    assert len(iois) >= 10
    assert np.all(np.abs(iois - expected) <= IOI_TOL_S)
    _report("rate mapping (rotate, step, cross)")


def test_spatialization():
    law = PanLaw(max_ild=20.0, max_itd=0.001)
    burst = render_stimulus(StimulusSpec(500.0, 12, "inharmonic", -3.0,
                                         duration=0.12), SR)
    for ratio in (-1.0, -0.5, 0.0, 0.5, 1.0):
        stereo = pan_ild_itd(burst, ratio, law, SR)
        if ratio == 0.0:
            assert np.array_equal(stereo[:, 0], stereo[:, 1])
            continue
        ipsi, contra = (1, 0) if ratio > 0 else (0, 1)
        ild = rms_db(stereo[:, ipsi]) - rms_db(stereo[:, contra])
        lag = xcorr_lag(stereo[:, ipsi], stereo[:, contra])
        assert abs(ild - abs(ratio) * 20.0) <= ILD_TOL_DB, ratio
        assert abs(lag - round(abs(ratio) * 0.001 * SR)) <= ITD_TOL_SAMPLES, ratio
    _report("spatialization ILD/ITD across ratios")


def test_geometry_oracle():
    rng = np.random.default_rng(777)
    for _ in range(200):
        layout = CrossingLayout(
            origin=(rng.uniform(-10, 10), rng.uniform(-10, 10)),
            orientation=rng.uniform(-math.pi, math.pi),
            stripe_count=int(rng.integers(1, 9)),
            stripe_width=rng.uniform(0.2, 1.0),
            stripe_length=rng.uniform(1.0, 4.0),
        )
        pose = Pose(rng.uniform(-15, 15), rng.uniform(-15, 15),
                    rng.uniform(-math.pi, math.pi))
        m = compute_relative_measures(pose, layout)
        o = corner_oracle_measures(pose, layout)
        for field in ("horizontal_rotation", "min_frontal", "max_frontal",
                      "lateral_left", "lateral_right"):
            assert abs(getattr(m, field) - o[field]) <= GEOMETRY_TOL, field

    # fusion reset property: noiseless runs, bitwise equality at recognitions
    scenario = default_scenarios(mode="mono", seed=31)[1]
    engine = SessionEngine(scenario)
    state = PolicyState()
    world_before = engine.world
    resets = 0
    while not engine.finished:
        control = instruction_follower(engine.decision, state, engine.dt)
        at_recognition = engine.tick_index % engine.recognition_every == 0
        engine.tick(control)
        if at_recognition and engine.latched.valid:
            truth = compute_relative_measures(world_before.agent,
                                              world_before.layout).horizontal_rotation
            assert engine.guidance_measures.horizontal_rotation == truth
            resets += 1
        world_before = engine.world
    assert resets > 20
    _report("geometry oracle + exact fusion reset")


def test_closed_loop():
    completions = 0
    for mode in ("speech", "mono", "stereo"):
        for scenario in default_scenarios(mode=mode, seed=1):
            metrics, _ = run_scripted(scenario)
            assert metrics.duration <= 120.0
            completions += metrics.completed
    assert completions == 18

    # same-seed reruns are byte-identical
    for mode in ("speech", "mono", "stereo"):
        scenario = default_scenarios(mode=mode, seed=1)[0]
        a, _ = run_scripted(scenario)
        b, _ = run_scripted(scenario)
        assert event_log_csv(a.event_log).encode() == event_log_csv(b.event_log).encode()

    noisy_completions = 0
    for mode in ("speech", "mono", "stereo"):
        for scenario in default_scenarios(mode=mode, seed=21, recognizer=NOISE_MODEL):
            metrics, _ = run_scripted(scenario)
            noisy_completions += metrics.completed
    assert noisy_completions >= 17
    _report(f"closed loop 18/18 noiseless, {noisy_completions}/18 noisy, "
            "same-seed byte-identical")


def test_staircase_calibration():
    ild = [self_test("ild", seed)[0] for seed in range(100)]
    itd = [self_test("itd", seed)[0] for seed in range(100)]
    ild_bias = abs(float(np.mean(ild)) - 1.15)
    itd_bias = abs(float(np.mean(itd)) - 0.13)
    assert ild_bias < ILD_BIAS_TOL_DB, f"ILD bias {ild_bias:.3f} dB"
    assert itd_bias < ITD_BIAS_TOL_MS, f"ITD bias {itd_bias:.4f} ms"
    _report(f"staircase bias ILD {ild_bias:.3f} dB, ITD {itd_bias:.4f} ms")


def test_streaming_equivalence():
    scenario = default_scenarios(mode="mono", seed=1)[0]
    metrics, engine = run_scripted(scenario)
    assert metrics.completed
    offline = render_session_audio(engine.audio_events, metrics.duration)
    streamed = b"".join(b.to_bytes()
                        for b in stream_blocks(engine.audio_events, metrics.duration))
    assert offline.tobytes() == streamed
    assert len(streamed) > 0
    _report(f"streaming equivalence ({len(streamed)} bytes byte-identical)")
