"""Deterministic crossing simulator: kinematics, simulated recognition,
closed-loop sessions and their metrics.

The simulation replaces the camera-based recognizer with ground truth
geometry degraded by a configurable noise/dropout model, running at a slower
cadence (default 10 Hz) than the 30 Hz control loop.  Between recognitions
the rotation estimate is corrected by the (noiseless) gyroscope and reset at
every recognition, so its error at recognition instants equals the
recognition noise alone.

Everything is seeded and single-threaded; identical scenarios and controls
give byte-identical event logs.  The interactive bridge drives the same
:class:`SessionEngine` tick function from its session thread.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import mean, stdev

import numpy as np

from .geometry import (
    CrossingLayout,
    DEFAULT_CAPTURE_PITCH,
    FusionState,
    Pose,
    RelativeMeasures,
    compute_relative_measures,
    fuse_heading,
    gravity_vector,
    pitch_from_gravity,
    wrap_angle,
)
from .guidance import (
    DEFAULT_GUIDANCE,
    GuidanceConfig,
    GuidanceDecision,
    Instruction,
    SpeechEvent,
    next_instruction,
    speech_text,
    tap_hint,
)
from .sonification import (
    AudioEvent,
    DEFAULT_MAPPING,
    MappingConfig,
    MODES,
    SchedulerState,
    scheduler_advance,
)

CONTROL_RATE = 30.0


@dataclass(frozen=True)
class Control:
    """Per-tick agent command: unicycle with strafe plus a pitch channel so
    raise/lower instructions can be acted on."""

    forward: float = 0.0
    turn: float = 0.0
    sidestep: float = 0.0  # positive = towards the agent's left
    pitch_rate: float = 0.0


ZERO_CONTROL = Control()


@dataclass(frozen=True)
class RecognizerModel:
    """Field-of-view, range, cadence and degradation of the simulated
    recognizer."""

    fov_half_angle: float = math.radians(30.0)
    max_range: float = 12.0
    rate_hz: float = 10.0
    angle_noise_sd: float = 0.0
    distance_noise_sd: float = 0.0
    dropout_probability: float = 0.0

    def __post_init__(self):
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be positive")
        if self.angle_noise_sd < 0 or self.distance_noise_sd < 0:
            raise ValueError("noise SDs must be >= 0")
        if not 0.0 <= self.dropout_probability <= 1.0:
            raise ValueError("dropout_probability must be in [0, 1]")


@dataclass(frozen=True)
class World:
    layout: CrossingLayout
    agent: Pose
    time: float = 0.0
    rng_seed: int = 0


def step_world(world: World, control: Control, dt: float) -> World:
    """Explicit-Euler unicycle-with-strafe step; translation uses the
    pre-step heading.  Deterministic."""
    if not 0.0 < dt <= 0.1:
        raise ValueError("dt must be in (0, 0.1]")
    a = world.agent
    cos_h, sin_h = math.cos(a.heading), math.sin(a.heading)
    # left unit vector is heading rotated +90 degrees
    dx = (control.forward * cos_h - control.sidestep * sin_h) * dt
    dy = (control.forward * sin_h + control.sidestep * cos_h) * dt
    pitch = a.pitch + control.pitch_rate * dt
    pitch = max(-math.pi / 2, min(math.pi / 2, pitch))
    agent = Pose(a.x + dx, a.y + dy, wrap_angle(a.heading + control.turn * dt), pitch)
    return replace(world, agent=agent, time=world.time + dt)


# The camera is pitched at the pavement, so the near field it actually sees
# is a spot roughly this far ahead of the feet; stripes within a frame-width
# of that spot are recognizable even when the user hugs a border.
LOOK_AHEAD = 0.5
LOOK_SIDE_MARGIN = 0.3


def crossing_visible(pose: Pose, layout: CrossingLayout, model: RecognizerModel) -> bool:
    """True when the pitched camera's near field (the spot just ahead, or the
    paint underfoot in the lower frame edge) lands on the stripes, or any
    stripe corner falls inside the camera cone."""
    ux, uy = layout.axis()
    lx, ly = layout.lateral_axis()
    half = 0.5 * layout.stripe_length + LOOK_SIDE_MARGIN
    points = (
        (pose.x + LOOK_AHEAD * math.cos(pose.heading),
         pose.y + LOOK_AHEAD * math.sin(pose.heading)),
        (pose.x, pose.y),
    )
    for px, py in points:
        rx, ry = px - layout.origin[0], py - layout.origin[1]
        s = rx * ux + ry * uy
        if -LOOK_AHEAD <= s <= layout.span and abs(rx * lx + ry * ly) <= half:
            return True
    corners = layout.stripe_corners()
    rel = corners - np.array([pose.x, pose.y])
    dist = np.hypot(rel[:, 0], rel[:, 1])
    bearing = np.arctan2(rel[:, 1], rel[:, 0]) - pose.heading
    bearing = np.arctan2(np.sin(bearing), np.cos(bearing))
    return bool(np.any((dist <= model.max_range)
                       & (np.abs(bearing) <= model.fov_half_angle)))


def simulated_recognition(world: World, model: RecognizerModel,
                          rng: np.random.Generator) -> RelativeMeasures:
    """One recognizer frame: ground-truth measures plus independent Gaussian
    noise per measure, or an invalid result on miss/dropout.

    Draw order is fixed (dropout, angle, min/max frontal, left/right
    lateral) so runs are reproducible even when some SDs are zero.
    """
    if not crossing_visible(world.agent, world.layout, model):
        return RelativeMeasures.invalid()
    if rng.random() < model.dropout_probability:
        return RelativeMeasures.invalid()
    exact = compute_relative_measures(world.agent, world.layout)
    rot = wrap_angle(exact.horizontal_rotation + rng.normal(0.0, model.angle_noise_sd))
    dn = model.distance_noise_sd
    min_f = exact.min_frontal + rng.normal(0.0, dn)
    max_f = exact.max_frontal + rng.normal(0.0, dn)
    lat_l = exact.lateral_left + rng.normal(0.0, dn)
    lat_r = exact.lateral_right + rng.normal(0.0, dn)
    min_f = max(0.0, min_f)
    max_f = max(min_f, max_f)
    return RelativeMeasures(rot, min_f, max_f, lat_l, lat_r)


# ---------------------------------------------------------------------------
# scenarios

def default_layout() -> CrossingLayout:
    """Crossing anchored at the origin, walked in the +y direction."""
    return CrossingLayout(origin=(0.0, 0.0), orientation=math.pi / 2)


def evaluation_start_poses() -> list[Pose]:
    """Six starting poses spread around the approach side of the crossing:
    centred, angled from either side, facing away (forcing a search), and
    outside a lateral border (forcing a step).  Chosen so search, rotate,
    step and approach behaviours are all exercised."""
    return [
        Pose(0.0, -2.0, math.radians(90)),
        Pose(-2.0, -2.5, math.radians(30)),
        Pose(2.5, -2.0, math.radians(150)),
        Pose(-3.0, -1.5, math.radians(-30)),
        Pose(1.5, -3.0, math.radians(-135)),
        Pose(3.0, -1.0, math.radians(90)),
    ]


@dataclass(frozen=True)
class Scenario:
    name: str
    layout: CrossingLayout
    start_pose: Pose
    mode: str = "mono"
    seed: int = 0
    recognizer: RecognizerModel = RecognizerModel()
    policy: str = "instruction_follower"
    timeout_s: float = 120.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")


def default_scenarios(mode: str = "mono", seed: int = 1,
                      recognizer: RecognizerModel | None = None) -> list[Scenario]:
    model = recognizer if recognizer is not None else RecognizerModel()
    return [
        Scenario(f"start{i + 1}", default_layout(), pose, mode=mode,
                 seed=seed + i, recognizer=model)
        for i, pose in enumerate(evaluation_start_poses())
    ]


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "name": s.name,
        "layout": {
            "origin": list(s.layout.origin),
            "orientation_deg": math.degrees(s.layout.orientation),
            "stripe_count": s.layout.stripe_count,
            "stripe_width": s.layout.stripe_width,
            "stripe_length": s.layout.stripe_length,
        },
        "start_pose": {
            "x": s.start_pose.x,
            "y": s.start_pose.y,
            "heading_deg": math.degrees(s.start_pose.heading),
            "pitch_deg": math.degrees(s.start_pose.pitch),
        },
        "mode": s.mode,
        "seed": s.seed,
        "noise": {
            "fov_half_angle_deg": math.degrees(s.recognizer.fov_half_angle),
            "max_range_m": s.recognizer.max_range,
            "rate_hz": s.recognizer.rate_hz,
            "angle_sd_deg": math.degrees(s.recognizer.angle_noise_sd),
            "distance_sd_m": s.recognizer.distance_noise_sd,
            "dropout": s.recognizer.dropout_probability,
        },
        "policy": s.policy,
        "timeout_s": s.timeout_s,
    }


def scenario_from_dict(d: dict) -> Scenario:
    lay = d.get("layout", {})
    layout = CrossingLayout(
        origin=tuple(lay.get("origin", (0.0, 0.0))),
        orientation=math.radians(lay.get("orientation_deg", 90.0)),
        stripe_count=int(lay.get("stripe_count", 5)),
        stripe_width=float(lay.get("stripe_width", 0.5)),
        stripe_length=float(lay.get("stripe_length", 2.5)),
    )
    sp = d["start_pose"]
    pose = Pose(float(sp["x"]), float(sp["y"]),
                math.radians(float(sp.get("heading_deg", 90.0))),
                math.radians(float(sp.get("pitch_deg", 0.0))))
    noise = d.get("noise", {})
    model = RecognizerModel(
        fov_half_angle=math.radians(noise.get("fov_half_angle_deg", 30.0)),
        max_range=float(noise.get("max_range_m", 12.0)),
        rate_hz=float(noise.get("rate_hz", 10.0)),
        angle_noise_sd=math.radians(noise.get("angle_sd_deg", 0.0)),
        distance_noise_sd=float(noise.get("distance_sd_m", 0.0)),
        dropout_probability=float(noise.get("dropout", 0.0)),
    )
    return Scenario(
        name=d.get("name", "scenario"),
        layout=layout,
        start_pose=pose,
        mode=d.get("mode", "mono"),
        seed=int(d.get("seed", 0)),
        recognizer=model,
        policy=d.get("policy", "instruction_follower"),
        timeout_s=float(d.get("timeout_s", 120.0)),
    )


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as f:
        return scenario_from_dict(json.load(f))


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n",
                          encoding="utf-8")


# ---------------------------------------------------------------------------
# metrics

@dataclass
class SessionMetrics:
    """Raw per-session results; no inferential statistics."""

    mode: str
    seed: int
    time_to_align: float | None
    time_to_cross: float | None
    message_count: int
    tap_count: int
    completed: bool
    duration: float
    event_log: list = field(default_factory=list, repr=False)

    def to_row(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "time_to_align_s": _fmt_opt(self.time_to_align),
            "time_to_cross_s": _fmt_opt(self.time_to_cross),
            "message_count": self.message_count,
            "tap_count": self.tap_count,
            "completed": int(self.completed),
            "duration_s": f"{self.duration:.6f}",
        }


def _fmt_opt(v: float | None) -> str:
    return "" if v is None else f"{v:.6f}"


METRICS_FIELDS = ["mode", "seed", "time_to_align_s", "time_to_cross_s",
                  "message_count", "tap_count", "completed", "duration_s"]


def metrics_to_csv(metrics: list[SessionMetrics]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=METRICS_FIELDS, lineterminator="\n")
    w.writeheader()
    for m in metrics:
        w.writerow(m.to_row())
    return buf.getvalue()


def event_log_csv(rows: list[tuple]) -> str:
    """Event log serialization: time_s, kind, payload (canonical JSON)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_s", "kind", "payload"])
    for t, kind, payload in rows:
        w.writerow([f"{t:.6f}", kind,
                    json.dumps(payload, sort_keys=True, separators=(",", ":"))])
    return buf.getvalue()


def metrics_summary(metrics: list[SessionMetrics]) -> list[dict]:
    """Per-mode mean/sd of the session metrics.

    Means are taken over the runs where the value exists (incomplete runs
    have no crossing time); sd is the sample standard deviation, reported as
    0 for a single run.
    """
    if not metrics:
        raise ValueError("no sessions to summarize")
    out = []
    for mode in sorted({m.mode for m in metrics}):
        group = [m for m in metrics if m.mode == mode]
        row = {"mode": mode, "runs": len(group),
               "completed": sum(m.completed for m in group)}
        for label, values in (
            ("align_s", [m.time_to_align for m in group if m.time_to_align is not None]),
            ("cross_s", [m.time_to_cross for m in group if m.time_to_cross is not None]),
            ("messages", [float(m.message_count) for m in group]),
            ("taps", [float(m.tap_count) for m in group]),
        ):
            row[f"mean_{label}"] = f"{mean(values):.6f}" if values else ""
            sd = stdev(values) if len(values) > 1 else 0.0
            row[f"sd_{label}"] = f"{sd:.6f}" if values else ""
        out.append(row)
    return out


SUMMARY_FIELDS = ["mode", "runs", "completed",
                  "mean_align_s", "sd_align_s", "mean_cross_s", "sd_cross_s",
                  "mean_messages", "sd_messages", "mean_taps", "sd_taps"]


def summary_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# session engine

class SessionEngine:
    """One guided crossing session, stepped at the control rate.

    Owns the world, the recognition/fusion state, the guidance machine and
    the sonification scheduler.  ``tick`` applies one control sample and
    returns the active decision; audio events accumulate in
    ``audio_events`` for rendering or streaming.
    """

    def __init__(
        self,
        scenario: Scenario,
        guidance: GuidanceConfig = DEFAULT_GUIDANCE,
        mapping: MappingConfig = DEFAULT_MAPPING,
        locale: str = "it",
        control_rate: float = CONTROL_RATE,
    ):
        self.scenario = scenario
        self.guidance = guidance
        self.mapping = mapping
        self.locale = locale
        self.dt = 1.0 / control_rate
        self.world = World(scenario.layout, scenario.start_pose, 0.0, scenario.seed)
        self.rng = np.random.default_rng(scenario.seed)
        self.fusion = FusionState()
        self.scheduler = SchedulerState(scenario.mode)
        self.gyro_heading = scenario.start_pose.heading
        self.latched = RelativeMeasures.invalid()
        self.guidance_measures = self.latched
        self.prev_instruction: Instruction | None = None
        self.decision: GuidanceDecision | None = None
        self.tick_index = 0
        self.recognition_every = max(1, round(control_rate / scenario.recognizer.rate_hz))
        self.align_time: float | None = None
        self.complete_time: float | None = None
        self.message_count = 0
        self.tap_count = 0
        self.event_rows: list[tuple] = []
        self.audio_events: list[AudioEvent] = []
        self.control_log: list[dict] = []
        self._check_progress(0.0)

    # -- progress -----------------------------------------------------

    def _project(self) -> tuple[float, float]:
        lay = self.world.layout
        ux, uy = lay.axis()
        lx, ly = lay.lateral_axis()
        rx = self.world.agent.x - lay.origin[0]
        ry = self.world.agent.y - lay.origin[1]
        return rx * ux + ry * uy, rx * lx + ry * ly

    def _check_progress(self, t: float) -> None:
        s, lat = self._project()
        lay = self.world.layout
        inside = abs(lat) <= 0.5 * lay.stripe_length
        if self.align_time is None and inside and 0.0 <= s <= lay.span:
            self.align_time = t
            self._log(t, "align", {"s": round(s, 6)})
        if self.complete_time is None and inside and s > lay.span:
            self.complete_time = t
            self._log(t, "complete", {"s": round(s, 6)})

    @property
    def complete(self) -> bool:
        return self.complete_time is not None

    @property
    def timed_out(self) -> bool:
        return not self.complete and self.world.time >= self.scenario.timeout_s

    @property
    def finished(self) -> bool:
        return self.complete or self.timed_out

    # -- logging ------------------------------------------------------

    def _log(self, t: float, kind: str, payload: dict) -> None:
        self.event_rows.append((t, kind, payload))

    # -- main loop ----------------------------------------------------

    def tick(self, control: Control = ZERO_CONTROL, tap: bool = False) -> GuidanceDecision:
        t = self.world.time
        model = self.scenario.recognizer

        if self.tick_index % self.recognition_every == 0:
            self.latched = simulated_recognition(self.world, model, self.rng)
            if self.latched.valid:
                self.fusion.update_recognition(
                    self.latched.horizontal_rotation, self.gyro_heading, t)

        measures = self.latched
        if measures.valid:
            measures = replace(
                measures, horizontal_rotation=fuse_heading(self.fusion, self.gyro_heading))
        self.guidance_measures = measures

        accel = gravity_vector(DEFAULT_CAPTURE_PITCH + self.world.agent.pitch)
        pitch_est = pitch_from_gravity(accel)

        decision = next_instruction(measures, pitch_est, self.guidance,
                                    self.prev_instruction)
        if decision.instruction is not self.prev_instruction:
            self.message_count += 1
            self._log(t, "instruction", {
                "name": decision.instruction.value,
                "quantity": round(decision.quantity, 6),
                "lateral_bias": round(decision.lateral_bias, 6),
                "text": speech_text(decision.instruction, self.locale),
            })
        self.prev_instruction = decision.instruction
        self.decision = decision

        for ev in scheduler_advance(self.scheduler, decision, self.dt,
                                    self.mapping, self.locale):
            if isinstance(ev, SpeechEvent):
                self._log(ev.time, "speech", {"text": ev.text,
                                              "instruction": ev.instruction.value})
            else:
                self.audio_events.append(ev)
                self._log(ev.time, "audio", {
                    "f0": round(ev.stimulus.fundamental, 6),
                    "duration": round(ev.stimulus.duration, 6),
                    "pan": round(ev.pan, 6),
                    "gain_offset_db": round(ev.gain_offset_db, 6),
                })

        if tap:
            self.tap_count += 1
            hint = tap_hint(decision, self.locale, t)
            self._log(t, "tap", {"text": hint.text,
                                 "instruction": hint.instruction.value})

        self.control_log.append({
            "tick": self.tick_index,
            "forward": control.forward,
            "turn": control.turn,
            "sidestep": control.sidestep,
            "pitch_rate": control.pitch_rate,
            "tap": int(tap),
        })

        stepped = step_world(self.world, control, self.dt)
        self.tick_index += 1
        # pin session time to the tick count so hours of ticks cannot drift
        self.world = replace(stepped, time=self.tick_index * self.dt)
        self.gyro_heading = wrap_angle(self.gyro_heading + control.turn * self.dt)
        self._check_progress(self.world.time)
        return decision

    def metrics(self) -> SessionMetrics:
        cross = None
        if self.complete and self.align_time is not None:
            cross = self.complete_time - self.align_time
        return SessionMetrics(
            mode=self.scenario.mode,
            seed=self.scenario.seed,
            time_to_align=self.align_time,
            time_to_cross=cross,
            message_count=self.message_count,
            tap_count=self.tap_count,
            completed=self.complete,
            duration=self.world.time,
            event_log=list(self.event_rows),
        )


# ---------------------------------------------------------------------------
# agent policies

TURN_RATE = math.radians(30.0)
STEP_SPEED = 0.5
FORWARD_SPEED = 1.0
PITCH_RATE = math.radians(30.0)
SEARCH_GRACE = 0.7  # sustained not-found before the agent starts a search turn


CROSS_BIAS_DEADZONE = 0.2  # below this the correction cue is treated as inaudible


@dataclass
class PolicyState:
    notfound_time: float = 0.0
    last_control: Control = ZERO_CONTROL


def _not_found_reaction(state: PolicyState, dt: float) -> Control:
    # hold course through brief recognition losses; search only after a
    # sustained silence
    state.notfound_time += dt
    if state.notfound_time > SEARCH_GRACE:
        return Control(turn=TURN_RATE)
    return state.last_control


def instruction_follower(decision: GuidanceDecision | None, state: PolicyState,
                         dt: float) -> Control:
    """Obeys the current instruction at fixed speeds.  During CROSS a clearly
    audible bias cue triggers a fixed sideways correction, the way a listener
    reacts to the shifted/louder crossing sound."""
    if decision is None:
        return ZERO_CONTROL
    instr = decision.instruction
    if instr is Instruction.NOT_FOUND:
        return _not_found_reaction(state, dt)
    state.notfound_time = 0.0
    if instr is Instruction.ROTATE_LEFT:
        control = Control(turn=TURN_RATE)
    elif instr is Instruction.ROTATE_RIGHT:
        control = Control(turn=-TURN_RATE)
    elif instr is Instruction.STEP_LEFT:
        control = Control(sidestep=STEP_SPEED)
    elif instr is Instruction.STEP_RIGHT:
        control = Control(sidestep=-STEP_SPEED)
    elif instr is Instruction.CROSSWALK_AHEAD:
        control = Control(forward=FORWARD_SPEED)
    elif instr is Instruction.CROSS:
        sidestep = 0.0
        if abs(decision.lateral_bias) > CROSS_BIAS_DEADZONE:
            sidestep = STEP_SPEED * 0.7 * (-1.0 if decision.lateral_bias > 0 else 1.0)
        control = Control(forward=FORWARD_SPEED, sidestep=sidestep)
    elif instr is Instruction.RAISE:
        control = Control(pitch_rate=-PITCH_RATE)
    else:  # LOWER
        control = Control(pitch_rate=PITCH_RATE)
    state.last_control = control
    return control


def proportional_follower(decision: GuidanceDecision | None, state: PolicyState,
                          dt: float) -> Control:
    """Scales speed with the conveyed quantity: large corrections are taken
    fast, small ones gently, which is what the quantity encoding is for."""
    if decision is None:
        return ZERO_CONTROL
    instr = decision.instruction
    if instr is Instruction.NOT_FOUND:
        return _not_found_reaction(state, dt)
    state.notfound_time = 0.0
    q = decision.quantity
    if instr in (Instruction.ROTATE_LEFT, Instruction.ROTATE_RIGHT):
        rate = min(math.radians(60.0), max(math.radians(8.0), 1.5 * q))
        control = Control(turn=rate if instr is Instruction.ROTATE_LEFT else -rate)
    elif instr in (Instruction.STEP_LEFT, Instruction.STEP_RIGHT):
        speed = min(0.8, max(0.15, 1.0 * q))
        control = Control(sidestep=speed if instr is Instruction.STEP_LEFT else -speed)
    elif instr is Instruction.CROSSWALK_AHEAD:
        control = Control(forward=min(1.4, max(0.4, 0.5 * q)))
    elif instr is Instruction.CROSS:
        control = Control(forward=min(1.4, max(0.4, 0.5 * q)),
                          sidestep=-0.6 * decision.lateral_bias)
    elif instr is Instruction.RAISE:
        control = Control(pitch_rate=-min(PITCH_RATE, 2.0 * q))
    else:  # LOWER
        control = Control(pitch_rate=min(PITCH_RATE, 2.0 * q))
    state.last_control = control
    return control


class ReplayPolicy:
    """Feeds back a recorded control log tick by tick."""

    def __init__(self, control_log: list[dict]):
        self.rows = control_log

    def control_for(self, tick: int) -> tuple[Control, bool]:
        if tick >= len(self.rows):
            return ZERO_CONTROL, False
        row = self.rows[tick]
        return (Control(row.get("forward", 0.0), row.get("turn", 0.0),
                        row.get("sidestep", 0.0), row.get("pitch_rate", 0.0)),
                bool(row.get("tap", 0)))


POLICIES = {
    "instruction_follower": instruction_follower,
    "proportional_follower": proportional_follower,
}


def run_scripted(
    scenario: Scenario,
    guidance: GuidanceConfig = DEFAULT_GUIDANCE,
    mapping: MappingConfig = DEFAULT_MAPPING,
    locale: str = "it",
    replay_log: list[dict] | None = None,
) -> tuple[SessionMetrics, SessionEngine]:
    """Closed-loop run to completion or timeout; bit-reproducible by seed."""
    engine = SessionEngine(scenario, guidance, mapping, locale)
    if scenario.policy == "replay":
        if replay_log is None:
            raise ValueError("replay policy needs a recorded control log")
        replay = ReplayPolicy(replay_log)
        while not engine.finished:
            control, tap = replay.control_for(engine.tick_index)
            engine.tick(control, tap)
    else:
        try:
            policy = POLICIES[scenario.policy]
        except KeyError:
            raise ValueError(f"unknown policy {scenario.policy!r}") from None
        state = PolicyState()
        while not engine.finished:
            engine.tick(policy(engine.decision, state, engine.dt))
    return engine.metrics(), engine


def save_control_log(rows: list[dict], path) -> None:
    Path(path).write_text(json.dumps(rows, separators=(",", ":")) + "\n",
                          encoding="utf-8")


def load_control_log(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
