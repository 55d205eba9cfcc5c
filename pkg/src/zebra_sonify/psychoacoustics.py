"""Adaptive up-down staircase for interaural-difference detection thresholds.

Simple (1-up/1-down) rule: a correct response lowers the presented level by
one fixed step, an incorrect one raises it, so the track converges on the
50%-correct point of the listener's psychometric function.  The harness is
test-oriented: it runs against a seeded simulated listener rather than a
human.  Everything here is sequential and single-threaded.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class StaircaseComplete(RuntimeError):
    """Raised when stepping a staircase that has already finished."""


@dataclass(frozen=True)
class StaircaseState:
    """Immutable staircase snapshot; :func:`staircase_step` returns a new one.

    ``reversals`` holds the level presented on each trial where the track
    changed direction.  The level is floor-clamped at zero and every clamp
    is recorded in ``clamp_trials``.
    """

    current_level: float
    step: float
    direction: str = "down"  # tracks start descending from a clearly audible level
    reversals: tuple[float, ...] = ()
    trial_count: int = 0
    target_reversals: int = 8
    clamp_trials: tuple[int, ...] = ()

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.direction not in ("up", "down"):
            raise ValueError("direction must be 'up' or 'down'")
        if self.target_reversals < 1:
            raise ValueError("target_reversals must be >= 1")
        if len(self.reversals) > self.target_reversals:
            raise ValueError("more reversals than target")

    @property
    def finished(self) -> bool:
        return len(self.reversals) >= self.target_reversals


# Start each track at the top of the pan-law range, descending.
def ild_staircase(start_level: float = 20.0, step: float = 1.0,
                  target_reversals: int = 8) -> StaircaseState:
    """Level-difference track in dB with the standard 1 dB step."""
    return StaircaseState(start_level, step, target_reversals=target_reversals)


def itd_staircase(start_level: float = 1.0, step: float = 0.05,
                  target_reversals: int = 8) -> StaircaseState:
    """Time-difference track in ms; step chosen at roughly a tenth of the
    expected threshold for resolution comparable to the 1 dB level step."""
    return StaircaseState(start_level, step, target_reversals=target_reversals)


def staircase_step(state: StaircaseState, correct: bool) -> StaircaseState:
    """Advance the track by one trial outcome."""
    if state.finished:
        raise StaircaseComplete("staircase complete")
    movement = "down" if correct else "up"
    reversals = state.reversals
    if movement != state.direction:
        reversals = reversals + (state.current_level,)
    new_level = state.current_level - state.step if correct else state.current_level + state.step
    clamps = state.clamp_trials
    if new_level < 0.0:
        new_level = 0.0
        clamps = clamps + (state.trial_count,)
    return replace(
        state,
        current_level=new_level,
        direction=movement,
        reversals=reversals,
        trial_count=state.trial_count + 1,
        clamp_trials=clamps,
    )


def staircase_threshold(state: StaircaseState, last_k: int = 6, discard: int = 2) -> float:
    """Threshold estimate: mean of the last ``last_k`` reversal levels after
    discarding the first ``discard`` (which still carry the descent from the
    start level)."""
    if not state.finished:
        raise RuntimeError("staircase not finished")
    usable = state.reversals[discard:]
    if not usable:
        raise ValueError("no reversals left after discarding")
    tail = usable[-last_k:]
    return float(np.mean(tail))


@dataclass
class SimulatedListener:
    """Logistic psychometric responder: P(correct) = 1/(1+exp(-(x - t)/s)).

    At the true threshold the response rate is exactly 50%, the point a
    simple up-down track converges to.
    """

    true_threshold: float
    slope: float

    def __post_init__(self):
        if self.slope <= 0:
            raise ValueError("slope must be positive")

    def probability_correct(self, presented_level: float) -> float:
        return 1.0 / (1.0 + np.exp(-(presented_level - self.true_threshold) / self.slope))

    def respond(self, presented_level: float, rng: np.random.Generator) -> bool:
        return bool(rng.random() < self.probability_correct(presented_level))


def simulated_listener(presented_level: float, true_threshold: float, slope: float,
                       rng: np.random.Generator) -> bool:
    """One seeded trial outcome from the logistic psychometric function."""
    return SimulatedListener(true_threshold, slope).respond(presented_level, rng)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    level: float
    correct: bool
    reversal: bool


def run_staircase(
    state: StaircaseState,
    listener: SimulatedListener,
    rng: np.random.Generator,
    max_trials: int = 1000,
) -> tuple[StaircaseState, list[TrialRecord]]:
    """Drive a track against a simulated listener until it finishes."""
    log: list[TrialRecord] = []
    while not state.finished:
        if state.trial_count >= max_trials:
            raise RuntimeError(f"staircase did not finish within {max_trials} trials")
        level = state.current_level
        correct = listener.respond(level, rng)
        nxt = staircase_step(state, correct)
        log.append(TrialRecord(state.trial_count, level, correct,
                               len(nxt.reversals) > len(state.reversals)))
        state = nxt
    return state, log


def trial_log_csv(log: list[TrialRecord]) -> str:
    """Trial log in the ``trial,level,response,reversal_flag`` CSV schema."""
    lines = ["trial,level,response,reversal_flag"]
    for rec in log:
        lines.append(f"{rec.trial},{rec.level:.6f},"
                     f"{'correct' if rec.correct else 'incorrect'},{int(rec.reversal)}")
    return "\n".join(lines) + "\n"


# Slopes used by the self-test harness; narrow enough that the track hovers
# tightly around the simulated threshold.
DEFAULT_ILD_SLOPE = 0.5   # dB
DEFAULT_ITD_SLOPE = 0.03  # ms


def self_test(dimension: str, seed: int, true_threshold: float | None = None
              ) -> tuple[float, StaircaseState, list[TrialRecord]]:
    """Run one seeded staircase against the built-in simulated listener.

    Returns (estimate, final state, trial log).  Thresholds default to the
    calibration targets used across the test suite.
    """
    if dimension == "ild":
        state = ild_staircase()
        listener = SimulatedListener(1.15 if true_threshold is None else true_threshold,
                                     DEFAULT_ILD_SLOPE)
    elif dimension == "itd":
        state = itd_staircase()
        listener = SimulatedListener(0.13 if true_threshold is None else true_threshold,
                                     DEFAULT_ITD_SLOPE)
    else:
        raise ValueError("dimension must be 'ild' or 'itd'")
    rng = np.random.default_rng(seed)
    final, log = run_staircase(state, listener, rng)
    return staircase_threshold(final), final, log
