"""Operator command line: render stimuli, run sessions, aggregate metrics,
staircase self-tests, and the interactive bridge.

Quantities accept unit suffixes (``20deg``, ``0.35rad``, ``6m``) so degree
and radian mistakes cannot slip through the argument boundary.  Every
subcommand is deterministic given ``--seed``.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import audio_io, psychoacoustics, simulator
from .config import load_app_config
from .guidance import GuidanceDecision, Instruction
from .sonification import SchedulerState, scheduler_advance
from .synthesis import kernel_name

ANGLE_INSTRUCTIONS = (Instruction.ROTATE_LEFT, Instruction.ROTATE_RIGHT,
                      Instruction.RAISE, Instruction.LOWER)


def parse_quantity(text: str, instruction: Instruction) -> float:
    """'20deg' -> radians, '1.5m' -> metres; bare numbers are SI units."""
    t = text.strip().lower()
    if t.endswith("deg"):
        return math.radians(float(t[:-3]))
    if t.endswith("rad"):
        return float(t[:-3])
    if t.endswith("m"):
        value = float(t[:-1])
        if instruction in ANGLE_INSTRUCTIONS:
            raise ValueError(f"{instruction.value} takes an angle, got {text!r}")
        return value
    return float(t)


def _decision(instruction: Instruction, quantity: float, bias: float) -> GuidanceDecision:
    if instruction is Instruction.CROSS:
        return GuidanceDecision(instruction, quantity, lateral_bias=bias)
    return GuidanceDecision(instruction, quantity)


def cmd_render(args) -> int:
    cfg = load_app_config()
    instruction = Instruction(args.instruction)
    decision = _decision(instruction, parse_quantity(args.quantity, instruction),
                         args.lateral_bias)
    state = SchedulerState(args.mode)
    events = []
    ticks = int(round(args.duration * simulator.CONTROL_RATE))
    dt = 1.0 / simulator.CONTROL_RATE
    for _ in range(ticks):
        events.extend(e for e in scheduler_advance(state, decision, dt)
                      if hasattr(e, "stimulus"))
    pcm = audio_io.render_session_audio(events, args.duration,
                                        sample_rate=args.sample_rate,
                                        pan_law=cfg.pan_law)
    audio_io.write_wav(pcm, args.sample_rate, 2, args.out)
    print(f"wrote {args.out}: {len(pcm)} frames at {args.sample_rate} Hz "
          f"({len(events)} stimuli, kernel={kernel_name()})")
    return 0


def cmd_simulate(args) -> int:
    cfg = load_app_config()
    scenario = simulator.load_scenario(args.scenario)
    if args.mode:
        scenario = replace(scenario, mode=args.mode)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    replay_log = simulator.load_control_log(args.controls) if args.controls else None
    metrics, engine = simulator.run_scripted(scenario, guidance=cfg.guidance,
                                             replay_log=replay_log)
    if args.out_metrics:
        Path(args.out_metrics).write_text(simulator.metrics_to_csv([metrics]),
                                          encoding="utf-8")
    if args.out_events:
        Path(args.out_events).write_text(simulator.event_log_csv(engine.event_rows),
                                         encoding="utf-8")
    if args.out_audio:
        pcm = audio_io.render_session_audio(engine.audio_events, metrics.duration,
                                            pan_law=cfg.pan_law)
        audio_io.write_wav(pcm, audio_io.SAMPLE_RATE, 2, args.out_audio)
    status = "completed" if metrics.completed else "timed out"
    print(f"{scenario.name} [{scenario.mode}] {status}: "
          f"align={simulator._fmt_opt(metrics.time_to_align) or 'n/a'}s "
          f"cross={simulator._fmt_opt(metrics.time_to_cross) or 'n/a'}s "
          f"messages={metrics.message_count}")
    return 0 if metrics.completed else 1


def cmd_bench(args) -> int:
    cfg = load_app_config()
    if args.scenarios:
        paths = sorted(Path(args.scenarios).glob("*.json"))
        if not paths:
            print(f"no scenario files in {args.scenarios}", file=sys.stderr)
            return 1
        base = [simulator.load_scenario(p) for p in paths]
    else:
        base = simulator.default_scenarios(seed=args.seed)
    modes = args.modes.split(",") if args.modes else ["speech", "mono", "stereo"]
    runs = []
    for scenario in base:
        for mode in modes:
            s = replace(scenario, mode=mode)
            metrics, _ = simulator.run_scripted(s, guidance=cfg.guidance)
            runs.append(metrics)
    if args.runs_csv:
        Path(args.runs_csv).write_text(simulator.metrics_to_csv(runs), encoding="utf-8")
    summary = simulator.metrics_summary(runs)
    Path(args.summary).write_text(simulator.summary_to_csv(summary), encoding="utf-8")
    print(f"{len(runs)} runs -> {args.summary}")
    for row in summary:
        print(f"  {row['mode']}: {row['completed']}/{row['runs']} completed, "
              f"mean align {row['mean_align_s'] or 'n/a'} s, "
              f"mean cross {row['mean_cross_s'] or 'n/a'} s")
    return 0


def cmd_staircase(args) -> int:
    estimate, final, log = psychoacoustics.self_test(args.dimension, args.seed,
                                                     args.true_threshold)
    unit = "dB" if args.dimension == "ild" else "ms"
    if args.out:
        Path(args.out).write_text(psychoacoustics.trial_log_csv(log), encoding="utf-8")
        print(f"trial log -> {args.out}")
    print(f"{args.dimension.upper()} staircase (seed {args.seed}): "
          f"{final.trial_count} trials, {len(final.reversals)} reversals, "
          f"threshold estimate {estimate:.3f} {unit}")
    return 0


def cmd_serve(args) -> int:
    from . import bridge  # imported lazily: pulls in threading/socket machinery

    cfg = load_app_config()
    scenario = simulator.load_scenario(args.scenario) if args.scenario else \
        simulator.default_scenarios(mode=args.mode, seed=args.seed)[0]
    if args.mode:
        scenario = replace(scenario, mode=args.mode)
    server = bridge.BridgeServer(args.port, scenario, guidance=cfg.guidance,
                                 pan_law=cfg.pan_law,
                                 out_metrics=args.out_metrics,
                                 out_controls=args.out_controls)
    print(f"serving one session on ws://127.0.0.1:{server.port} "
          f"(mode {scenario.mode}, scenario {scenario.name})")
    server.serve()
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zebra-sonify",
                                description="Crossing-guidance sonification toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", help="render one instruction's sonification to WAV")
    r.add_argument("--instruction", required=True,
                   choices=[i.value for i in Instruction])
    r.add_argument("--quantity", default="0",
                   help="amount with unit suffix: 20deg, 0.35rad, 6m")
    r.add_argument("--lateral-bias", type=float, default=0.0)
    r.add_argument("--mode", choices=["mono", "stereo"], default="mono")
    r.add_argument("--duration", type=float, default=3.0)
    r.add_argument("--sample-rate", type=int, default=audio_io.SAMPLE_RATE)
    r.add_argument("--out", required=True)
    r.set_defaults(fn=cmd_render)

    s = sub.add_parser("simulate", help="run one scripted session")
    s.add_argument("--scenario", required=True)
    s.add_argument("--mode", choices=list(simulator.MODES), default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--controls", help="recorded control log for the replay policy")
    s.add_argument("--out-metrics")
    s.add_argument("--out-events")
    s.add_argument("--out-audio")
    s.set_defaults(fn=cmd_simulate)

    b = sub.add_parser("bench", help="run the scenario suite across modes")
    b.add_argument("--scenarios", help="directory of scenario JSON files "
                                       "(default: built-in six starts)")
    b.add_argument("--modes", help="comma-separated subset, default all three")
    b.add_argument("--seed", type=int, default=1)
    b.add_argument("--summary", required=True)
    b.add_argument("--runs-csv", help="also write the per-run table")
    b.set_defaults(fn=cmd_bench)

    st = sub.add_parser("staircase", help="staircase self-test vs simulated listener")
    st.add_argument("--dimension", choices=["ild", "itd"], required=True)
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--true-threshold", type=float, default=None)
    st.add_argument("--out", help="trial log CSV path")
    st.set_defaults(fn=cmd_staircase)

    sv = sub.add_parser("serve", help="serve one interactive session to the browser UI")
    sv.add_argument("--port", type=int, default=8765)
    sv.add_argument("--scenario")
    sv.add_argument("--mode", choices=list(simulator.MODES), default=None)
    sv.add_argument("--seed", type=int, default=1)
    sv.add_argument("--out-metrics")
    sv.add_argument("--out-controls")
    sv.set_defaults(fn=cmd_serve)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.fn(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
