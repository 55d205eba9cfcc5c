"""Benchmark the compiled partial-rendering kernel against the numpy fallback.

Run from the repository root:

    python benchmarks/bench_kernels.py [--repeats 20]

Renders a grid of stimulus shapes with both kernels, reports the median
wall time per render and the speedup, and cross-checks that the two
backends produce numerically identical audio.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from zebra_sonify import synthesis as syn
from zebra_sonify.synthesis import StimulusSpec, render_stimulus

CASES = [
    ("rotate impulse", StimulusSpec(1200.0, 12, "inharmonic", -3.0, duration=0.12)),
    ("scale note", StimulusSpec(800.0, 1, duration=0.09)),
    ("slow pair", StimulusSpec(200.0, 8, "inharmonic", -6.0, duration=0.5,
                               base_decay=0.25)),
    ("dense long", StimulusSpec(300.0, 20, "harmonic", -3.0, duration=2.0)),
]


def time_render(spec: StimulusSpec, sample_rate: int, repeats: int) -> float:
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        render_stimulus(spec, sample_rate)
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def run(repeats: int = 20, sample_rate: int = 48000) -> list[dict]:
    kernels = syn.available_kernels()
    rows = []
    for name, spec in CASES:
        row = {"case": name,
               "samples": int(round(spec.duration * sample_rate)),
               "partials": spec.partial_count}
        outputs = {}
        for kernel in kernels:
            syn.use_kernel(kernel)
            row[kernel] = time_render(spec, sample_rate, repeats)
            outputs[kernel] = render_stimulus(spec, sample_rate)
        if "compiled" in outputs and "numpy" in outputs:
            row["speedup"] = row["numpy"] / row["compiled"]
            row["max_diff"] = float(np.max(np.abs(outputs["compiled"] -
                                                  outputs["numpy"])))
        rows.append(row)
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--sample-rate", type=int, default=48000)
    args = parser.parse_args(argv)

    default = syn.kernel_name()
    rows = run(args.repeats, args.sample_rate)
    syn.use_kernel(default)

    kernels = syn.available_kernels()
    if "compiled" not in kernels:
        print("compiled kernel not built; timing the numpy fallback only")
    header = f"{'case':<16}{'samples':>9}{'partials':>9}"
    for kernel in kernels:
        header += f"{kernel + ' (ms)':>15}"
    if "compiled" in kernels:
        header += f"{'speedup':>9}{'max diff':>11}"
    print(header)
    for row in rows:
        line = f"{row['case']:<16}{row['samples']:>9}{row['partials']:>9}"
        for kernel in kernels:
            line += f"{row[kernel] * 1e3:>15.3f}"
        if "speedup" in row:
            line += f"{row['speedup']:>9.1f}{row['max_diff']:>11.2e}"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
