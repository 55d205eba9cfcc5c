"""Vectorized numpy implementation of the partial-rendering kernel.

Reference semantics for the compiled extension: each partial is
``amp * sin(2*pi*f*t) * exp(-t/decay)`` with a shared linear attack ramp
applied to the mixed sum.  Kept allocation-light but otherwise plain; the
compiled kernel in ``_kernel.pyx`` implements the same math with
per-sample recurrences.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def render_partials(
    freqs: np.ndarray,
    amps: np.ndarray,
    decays: np.ndarray,
    attack: float,
    n_samples: int,
    sample_rate: float,
) -> np.ndarray:
    out = np.zeros(n_samples, dtype=np.float64)
    if n_samples == 0 or len(freqs) == 0:
        return out
    t = np.arange(n_samples, dtype=np.float64) / sample_rate
    for f, a, d in zip(freqs, amps, decays):
        out += a * np.sin(TWO_PI * f * t) * np.exp(-t / d)
    if attack > 0:
        np.multiply(out, np.minimum(t / attack, 1.0), out=out)
    return out
