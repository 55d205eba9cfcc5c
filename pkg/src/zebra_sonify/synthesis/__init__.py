"""Additive synthesizer for short impulsive guidance stimuli.

A stimulus is a sum of exponentially damped sinusoidal partials with a fast
(1 ms) linear attack.  Harmonic stimuli sound like clean beeps; inharmonic
ones use stretched partials for a struck metal/wood character; a single
partial gives a pure tone.  Rendering is stateless and deterministic, so it
is safe to call from any thread; the real-time path renders fixed-size
blocks from cached buffers and performs no allocation after setup.

The inner loop lives in a compiled extension (``_kernel``) with a numpy
fallback selected at import time; set ``ZEBRA_SONIFY_KERNEL=numpy`` or
``=compiled`` to force one, or call :func:`use_kernel`.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _kernel_numpy

try:
    from . import _kernel as _kernel_compiled
except ImportError:
    _kernel_compiled = None

_KERNELS = {"numpy": _kernel_numpy}
if _kernel_compiled is not None:
    _KERNELS["compiled"] = _kernel_compiled

ATTACK_TIME = 0.001

# Stretched-partial detuning for the inharmonic mode: partial k sits at
# k * f0 * STRETCH**(k-1), so the fundamental itself stays untouched.
STRETCH = 1.02

_DB_PER_OCTAVE = 20.0 * math.log10(2.0)


def _pick_default_kernel() -> str:
    forced = os.environ.get("ZEBRA_SONIFY_KERNEL", "").strip().lower()
    if forced:
        if forced not in ("numpy", "compiled"):
            raise ValueError(f"ZEBRA_SONIFY_KERNEL={forced!r}; expected 'numpy' or 'compiled'")
        if forced == "compiled" and "compiled" not in _KERNELS:
            raise RuntimeError("compiled kernel requested but the extension is not built")
        return forced
    return "compiled" if "compiled" in _KERNELS else "numpy"


_active_kernel = _pick_default_kernel()


def kernel_name() -> str:
    """Name of the kernel currently in use ('compiled' or 'numpy')."""
    return _active_kernel


def available_kernels() -> tuple[str, ...]:
    return tuple(sorted(_KERNELS))


def use_kernel(name: str) -> None:
    """Switch the rendering kernel (mainly for tests and benchmarks)."""
    global _active_kernel
    if name not in _KERNELS:
        raise ValueError(f"unknown kernel {name!r}; available: {available_kernels()}")
    _active_kernel = name


@dataclass(frozen=True)
class PartialSpec:
    """One damped sinusoidal component."""

    frequency: float
    amplitude: float
    decay_time: float
    attack_time: float = ATTACK_TIME

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.decay_time <= 0:
            raise ValueError("decay_time must be positive")
        if self.attack_time < 0:
            raise ValueError("attack_time must be >= 0")


@dataclass(frozen=True)
class StimulusSpec:
    """A synthesizable impulsive sound.

    ``partial_count`` is 5..20 for the impulsive beeps/strikes, or exactly 1
    for a pure tone (used by the rising-scale notes, which carry no
    overtones by design).  ``gain_db`` is the peak level relative to full
    scale; the default leaves enough headroom that a +20 dB program boost
    cannot clip.
    """

    fundamental: float
    partial_count: int = 10
    harmonicity: str = "harmonic"
    rolloff_db_per_octave: float = -6.0
    duration: float = 0.12
    base_decay: float = 0.06
    gain_db: float = -14.0

    def __post_init__(self):
        if self.fundamental <= 0:
            raise ValueError("fundamental must be positive")
        if self.partial_count != 1 and not 5 <= self.partial_count <= 20:
            raise ValueError("partial_count must be 1 (pure tone) or in [5, 20]")
        if self.harmonicity not in ("harmonic", "inharmonic"):
            raise ValueError("harmonicity must be 'harmonic' or 'inharmonic'")
        if not -6.0 <= self.rolloff_db_per_octave <= -3.0:
            raise ValueError("rolloff must be in [-6, -3] dB/octave")
        if self.duration < 0:
            raise ValueError("duration must be >= 0")
        if self.base_decay <= 0:
            raise ValueError("base_decay must be positive")
        if self.gain_db > 0:
            raise ValueError("gain_db must be <= 0 dBFS")


def make_partials(spec: StimulusSpec, sample_rate: float | None = None) -> list[PartialSpec]:
    """Expand a stimulus spec into its partial set.

    Amplitudes follow the spectral roll-off law (``rolloff`` dB per octave
    above the fundamental); decay times shrink as 1/sqrt(k) so high partials
    die faster, as on a struck body.  Partials at or above Nyquist are
    silently dropped when a sample rate is given.
    """
    f0 = spec.fundamental
    partials = []
    for k in range(1, spec.partial_count + 1):
        if spec.harmonicity == "inharmonic":
            f = k * f0 * STRETCH ** (k - 1)
        else:
            f = k * f0
        if sample_rate is not None and f >= 0.5 * sample_rate:
            continue
        amp = (f / f0) ** (spec.rolloff_db_per_octave / _DB_PER_OCTAVE)
        partials.append(PartialSpec(f, amp, spec.base_decay / math.sqrt(k)))
    return partials


def render_stimulus(spec: StimulusSpec, sample_rate: float) -> np.ndarray:
    """Render a stimulus to a mono float64 buffer, peak-normalized to
    ``spec.gain_db``.  Deterministic: identical spec and rate give
    bit-identical buffers (per kernel)."""
    if sample_rate < 8000:
        raise ValueError("sample_rate must be >= 8000 Hz")
    n = int(round(spec.duration * sample_rate))
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    partials = make_partials(spec, sample_rate)
    if not partials:
        return np.zeros(n, dtype=np.float64)
    freqs = np.array([p.frequency for p in partials], dtype=np.float64)
    amps = np.array([p.amplitude for p in partials], dtype=np.float64)
    decays = np.array([p.decay_time for p in partials], dtype=np.float64)
    out = _KERNELS[_active_kernel].render_partials(
        freqs, amps, decays, ATTACK_TIME, n, float(sample_rate)
    )
    peak = float(np.max(np.abs(out)))
    if peak > 0:
        out *= 10.0 ** (spec.gain_db / 20.0) / peak
    return out


def estimate_fundamental(
    buffer: np.ndarray,
    sample_rate: float,
    fmin: float = 50.0,
    fmax: float = 4000.0,
) -> float:
    """Frequency of the strongest low-band spectral peak, in Hz.

    Parabolic interpolation on a zero-padded Hann-windowed magnitude
    spectrum; intended as an analysis oracle, not a general pitch tracker.
    """
    x = np.asarray(buffer, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a mono buffer")
    if len(x) < 2048:
        raise ValueError("buffer too short: need at least 2048 samples")
    if float(np.max(np.abs(x))) < 1e-12:
        raise ValueError("no signal in buffer")

    n = len(x)
    nfft = 1 << (int(n - 1).bit_length() + 2)  # 4x zero padding
    window = np.hanning(n)
    mag = np.abs(np.fft.rfft(x * window, n=nfft))
    freqs_per_bin = sample_rate / nfft
    lo = max(1, int(math.ceil(fmin / freqs_per_bin)))
    hi = min(len(mag) - 2, int(fmax / freqs_per_bin))
    if hi <= lo:
        raise ValueError("search band empty at this sample rate")
    k = lo + int(np.argmax(mag[lo : hi + 1]))
    # parabolic refinement on log magnitude
    a, b, c = (math.log(max(mag[k + o], 1e-300)) for o in (-1, 0, 1))
    denom = a - 2 * b + c
    delta = 0.0 if denom == 0 else 0.5 * (a - c) / denom
    return (k + delta) * freqs_per_bin
