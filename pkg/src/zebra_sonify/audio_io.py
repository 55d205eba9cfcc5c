"""Audio delivery: WAV files and fixed-size PCM block generation.

Quantization is 16-bit with round-half-away-from-zero and no dithering, so
renders are bit-exact and comparable across runs.  The streaming path
(:class:`BlockStreamer`) and the offline mixer (:func:`render_session_audio`)
perform the per-sample additions in the same event order, which makes their
outputs byte-identical; tests rely on that equivalence.

Block producers run on the audio-control thread; consumers (file writers,
the bridge socket) may live elsewhere and hand off through a bounded queue.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .sonification import AudioEvent, DEFAULT_PAN_LAW, PanLaw, pan_ild_itd
from .synthesis import render_stimulus

SAMPLE_RATE = 48000
BLOCK_FRAMES = 960  # 20 ms at 48 kHz

FULL_SCALE = 32767.0


def quantize_int16(x: np.ndarray) -> np.ndarray:
    """Float [-1, 1] -> int16, rounding half away from zero."""
    scaled = np.asarray(x, dtype=np.float64) * FULL_SCALE
    rounded = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    return np.clip(rounded, -32768, 32767).astype(np.int16)


@dataclass(frozen=True)
class AudioBlock:
    """One fixed-size stereo PCM block; ``samples`` has shape (frames, 2)."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    @property
    def frame_count(self) -> int:
        return self.samples.shape[0]

    def to_bytes(self) -> bytes:
        """Interleaved little-endian 16-bit PCM."""
        return self.samples.astype("<i2", copy=False).tobytes()


def write_wav(buffer: np.ndarray, sample_rate: int, channels: int, path) -> None:
    """Write a canonical RIFF/WAVE PCM 16-bit little-endian file.

    Accepts float buffers in [-1, 1] (quantized here) or int16 buffers
    (written verbatim, which makes read/write round trips bit-exact).
    """
    if channels not in (1, 2):
        raise ValueError("channels must be 1 or 2")
    data = np.asarray(buffer)
    if data.dtype != np.int16:
        data = quantize_int16(data)
    if channels == 1 and data.ndim != 1:
        raise ValueError("mono WAV needs a 1-D buffer")
    if channels == 2 and (data.ndim != 2 or data.shape[1] != 2):
        raise ValueError("stereo WAV needs an (n, 2) buffer")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(2)
        w.setframerate(int(sample_rate))
        w.writeframes(data.astype("<i2", copy=False).tobytes())


def read_wav(path) -> tuple[np.ndarray, int, int]:
    """Read a 16-bit PCM WAV; returns (samples, sample_rate, channels)."""
    with wave.open(str(path), "rb") as r:
        if r.getsampwidth() != 2:
            raise ValueError("only 16-bit PCM supported")
        channels = r.getnchannels()
        rate = r.getframerate()
        raw = r.readframes(r.getnframes())
    samples = np.frombuffer(raw, dtype="<i2")
    if channels == 2:
        samples = samples.reshape(-1, 2)
    return samples, rate, channels


def session_frames(duration: float, sample_rate: int = SAMPLE_RATE,
                   block_frames: int = BLOCK_FRAMES) -> int:
    """Total frame count of a rendered session, padded to whole blocks.

    A sub-sample epsilon keeps float residue in accumulated durations from
    spilling into a spurious extra block.
    """
    raw = int(np.ceil(duration * sample_rate - 1e-6))
    blocks = max(1, int(np.ceil(raw / block_frames))) if raw > 0 else 0
    return blocks * block_frames


class SnippetCache:
    """Memoized stimulus render + pan.  Repeating programs reuse buffers, so
    the steady-state block path allocates nothing new."""

    def __init__(self, sample_rate: int, pan_law: PanLaw):
        self.sample_rate = sample_rate
        self.pan_law = pan_law
        self._cache: dict = {}

    def stereo(self, event: AudioEvent) -> np.ndarray:
        key = (event.stimulus, event.pan, event.gain_offset_db)
        snip = self._cache.get(key)
        if snip is None:
            mono = render_stimulus(event.stimulus, self.sample_rate)
            if event.gain_offset_db:
                mono = mono * 10.0 ** (event.gain_offset_db / 20.0)
            snip = pan_ild_itd(mono, event.pan, self.pan_law, self.sample_rate)
            self._cache[key] = snip
        return snip


def _sorted_events(events: Iterable[AudioEvent]) -> list[AudioEvent]:
    return sorted(events, key=lambda e: e.time)


def render_session_audio(
    events: Iterable[AudioEvent],
    duration: float,
    sample_rate: int = SAMPLE_RATE,
    pan_law: PanLaw = DEFAULT_PAN_LAW,
    block_frames: int = BLOCK_FRAMES,
) -> np.ndarray:
    """Offline mix of a whole session into an (n, 2) int16 array.

    The length is padded to whole blocks so the result lines up with
    :func:`stream_blocks` output byte for byte.
    """
    total = session_frames(duration, sample_rate, block_frames)
    mix = np.zeros((total, 2), dtype=np.float64)
    cache = SnippetCache(sample_rate, pan_law)
    for ev in _sorted_events(events):
        onset = int(round(ev.time * sample_rate))
        if onset >= total:
            continue
        snip = cache.stereo(ev)
        end = min(total, onset + len(snip))
        mix[onset:end] += snip[: end - onset]
    return quantize_int16(mix)


class BlockStreamer:
    """Pull-based block generator fed with time-ordered audio events.

    ``add_events`` accepts events as a session produces them;
    ``take_ready(t)`` returns every block whose window is fully in the past,
    and ``finish(duration)`` flushes the padded tail.  Concatenating all
    emitted blocks reproduces :func:`render_session_audio` exactly.
    """

    def __init__(self, sample_rate: int = SAMPLE_RATE,
                 pan_law: PanLaw = DEFAULT_PAN_LAW,
                 block_frames: int = BLOCK_FRAMES):
        self.sample_rate = sample_rate
        self.block_frames = block_frames
        self._cache = SnippetCache(sample_rate, pan_law)
        self._queued: list[tuple[int, np.ndarray]] = []  # (onset_sample, snippet)
        self._active: list[tuple[int, np.ndarray]] = []
        self._next_block = 0
        self._last_event_time = float("-inf")

    def add_events(self, events: Iterable[AudioEvent]) -> None:
        for ev in _sorted_events(events):
            if ev.time < self._last_event_time:
                raise ValueError("events must arrive in time order")
            self._last_event_time = ev.time
            self._queued.append((int(round(ev.time * self.sample_rate)),
                                 self._cache.stereo(ev)))

    def _render_block(self) -> AudioBlock:
        b = self.block_frames
        start = self._next_block * b
        end = start + b
        out = np.zeros((b, 2), dtype=np.float64)
        while self._queued and self._queued[0][0] < end:
            self._active.append(self._queued.pop(0))
        keep = []
        for onset, snip in self._active:
            s0 = max(start, onset)
            s1 = min(end, onset + len(snip))
            if s1 > s0:
                out[s0 - start : s1 - start] += snip[s0 - onset : s1 - onset]
            if onset + len(snip) > end:
                keep.append((onset, snip))
        self._active = keep
        self._next_block += 1
        return AudioBlock(quantize_int16(out), self.sample_rate)

    def take_ready(self, through_time: float) -> list[AudioBlock]:
        """Blocks entirely earlier than ``through_time`` seconds."""
        out = []
        limit = int(through_time * self.sample_rate)
        while (self._next_block + 1) * self.block_frames <= limit:
            out.append(self._render_block())
        return out

    def finish(self, duration: float) -> list[AudioBlock]:
        """Render everything up to the block-padded session end."""
        total_blocks = session_frames(duration, self.sample_rate,
                                      self.block_frames) // self.block_frames
        out = []
        while self._next_block < total_blocks:
            out.append(self._render_block())
        return out


def stream_blocks(
    events: Sequence[AudioEvent],
    duration: float,
    sample_rate: int = SAMPLE_RATE,
    pan_law: PanLaw = DEFAULT_PAN_LAW,
    block_frames: int = BLOCK_FRAMES,
) -> Iterator[AudioBlock]:
    """Stream a finished event list as fixed-size blocks."""
    streamer = BlockStreamer(sample_rate, pan_law, block_frames)
    streamer.add_events(events)
    yield from streamer.finish(duration)
