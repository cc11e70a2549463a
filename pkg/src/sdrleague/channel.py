"""Channel models: ideal, AWGN, and 16-bit mono WAV files as an acoustic link."""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

WAV_RATE = 48000
PCM_SCALE = 32767


class WavFormatError(ValueError):
    """Unreadable WAV, or one that is not PCM16 mono at 48 kHz."""


@dataclass(frozen=True)
class ChannelSpec:
    kind: str
    snr_db: float | None = None
    seed: int = 0
    path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("ideal", "awgn", "wav_out", "wav_in"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.kind == "awgn" and (self.snr_db is None or not math.isfinite(self.snr_db)):
            raise ValueError("awgn channel needs a finite snr_db")
        if self.kind.startswith("wav") and not self.path:
            raise ValueError(f"{self.kind} channel needs a path")


def apply_ideal(samples) -> np.ndarray:
    return np.asarray(samples)


def apply_awgn(samples, snr_db: float, seed) -> np.ndarray:
    """Add white Gaussian noise at ``snr_db`` below the measured burst power.

    Complex input gets circular noise (variance split over I and Q); real
    input gets the full variance on the single component. ``seed`` is
    anything :func:`numpy.random.default_rng` accepts.
    """
    x = np.asarray(samples)
    if x.size == 0:
        raise ValueError("cannot add noise to an empty burst")
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite; use apply_ideal for a noiseless link")
    power = float(np.mean(np.abs(x) ** 2))
    variance = power / 10 ** (snr_db / 10)
    rng = np.random.default_rng(seed)
    if np.iscomplexobj(x):
        noise = rng.standard_normal((2, x.size)) * math.sqrt(variance / 2)
        return x + (noise[0] + 1j * noise[1]).reshape(x.shape)
    return x + rng.standard_normal(x.shape) * math.sqrt(variance)


def quantize_pcm16(samples) -> np.ndarray:
    """Integer PCM codes for ``samples`` in [-1, 1]."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size and np.max(np.abs(x)) > 1.0:
        raise ValueError(f"samples clip: peak {np.max(np.abs(x)):.4f} exceeds 1.0")
    return np.rint(x * PCM_SCALE).astype("<i2")


def wav_write(samples, path) -> None:
    codes = quantize_pcm16(samples)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(WAV_RATE)
        w.writeframes(codes.tobytes())


def wav_read(path) -> np.ndarray:
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as w:
            channels, width, rate = w.getnchannels(), w.getsampwidth(), w.getframerate()
            if rate != WAV_RATE:
                raise WavFormatError(f"{path}: unsupported sample rate {rate} Hz (need {WAV_RATE})")
            if channels != 1:
                raise WavFormatError(f"{path}: {channels} channels, need mono")
            if width != 2:
                raise WavFormatError(f"{path}: {8 * width}-bit samples, need 16-bit PCM")
            raw = w.readframes(w.getnframes())
    except (wave.Error, EOFError) as exc:
        raise WavFormatError(f"{path}: malformed WAV ({exc})") from exc
    return np.frombuffer(raw, dtype="<i2").astype(np.float64) / PCM_SCALE
