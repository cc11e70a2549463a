"""Digital up/down conversion between complex baseband and a real audio band."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .numerology import Numerology

DEFAULT_TAPS = 63
DEFAULT_CUTOFF_HZ = 6000.0
DEFAULT_PEAK = 0.9


@dataclass(frozen=True)
class FirFilter:
    taps: np.ndarray

    @property
    def group_delay(self) -> int:
        return (self.taps.size - 1) // 2

    def response(self, freqs_hz, fs: float) -> np.ndarray:
        _, h = signal.freqz(self.taps, worN=np.asarray(freqs_hz, dtype=float), fs=fs)
        return h


def design_lowpass(cutoff: float, fs: float, n_taps: int = DEFAULT_TAPS) -> FirFilter:
    """Hamming-windowed sinc lowpass with unit DC gain."""
    if n_taps < 11 or n_taps % 2 == 0:
        raise ValueError("n_taps must be odd and >= 11")
    if not 0 < cutoff < fs / 2:
        raise ValueError(f"cutoff {cutoff} Hz must lie in (0, {fs / 2}) Hz")
    taps = signal.firwin(n_taps, cutoff, window="hamming", fs=fs)
    taps.setflags(write=False)
    return FirFilter(taps)


def default_filter(numerology: Numerology) -> FirFilter:
    return design_lowpass(DEFAULT_CUTOFF_HZ, numerology.fs_audio, DEFAULT_TAPS)


def _check_passband(numerology: Numerology, filt: FirFilter) -> None:
    # cutoff is not stored; the -6 dB point must clear the band edge
    half_b = numerology.bandwidth / 2
    gain = abs(filt.response([half_b], numerology.fs_audio)[0])
    if gain < 0.5:
        raise ValueError(f"filter attenuates the band edge ({half_b:g} Hz) below -6 dB")
    if numerology.carrier + half_b >= numerology.fs_audio / 2:
        raise ValueError("passband exceeds the audio Nyquist frequency")


class Upconverter:
    """Streaming DUC: zero-stuff, lowpass, mix to the carrier, keep the real part.

    Successive :meth:`process` calls are equivalent to one call on the
    concatenated input; :meth:`flush` emits the filter tail.
    """

    def __init__(self, numerology: Numerology, filt: FirFilter | None = None,
                 gain: float = 1.0):
        self.num = numerology
        self.filt = filt if filt is not None else default_filter(numerology)
        _check_passband(numerology, self.filt)
        self.gain = gain
        self._zi = np.zeros(self.filt.taps.size - 1, dtype=np.complex128)
        self._n = 0

    def _mix(self, y: np.ndarray) -> np.ndarray:
        n = self._n + np.arange(y.size)
        self._n += y.size
        step = self.num.carrier / self.num.fs_audio
        phase = np.mod(n * step, 1.0)
        return np.real(y * np.exp(2j * np.pi * phase)) * self.gain

    def process(self, baseband) -> np.ndarray:
        x = np.asarray(baseband, dtype=np.complex128)
        up = np.zeros(x.size * self.num.interp_factor, dtype=np.complex128)
        up[::self.num.interp_factor] = x * self.num.interp_factor
        y, self._zi = signal.lfilter(self.filt.taps, 1.0, up, zi=self._zi)
        return self._mix(y)

    def flush(self) -> np.ndarray:
        y, self._zi = signal.lfilter(self.filt.taps, 1.0,
                                     np.zeros(self.filt.taps.size - 1, dtype=np.complex128),
                                     zi=self._zi)
        return self._mix(y)


class Downconverter:
    """Streaming DDC: mix down by ``2 e^{-j w n}``, lowpass, decimate.

    The decimation phase is chosen so that an Upconverter/Downconverter pair
    sharing one filter delays the baseband by exactly :attr:`delay` samples.
    """

    def __init__(self, numerology: Numerology, filt: FirFilter | None = None):
        self.num = numerology
        self.filt = filt if filt is not None else default_filter(numerology)
        span = self.filt.taps.size - 1  # DUC delay + DDC delay, audio samples
        self.phase = span % numerology.interp_factor
        self.delay = span // numerology.interp_factor
        self._zi = np.zeros(span, dtype=np.complex128)
        self._n = 0

    def _decimate(self, audio: np.ndarray) -> np.ndarray:
        n = self._n + np.arange(audio.size)
        step = self.num.carrier / self.num.fs_audio
        mixed = 2.0 * audio * np.exp(-2j * np.pi * np.mod(n * step, 1.0))
        y, self._zi = signal.lfilter(self.filt.taps, 1.0, mixed, zi=self._zi)
        keep = (n - self.phase) % self.num.interp_factor == 0
        self._n += audio.size
        return y[keep]

    def process(self, audio) -> np.ndarray:
        return self._decimate(np.asarray(audio, dtype=np.float64))

    def flush(self) -> np.ndarray:
        return self._decimate(np.zeros(self.filt.taps.size - 1))


def duc(baseband, numerology: Numerology, filt: FirFilter | None = None,
        peak: float | None = DEFAULT_PEAK) -> np.ndarray:
    """Up-convert a whole burst; output has ``4N + taps - 1`` samples.

    With ``peak`` set, the output is scaled so its largest magnitude equals
    ``peak``; ``peak=None`` keeps unit passband gain.
    """
    up = Upconverter(numerology, filt)
    out = np.concatenate([up.process(baseband), up.flush()])
    if peak is not None:
        top = np.max(np.abs(out)) if out.size else 0.0
        if top > 0:
            out *= peak / top
    return out


def ddc(audio, numerology: Numerology, filt: FirFilter | None = None):
    """Down-convert a whole burst.

    Returns
    -------
    baseband : ndarray
        Complex samples at ``fs_baseband``.
    delay : int
        Baseband samples by which ``ddc(duc(x))`` lags ``x`` when both
        sides use the same filter.
    """
    down = Downconverter(numerology, filt)
    out = np.concatenate([down.process(audio), down.flush()])
    return out, down.delay
