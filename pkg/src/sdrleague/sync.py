"""PSS-based timing acquisition and scalar gain/phase correction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal

from .numerology import PSS_SLOT_SYMBOL, Numerology
from .phy import PSS_ROOTS, ResourceGrid, ofdm_symbol, pss_generate, pss_subcarriers

DEFAULT_THRESHOLD = 0.5


class SyncError(RuntimeError):
    pass


@dataclass(frozen=True)
class Detection:
    offset: int  # first post-CP sample of the PSS symbol
    metric: float
    nid2: int
    cfo_hz: float | None = None


def pss_replica(nid2: int, numerology: Numerology) -> np.ndarray:
    """Time-domain PSS symbol without cyclic prefix."""
    column = np.zeros(numerology.n_active_sc, dtype=np.complex128)
    column[pss_subcarriers(numerology)] = pss_generate(nid2).values
    return ofdm_symbol(column, numerology)


def normalized_correlation(capture, replica) -> np.ndarray:
    """``|<r_k, p>| / (||r_k|| ||p||)`` for every window start ``k``."""
    r = np.asarray(capture, dtype=np.complex128)
    n = replica.size
    num = np.abs(signal.correlate(r, replica, mode="valid", method="fft"))
    energy = np.concatenate([[0.0], np.cumsum(np.abs(r) ** 2)])
    win = np.maximum(energy[n:] - energy[:-n], 0.0)
    denom = np.sqrt(win) * np.linalg.norm(replica)
    # silent windows and FFT round-off must not produce spurious unit peaks
    floor = 1e-12 * max(float(energy[-1]) / max(r.size, 1), 1e-300) * n
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(win > floor, num / denom, 0.0)
    return np.clip(c, 0.0, 1.0)


def correlate_detect(capture, numerology: Numerology,
                     threshold: float = DEFAULT_THRESHOLD) -> list[Detection]:
    """All PSS detections above ``threshold``, best metric first.

    A detection is a local maximum of the normalized correlation that
    dominates every other candidate (any nid2) within one FFT length.
    """
    capture = np.asarray(capture, dtype=np.complex128)
    n = numerology.n_fft
    if capture.size < n:
        raise SyncError(f"capture of {capture.size} samples is shorter than one symbol ({n})")
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    metrics = np.stack([normalized_correlation(capture, pss_replica(k, numerology))
                        for k in sorted(PSS_ROOTS)])
    best = metrics.max(axis=0)
    which = metrics.argmax(axis=0)
    local = ndimage.maximum_filter1d(best, size=2 * n + 1, mode="constant", cval=0.0)
    found = []
    for k in np.flatnonzero((best >= threshold) & (best >= local)):
        # plateau guard: keep the first sample of equal maxima
        if found and k - found[-1].offset <= n:
            continue
        found.append(Detection(int(k), float(best[k]), int(which[k])))
    return sorted(found, key=lambda d: (-d.metric, d.nid2, d.offset))


def frame_start(detection: Detection, numerology: Numerology) -> int:
    return detection.offset - numerology.pss_offset


def frame_align(capture, detection: Detection, numerology: Numerology,
                n_subframes: int | None = None) -> list[np.ndarray]:
    """Slice whole subframes starting at the frame that carries ``detection``.

    Without ``n_subframes`` every complete subframe after the frame start is
    returned, but at least one full frame must be present.
    """
    capture = np.asarray(capture)
    start = frame_start(detection, numerology)
    if start < 0:
        raise SyncError(f"detection at {detection.offset} implies a frame start before the capture")
    length = numerology.subframe_length
    available = (capture.size - start) // length
    need = numerology.subframes_per_frame if n_subframes is None else n_subframes
    if available < need:
        raise SyncError(f"only {available} whole subframes after sample {start}, need {need}")
    count = available if n_subframes is None else n_subframes
    return [capture[start + i * length:start + (i + 1) * length] for i in range(count)]


def estimate_gain(grid: ResourceGrid, numerology: Numerology, nid2: int) -> complex:
    """Least-squares scalar channel estimate from the PSS cells of subframe 0."""
    ref = pss_generate(nid2).values
    rx = grid.cells[pss_subcarriers(numerology), PSS_SLOT_SYMBOL]
    g = np.sum(rx * np.conj(ref)) / np.sum(np.abs(ref) ** 2)
    if abs(g) < 1e-9:
        raise SyncError("no PSS energy")
    return complex(g)


def gain_phase_correct(grid: ResourceGrid, numerology: Numerology, nid2: int) -> ResourceGrid:
    g = estimate_gain(grid, numerology, nid2)
    return ResourceGrid(grid.cells / g, grid.subframe_index)


def cfo_estimate_cp(samples, numerology: Numerology) -> float:
    """Carrier offset in Hz from CP/tail correlation, averaged over symbols.

    The estimate wraps outside +/- half a subcarrier spacing.
    """
    x = np.asarray(samples, dtype=np.complex128)
    n = numerology.n_fft
    if x.size < numerology.cp_first + n:
        raise SyncError("need at least one OFDM symbol with its cyclic prefix")
    acc = 0j
    pos = 0
    sym = 0
    while True:
        cp = numerology.cp_length(sym % numerology.symbols_per_subframe)
        if pos + cp + n > x.size:
            break
        head = x[pos:pos + cp]
        tail = x[pos + n:pos + n + cp]
        # delayed copy has accumulated 2*pi*eps*n of extra phase
        acc += np.sum(np.conj(head) * tail)
        pos += cp + n
        sym += 1
    return float(np.angle(acc) / (2 * np.pi) * numerology.subcarrier_spacing)
