"""Symbol-domain processing: constellations, PSS, resource grid, OFDM."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerology import PSS_SLOT_SYMBOL, Numerology, available_pdsch_re

PSS_ROOTS = {0: 25, 1: 29, 2: 34}
PSS_LENGTH = 62


# --------------------------------------------------------------------------
# constellations
# --------------------------------------------------------------------------

def _axis_level(bits: np.ndarray) -> np.ndarray:
    """Gray PAM amplitude per LTE: bits are (sign, b2, b4, ...) along one axis."""
    sign = 1 - 2 * bits[:, 0].astype(np.int64)
    if bits.shape[1] == 1:
        return sign
    if bits.shape[1] == 2:
        return sign * (2 - (1 - 2 * bits[:, 1].astype(np.int64)))
    inner = 2 - (1 - 2 * bits[:, 2].astype(np.int64))
    return sign * (4 - (1 - 2 * bits[:, 1].astype(np.int64)) * inner)


_NORM = {2: np.sqrt(2.0), 4: np.sqrt(10.0), 6: np.sqrt(42.0)}


def _check_order(order: int) -> None:
    if order not in _NORM:
        raise ValueError(f"modulation order must be 2, 4 or 6, got {order}")


def modulate(bits, order: int) -> np.ndarray:
    """Map bits to unit-energy Gray QPSK/16QAM/64QAM symbols (LTE layout)."""
    _check_order(order)
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size % order:
        raise ValueError(f"{bits.size} bits is not a multiple of {order}")
    groups = bits.reshape(-1, order)
    i_level = _axis_level(groups[:, 0::2])
    q_level = _axis_level(groups[:, 1::2])
    return (i_level + 1j * q_level) / _NORM[order]


@lru_cache(maxsize=None)
def constellation(order: int) -> np.ndarray:
    """All ``2**order`` points indexed by their MSB-first bit label."""
    _check_order(order)
    labels = np.arange(2 ** order)
    bits = ((labels[:, None] >> np.arange(order - 1, -1, -1)) & 1).astype(np.uint8)
    pts = modulate(bits.ravel(), order)
    pts.setflags(write=False)
    return pts


def _axis_bits(x: np.ndarray, n: int) -> np.ndarray:
    """Hard bits of one axis (amplitude in un-normalised PAM units)."""
    out = np.empty((x.size, n), dtype=np.uint8)
    out[:, 0] = x < 0
    if n >= 2:
        mag = np.abs(x)
        if n == 2:
            out[:, 1] = mag > 2
        else:
            out[:, 1] = mag > 4
            out[:, 2] = np.abs(mag - 4) > 2
    return out


def demod_hard(symbols, order: int) -> np.ndarray:
    """Minimum-distance decisions; equidistant ties resolve to bit 0."""
    _check_order(order)
    y = np.asarray(symbols, dtype=np.complex128).ravel() * _NORM[order]
    half = order // 2
    out = np.empty((y.size, order), dtype=np.uint8)
    out[:, 0::2] = _axis_bits(y.real, half)
    out[:, 1::2] = _axis_bits(y.imag, half)
    return out.ravel()


def demod_soft(symbols, order: int, noise_variance: float) -> np.ndarray:
    """Max-log LLRs, positive meaning bit 0.

    Each LLR is ``(min |y-s|^2 over s with bit=1  -  min over bit=0) / noise_variance``.
    """
    if not noise_variance > 0:
        raise ValueError("noise_variance must be positive")
    pts = constellation(order)
    y = np.asarray(symbols, dtype=np.complex128).ravel()
    dist = np.abs(y[:, None] - pts[None, :]) ** 2
    labels = np.arange(pts.size)
    llrs = np.empty((y.size, order))
    for b in range(order):
        one = ((labels >> (order - 1 - b)) & 1).astype(bool)
        llrs[:, b] = dist[:, one].min(axis=1) - dist[:, ~one].min(axis=1)
    return (llrs / noise_variance).ravel()


# --------------------------------------------------------------------------
# PSS
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PssSequence:
    nid2: int
    root: int
    values: np.ndarray


def pss_generate(nid2: int) -> PssSequence:
    """Length-63 Zadoff-Chu sequence with the middle (DC) element removed."""
    if nid2 not in PSS_ROOTS:
        raise ValueError(f"nid2 must be 0, 1 or 2, got {nid2}")
    u = PSS_ROOTS[nid2]
    n = np.arange(PSS_LENGTH)
    m = np.where(n < 31, n * (n + 1), (n + 1) * (n + 2))
    return PssSequence(nid2, u, np.exp(-1j * np.pi * u * m / 63))


def pss_subcarriers(numerology: Numerology) -> np.ndarray:
    """Grid rows (subcarrier indices) carrying the 62 PSS values."""
    edge = (numerology.n_active_sc - PSS_LENGTH) // 2
    return np.arange(edge, edge + PSS_LENGTH)


# --------------------------------------------------------------------------
# resource grid
# --------------------------------------------------------------------------

@dataclass
class ResourceGrid:
    """Complex cells indexed ``[subcarrier, symbol]``, lowest subcarrier first."""

    cells: np.ndarray
    subframe_index: int = 0

    @classmethod
    def empty(cls, numerology: Numerology, subframe_index: int = 0) -> "ResourceGrid":
        shape = (numerology.n_active_sc, numerology.symbols_per_subframe)
        return cls(np.zeros(shape, dtype=np.complex128), subframe_index)


def pdsch_mask(numerology: Numerology, subframe_index: int) -> np.ndarray:
    """Boolean ``[subcarrier, symbol]`` mask of cells that carry PDSCH."""
    available_pdsch_re(numerology, subframe_index)  # validates the index
    mask = np.ones((numerology.n_active_sc, numerology.symbols_per_subframe), dtype=bool)
    if subframe_index == 0:
        mask[:, PSS_SLOT_SYMBOL] = False
    return mask


def grid_map(symbols, numerology: Numerology, subframe_index: int,
             nid2: int = 0) -> ResourceGrid:
    """Fill PDSCH cells frequency-first, then time; add PSS in subframe 0."""
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    mask = pdsch_mask(numerology, subframe_index)
    need = int(mask.sum())
    if symbols.size != need:
        raise ValueError(f"subframe {subframe_index} takes {need} symbols, got {symbols.size}")
    grid = ResourceGrid.empty(numerology, subframe_index)
    cells_t = grid.cells.T  # view: [symbol, subcarrier]
    cells_t[mask.T] = symbols
    if subframe_index == 0:
        grid.cells[pss_subcarriers(numerology), PSS_SLOT_SYMBOL] = pss_generate(nid2).values
    return grid


def grid_demap(grid: ResourceGrid, numerology: Numerology,
               subframe_index: int | None = None) -> np.ndarray:
    if subframe_index is None:
        subframe_index = grid.subframe_index
    mask = pdsch_mask(numerology, subframe_index)
    return grid.cells.T[mask.T].copy()


# --------------------------------------------------------------------------
# OFDM
# --------------------------------------------------------------------------

def ofdm_symbol(column: np.ndarray, numerology: Numerology) -> np.ndarray:
    """Unitary IFFT of one grid column (no CP)."""
    spectrum = np.zeros(numerology.n_fft, dtype=np.complex128)
    spectrum[numerology.active_bins()] = column
    return np.fft.ifft(spectrum, norm="ortho")


def ofdm_modulate(grid: ResourceGrid, numerology: Numerology) -> np.ndarray:
    """Time-domain subframe at ``fs_baseband`` (CP prepended to each symbol)."""
    out = []
    for sym in range(numerology.symbols_per_subframe):
        body = ofdm_symbol(grid.cells[:, sym], numerology)
        cp = numerology.cp_length(sym)
        out.append(body[-cp:])
        out.append(body)
    return np.concatenate(out)


def ofdm_demodulate(samples, numerology: Numerology,
                    first_subframe_index: int = 0) -> list[ResourceGrid]:
    """Split aligned samples into subframes and recover their grids."""
    samples = np.asarray(samples, dtype=np.complex128)
    n_sf = numerology.subframe_length
    if samples.size == 0 or samples.size % n_sf:
        raise ValueError(f"{samples.size} samples is not a whole number of {n_sf}-sample subframes")
    bins = numerology.active_bins()
    grids = []
    for i in range(samples.size // n_sf):
        chunk = samples[i * n_sf:(i + 1) * n_sf]
        grid = ResourceGrid.empty(
            numerology, (first_subframe_index + i) % numerology.subframes_per_frame)
        for sym in range(numerology.symbols_per_subframe):
            start = numerology.symbol_start(sym) + numerology.cp_length(sym)
            spec = np.fft.fft(chunk[start:start + numerology.n_fft], norm="ortho")
            grid.cells[:, sym] = spec[bins]
        grids.append(grid)
    return grids
