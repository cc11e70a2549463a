"""Frame structure of the audio-scaled 1.4 MHz LTE downlink and MCS sizing.

The sample counts are those of the 1.4 MHz LTE mode (128-point FFT, normal
cyclic prefix of 10/9 samples, 960-sample slot). Only the clock changes: the
baseband runs at 12 kHz and is interpolated by 4 onto a 12 kHz audio carrier
sampled at 48 kHz.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

CRC_LENGTH = 24
SUBFRAMES_PER_FRAME = 10
PSS_SLOT_SYMBOL = 6  # last symbol of slot 0, subframe 0


class NumerologyError(ValueError):
    """Raised for invalid frame parameters or infeasible MCS/grid combinations."""


@dataclass(frozen=True)
class Numerology:
    n_fft: int = 128
    n_rb: int = 6
    sc_per_rb: int = 12
    symbols_per_slot: int = 7
    slots_per_subframe: int = 2
    subframes_per_frame: int = SUBFRAMES_PER_FRAME
    cp_first: int = 10
    cp_rest: int = 9
    fs_baseband: float = 12000.0
    interp_factor: int = 4
    carrier: float = 12000.0

    def __post_init__(self) -> None:
        if self.n_active_sc >= self.n_fft:
            raise NumerologyError("active subcarriers must be fewer than the FFT size")
        if self.n_active_sc % 2:
            raise NumerologyError("active subcarrier count must be even (DC split)")
        if self.interp_factor < 1:
            raise NumerologyError("interp_factor must be >= 1")
        lo = self.carrier - self.bandwidth / 2
        hi = self.carrier + self.bandwidth / 2
        if not (0 < lo and hi < self.fs_audio / 2):
            raise NumerologyError(
                f"occupied band [{lo:g}, {hi:g}] Hz does not fit inside (0, {self.fs_audio / 2:g}) Hz"
            )

    @property
    def n_active_sc(self) -> int:
        return self.n_rb * self.sc_per_rb

    @property
    def fs_audio(self) -> float:
        return self.fs_baseband * self.interp_factor

    @property
    def bandwidth(self) -> float:
        """Occupied bandwidth in Hz (active subcarriers times spacing)."""
        return self.n_active_sc * self.subcarrier_spacing

    @property
    def subcarrier_spacing(self) -> float:
        return self.fs_baseband / self.n_fft

    @property
    def symbols_per_subframe(self) -> int:
        return self.symbols_per_slot * self.slots_per_subframe

    @property
    def slot_length(self) -> int:
        return (self.symbols_per_slot * self.n_fft + self.cp_first
                + (self.symbols_per_slot - 1) * self.cp_rest)

    @property
    def subframe_length(self) -> int:
        return self.slot_length * self.slots_per_subframe

    @property
    def frame_length(self) -> int:
        return self.subframe_length * self.subframes_per_frame

    @property
    def subframe_duration(self) -> float:
        return self.subframe_length / self.fs_baseband

    def cp_length(self, symbol: int) -> int:
        """Cyclic prefix length of OFDM symbol ``symbol`` (0-based within the subframe)."""
        return self.cp_first if symbol % self.symbols_per_slot == 0 else self.cp_rest

    def symbol_start(self, symbol: int) -> int:
        """Sample index of the first CP sample of ``symbol`` within its subframe."""
        return sum(self.cp_length(s) + self.n_fft for s in range(symbol))

    @property
    def pss_offset(self) -> int:
        """Offset from frame start to the first post-CP sample of the PSS symbol."""
        return self.symbol_start(PSS_SLOT_SYMBOL) + self.cp_length(PSS_SLOT_SYMBOL)

    def active_bins(self):
        """FFT bin indices of the active subcarriers, lowest frequency first.

        Negative frequencies occupy the upper half of the spectrum; DC is skipped.
        """
        half = self.n_active_sc // 2
        neg = [self.n_fft - half + k for k in range(half)]
        pos = [k + 1 for k in range(half)]
        return neg + pos


DEFAULT_NUMEROLOGY = Numerology()


@dataclass(frozen=True)
class McsEntry:
    index: int
    modulation_order: int
    target_rate: Fraction

    def __post_init__(self) -> None:
        if self.modulation_order not in (2, 4, 6):
            raise NumerologyError(f"MCS {self.index}: modulation order must be 2, 4 or 6")
        if not (Fraction(1, 3) <= self.target_rate < 1):
            raise NumerologyError(f"MCS {self.index}: target rate must lie in [1/3, 1)")


_MCS_LINE = re.compile(r"^(\d+)\s*:\s*(.*)$")


def parse_mcs_table(text: str) -> tuple[McsEntry, ...]:
    """Parse ``index: order=<m> rate=<r>`` lines; ``#`` starts a comment."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _MCS_LINE.match(line)
        if not m:
            raise NumerologyError(f"line {lineno}: expected 'index: key=value ...'")
        fields = {}
        for item in m.group(2).split():
            key, sep, value = item.partition("=")
            if not sep:
                raise NumerologyError(f"line {lineno}: malformed field {item!r}")
            fields[key.strip()] = value.strip()
        try:
            entry = McsEntry(int(m.group(1)), int(fields["order"]), Fraction(fields["rate"]))
        except (KeyError, ValueError, ZeroDivisionError) as exc:
            raise NumerologyError(f"line {lineno}: {exc}") from exc
        entries.append(entry)
    entries.sort(key=lambda e: e.index)
    if [e.index for e in entries] != list(range(len(entries))) or not entries:
        raise NumerologyError("MCS indices must be unique and contiguous from 0")
    return tuple(entries)


def load_mcs_table(path: str | Path | None = None) -> tuple[McsEntry, ...]:
    if path is None:
        text = resources.files("sdrleague.data").joinpath("mcs.txt").read_text()
    else:
        text = Path(path).read_text()
    return parse_mcs_table(text)


DEFAULT_MCS_TABLE = load_mcs_table()


def get_mcs(index: int, table: tuple[McsEntry, ...] = DEFAULT_MCS_TABLE) -> McsEntry:
    if not 0 <= index < len(table):
        raise NumerologyError(f"unknown MCS index {index}")
    return table[index]


def _check_subframe(numerology: Numerology, subframe_index: int) -> None:
    if not 0 <= subframe_index < numerology.subframes_per_frame:
        raise NumerologyError(
            f"subframe index {subframe_index} outside 0..{numerology.subframes_per_frame - 1}"
        )


def available_pdsch_re(numerology: Numerology, subframe_index: int) -> int:
    """Number of resource elements left for PDSCH in a subframe.

    Subframe 0 loses the whole PSS symbol; every other subframe uses all cells.
    """
    _check_subframe(numerology, subframe_index)
    symbols = numerology.symbols_per_subframe - (1 if subframe_index == 0 else 0)
    return numerology.n_active_sc * symbols


def coded_bits_per_subframe(numerology: Numerology, mcs: McsEntry | int,
                            subframe_index: int) -> int:
    if isinstance(mcs, int):
        mcs = get_mcs(mcs)
    return available_pdsch_re(numerology, subframe_index) * mcs.modulation_order


def select_code_block(e_bits: int, target_rate, qpp_sizes) -> int:
    """Largest interleaver size ``K <= floor(E * rate)`` from ``qpp_sizes``.

    Raises
    ------
    NumerologyError
        If no supported size fits (MCS infeasible for this grid).
    """
    sizes = sorted(qpp_sizes)
    if not sizes:
        raise NumerologyError("empty QPP table")
    rate = Fraction(target_rate)
    if isinstance(target_rate, float):
        rate = rate.limit_denominator(1000)
    budget = int(e_bits * rate)
    fits = [k for k in sizes if k <= budget]
    if not fits:
        raise NumerologyError(
            f"MCS infeasible for this grid: floor({e_bits} x {target_rate}) = {budget} "
            f"< smallest K {sizes[0]}"
        )
    return fits[-1]
