"""Link-quality accounting: BER, BLER, EVM, throughput."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

EVM_FLOOR_DB = -120.0


@dataclass(frozen=True)
class LinkReport:
    """Pooled link counters; ratios are derived so reports merge exactly.

    ``merge`` is commutative and associative, with ``LinkReport()`` as the
    identity (``snr_db`` is kept only when both sides agree or one is unset).
    """

    bit_errors: int = 0
    bits_total: int = 0
    block_errors: int = 0
    blocks_total: int = 0
    good_payload_bits: int = 0
    duration_s: float = 0.0
    evm_error: float = 0.0
    evm_reference: float = 0.0
    snr_db: float | None = None

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total if self.bits_total else 0.0

    @property
    def bler(self) -> float:
        return self.block_errors / self.blocks_total if self.blocks_total else 0.0

    @property
    def evm_db(self) -> float:
        if self.evm_reference <= 0 or self.evm_error <= 0:
            return EVM_FLOOR_DB
        return max(EVM_FLOOR_DB, 10 * math.log10(self.evm_error / self.evm_reference))

    @property
    def throughput_bps(self) -> float:
        return self.good_payload_bits / self.duration_s if self.duration_s > 0 else 0.0

    def merge(self, other: "LinkReport") -> "LinkReport":
        if self.snr_db is None or other.snr_db is None or self.snr_db == other.snr_db:
            snr = self.snr_db if self.snr_db is not None else other.snr_db
        else:
            snr = None
        return LinkReport(
            self.bit_errors + other.bit_errors,
            self.bits_total + other.bits_total,
            self.block_errors + other.block_errors,
            self.blocks_total + other.blocks_total,
            self.good_payload_bits + other.good_payload_bits,
            self.duration_s + other.duration_s,
            self.evm_error + other.evm_error,
            self.evm_reference + other.evm_reference,
            snr,
        )


def accumulate_ber(report: LinkReport, errors: int, total: int) -> LinkReport:
    if total <= 0:
        raise ValueError("total must be positive")
    if not 0 <= errors <= total:
        raise ValueError("errors must lie in [0, total]")
    return replace(report, bit_errors=report.bit_errors + errors,
                   bits_total=report.bits_total + total)


def accumulate_bler(report: LinkReport, crc_pass: bool, payload_bits: int = 0) -> LinkReport:
    """Count one block; ``payload_bits`` of passing blocks feed the throughput."""
    return replace(
        report,
        blocks_total=report.blocks_total + 1,
        block_errors=report.block_errors + (0 if crc_pass else 1),
        good_payload_bits=report.good_payload_bits + (payload_bits if crc_pass else 0),
    )


def evm_terms(reference, received) -> tuple[float, float]:
    ref = np.asarray(reference, dtype=np.complex128)
    rx = np.asarray(received, dtype=np.complex128)
    if ref.shape != rx.shape:
        raise ValueError(f"length mismatch: {ref.size} vs {rx.size}")
    return float(np.sum(np.abs(rx - ref) ** 2)), float(np.sum(np.abs(ref) ** 2))


def evm(reference, received) -> float:
    """``10 log10(sum|rx-ref|^2 / sum|ref|^2)``, floored at -120 dB."""
    err, ref = evm_terms(reference, received)
    if ref <= 0:
        raise ValueError("reference has zero power")
    if err <= 0:
        return EVM_FLOOR_DB
    return max(EVM_FLOOR_DB, 10 * math.log10(err / ref))


CSV_HEADER = "snr_db,ber,bler,evm_db,throughput_bps,bits,blocks"


def format_csv_row(report: LinkReport) -> str:
    snr = "" if report.snr_db is None else f"{report.snr_db:g}"
    return (f"{snr},{report.ber:.6e},{report.bler:.6e},{report.evm_db:.3f},"
            f"{report.throughput_bps:.3f},{report.bits_total},{report.blocks_total}")
