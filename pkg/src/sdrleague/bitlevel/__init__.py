"""Bit-domain processing: PRBS source, CRC-24A, QPP interleaver, turbo code, rate matching."""

import numpy as np

from .crc import CRC_LENGTH, crc24_attach, crc24_check, crc24_remainder
from .prbs import Prbs, prbs_generate
from .qpp import (QppError, QppParams, default_qpp_table, load_qpp_table, parse_qpp_table,
                  qpp_deinterleave, qpp_interleave)
from .ratematch import rate_dematch, rate_match
from .turbo import CodedBlock, turbo_decode, turbo_encode


def ber_count(reference, received) -> tuple[int, int]:
    """Hamming distance and length of two equal-length bit sequences."""
    reference = np.asarray(reference, dtype=np.uint8)
    received = np.asarray(received, dtype=np.uint8)
    if reference.shape != received.shape:
        raise ValueError(f"length mismatch: {reference.size} vs {received.size}")
    return int(np.count_nonzero(reference != received)), int(reference.size)


__all__ = [
    "CRC_LENGTH", "CodedBlock", "Prbs", "QppError", "QppParams", "ber_count", "crc24_attach",
    "crc24_check", "crc24_remainder", "default_qpp_table", "load_qpp_table", "parse_qpp_table",
    "prbs_generate",
    "qpp_deinterleave", "qpp_interleave", "rate_dematch", "rate_match", "turbo_decode",
    "turbo_encode",
]
