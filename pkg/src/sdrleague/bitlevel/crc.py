"""CRC-24A attach/check (generator 0x1864CFB)."""

from __future__ import annotations

import numpy as np
from numba import njit

CRC24A_POLY = 0x1864CFB
CRC_LENGTH = 24


@njit(cache=True)
def _crc24_remainder(bits):
    reg = 0
    for b in bits:
        fb = ((reg >> 23) & 1) ^ b
        reg = (reg << 1) & 0xFFFFFF
        if fb:
            reg ^= 0x864CFB
    return reg


def crc24_remainder(bits) -> int:
    """24-bit CRC register value of ``bits`` (zero initial state, MSB first)."""
    return int(_crc24_remainder(np.asarray(bits, dtype=np.uint8)))


def _to_bits(value: int) -> np.ndarray:
    return np.array([(value >> (CRC_LENGTH - 1 - i)) & 1 for i in range(CRC_LENGTH)],
                    dtype=np.uint8)


def crc24_attach(payload) -> np.ndarray:
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.size == 0:
        raise ValueError("cannot attach CRC to an empty payload")
    return np.concatenate([payload, _to_bits(crc24_remainder(payload))])


def crc24_check(bits) -> tuple[np.ndarray, bool]:
    """Split off the trailing CRC and report whether it matches."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size <= CRC_LENGTH:
        raise ValueError(f"need more than {CRC_LENGTH} bits to check a CRC")
    # remainder over payload+crc is zero iff the appended CRC matches
    return bits[:-CRC_LENGTH], crc24_remainder(bits) == 0
