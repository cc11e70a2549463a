"""Maximal-length LFSR bit source."""

from __future__ import annotations

import numpy as np
from numba import njit

# order -> (tap_a, tap_b) for primitive trinomials x^order + x^tap + 1
PRIMITIVE_TAPS = {
    7: 6,
    9: 5,
    15: 14,
    23: 18,
    31: 28,
}
DEFAULT_ORDER = 23


@njit(cache=True)
def _lfsr_run(state, order, tap, n_bits, out):
    mask = (1 << order) - 1
    for i in range(n_bits):
        bit = ((state >> (order - 1)) ^ (state >> (tap - 1))) & 1
        out[i] = bit
        state = ((state << 1) | bit) & mask
    return state


class Prbs:
    """Stateful Fibonacci LFSR; successive :meth:`take` calls continue the stream."""

    def __init__(self, seed: int = 1, order: int = DEFAULT_ORDER):
        if order not in PRIMITIVE_TAPS:
            raise ValueError(f"unsupported PRBS order {order}; choose from {sorted(PRIMITIVE_TAPS)}")
        self.order = order
        self.tap = PRIMITIVE_TAPS[order]
        # any nonzero register is on the single maximal cycle
        self.state = int(seed) % ((1 << order) - 1) + 1

    @property
    def period(self) -> int:
        return (1 << self.order) - 1

    def take(self, n_bits: int) -> np.ndarray:
        if n_bits < 0:
            raise ValueError("n_bits must be non-negative")
        out = np.empty(n_bits, dtype=np.uint8)
        self.state = int(_lfsr_run(np.int64(self.state), self.order, self.tap, n_bits, out))
        return out


def prbs_generate(seed: int, n_bits: int, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Return ``n_bits`` of the PRBS stream started from ``seed``."""
    return Prbs(seed, order).take(n_bits)
