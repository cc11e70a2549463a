"""Circular-buffer rate matching over the concatenated turbo streams."""

from __future__ import annotations

import numpy as np

from .turbo import CodedBlock


def rate_match(coded: CodedBlock, e_bits: int) -> np.ndarray:
    """Read ``e_bits`` cyclically from ``[systematic | parity1 | parity2]``."""
    if e_bits < 1:
        raise ValueError("E must be >= 1")
    buf = coded.concatenated()
    return buf[np.arange(e_bits) % buf.size]


def rate_dematch(llrs, K: int) -> np.ndarray:
    """Fold received LLRs back onto the 3K+12 mother-code positions.

    Repeated positions are summed; punctured positions stay at zero.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.size < 1:
        raise ValueError("E must be >= 1")
    n = 3 * K + 12
    return np.bincount(np.arange(llrs.size) % n, weights=llrs, minlength=n)
