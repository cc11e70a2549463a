"""Quadratic permutation polynomial interleaver."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np


class QppError(ValueError):
    pass


@dataclass(frozen=True)
class QppParams:
    K: int
    f1: int
    f2: int
    perm: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.K < 1:
            raise QppError("K must be positive")
        i = np.arange(self.K, dtype=np.int64)
        perm = (self.f1 * i + self.f2 * i * i) % self.K
        if np.unique(perm).size != self.K:
            raise QppError(f"QPP (K={self.K}, f1={self.f1}, f2={self.f2}) is not a permutation")
        perm.setflags(write=False)
        object.__setattr__(self, "perm", perm)


def qpp_interleave(params: QppParams, bits) -> np.ndarray:
    """``out[i] = bits[pi(i)]``."""
    bits = np.asarray(bits)
    if bits.shape[0] != params.K:
        raise QppError(f"expected {params.K} values, got {bits.shape[0]}")
    return bits[params.perm]


def qpp_deinterleave(params: QppParams, bits) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape[0] != params.K:
        raise QppError(f"expected {params.K} values, got {bits.shape[0]}")
    out = np.empty_like(bits)
    out[params.perm] = bits
    return out


def parse_qpp_table(text: str) -> dict[int, QppParams]:
    """Parse ``K f1 f2`` lines; every entry is checked for bijectivity."""
    table = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise QppError(f"line {lineno}: expected 'K f1 f2'")
        try:
            K, f1, f2 = (int(p) for p in parts)
        except ValueError as exc:
            raise QppError(f"line {lineno}: {exc}") from exc
        if K in table:
            raise QppError(f"line {lineno}: duplicate K={K}")
        try:
            table[K] = QppParams(K, f1, f2)
        except QppError as exc:
            raise QppError(f"line {lineno}: {exc}") from exc
    if not table:
        raise QppError("QPP table is empty")
    return dict(sorted(table.items()))


def load_qpp_table(path: str | Path | None = None) -> dict[int, QppParams]:
    if path is None:
        return default_qpp_table()
    return parse_qpp_table(Path(path).read_text())


@lru_cache(maxsize=1)
def default_qpp_table() -> dict[int, QppParams]:
    return parse_qpp_table(resources.files("sdrleague.data").joinpath("qpp.txt").read_text())
