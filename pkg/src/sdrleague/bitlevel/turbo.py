"""Rate-1/3 LTE turbo code: encoder and iterative max-log-MAP decoder.

Both constituent encoders are 8-state recursive systematic convolutional
codes with feedback polynomial 1 + D^2 + D^3 and feedforward 1 + D + D^3.
Each trellis is terminated on its own; the twelve tail bits are spread over
the three output streams in the LTE order, four per stream.

LLR convention: positive means bit 0 is more likely.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numba import njit

from .qpp import QppParams

N_STATES = 8
MEMORY = 3
NEG_INF = -1e30


def _build_trellis():
    # state = (s1 << 2) | (s2 << 1) | s3, s1 the most recent register bit
    next_state = np.zeros((N_STATES, 2), dtype=np.int64)
    parity = np.zeros((N_STATES, 2), dtype=np.int64)
    tail_input = np.zeros(N_STATES, dtype=np.int64)
    for s in range(N_STATES):
        s1, s2, s3 = (s >> 2) & 1, (s >> 1) & 1, s & 1
        for u in (0, 1):
            a = u ^ s2 ^ s3
            parity[s, u] = a ^ s1 ^ s3
            next_state[s, u] = (a << 2) | (s1 << 1) | s2
        tail_input[s] = s2 ^ s3
    return next_state, parity, tail_input


NEXT_STATE, PARITY, TAIL_INPUT = _build_trellis()


@dataclass(frozen=True)
class CodedBlock:
    """Three K+4 bit streams; the last four bits of each are trellis tails."""

    systematic: np.ndarray
    parity1: np.ndarray
    parity2: np.ndarray

    @property
    def K(self) -> int:
        return self.systematic.size - 4

    def concatenated(self) -> np.ndarray:
        return np.concatenate([self.systematic, self.parity1, self.parity2])

    @classmethod
    def from_concatenated(cls, bits) -> "CodedBlock":
        bits = np.asarray(bits)
        if bits.size % 3 or bits.size < 3 * 5:
            raise ValueError(f"length {bits.size} is not 3K+12")
        n = bits.size // 3
        return cls(bits[:n], bits[n:2 * n], bits[2 * n:])


def _rsc_encode(bits):
    """Return (parity[K], tail_x[3], tail_z[3]) for one constituent encoder."""
    state = 0
    par = np.empty(bits.size, dtype=np.uint8)
    for k, u in enumerate(bits):
        par[k] = PARITY[state, u]
        state = NEXT_STATE[state, u]
    tx = np.empty(MEMORY, dtype=np.uint8)
    tz = np.empty(MEMORY, dtype=np.uint8)
    for j in range(MEMORY):
        u = TAIL_INPUT[state]
        tx[j] = u
        tz[j] = PARITY[state, u]
        state = NEXT_STATE[state, u]
    assert state == 0
    return par, tx, tz


def _tails_to_streams(tx1, tz1, tx2, tz2):
    d0 = np.array([tx1[0], tz1[1], tx2[0], tz2[1]], dtype=np.uint8)
    d1 = np.array([tz1[0], tx1[2], tz2[0], tx2[2]], dtype=np.uint8)
    d2 = np.array([tx1[1], tz1[2], tx2[1], tz2[2]], dtype=np.uint8)
    return d0, d1, d2


def _streams_to_tails(d0, d1, d2):
    tx1 = np.array([d0[0], d2[0], d1[1]])
    tz1 = np.array([d1[0], d0[1], d2[1]])
    tx2 = np.array([d0[2], d2[2], d1[3]])
    tz2 = np.array([d1[2], d0[3], d2[3]])
    return tx1, tz1, tx2, tz2


def turbo_encode(params: QppParams, bits) -> CodedBlock:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size != params.K:
        raise ValueError(f"turbo_encode expects {params.K} bits, got {bits.size}")
    p1, tx1, tz1 = _rsc_encode(bits)
    p2, tx2, tz2 = _rsc_encode(bits[params.perm])
    d0, d1, d2 = _tails_to_streams(tx1, tz1, tx2, tz2)
    return CodedBlock(np.concatenate([bits, d0]), np.concatenate([p1, d1]),
                      np.concatenate([p2, d2]))


@njit(cache=True)
def _max_log_map(l_sys, l_par, l_apriori, next_state, parity, tail_input):
    """Extrinsic LLRs of the K information bits for one terminated trellis.

    ``l_sys``/``l_par`` hold K+3 channel LLRs (info then tail); ``l_apriori``
    holds K values.
    """
    n_steps = l_sys.size
    K = l_apriori.size
    alpha = np.full((n_steps + 1, 8), -1e30)
    beta = np.full((n_steps + 1, 8), -1e30)
    alpha[0, 0] = 0.0
    beta[n_steps, 0] = 0.0
    gamma = np.zeros((n_steps, 8, 2))
    for k in range(n_steps):
        la = l_apriori[k] if k < K else 0.0
        for s in range(8):
            for u in range(2):
                gamma[k, s, u] = 0.5 * ((1 - 2 * u) * (l_sys[k] + la)
                                        + (1 - 2 * parity[s, u]) * l_par[k])

    for k in range(n_steps):
        for s in range(8):
            a = alpha[k, s]
            if a <= -1e29:
                continue
            if k < K:
                for u in range(2):
                    ns = next_state[s, u]
                    m = a + gamma[k, s, u]
                    if m > alpha[k + 1, ns]:
                        alpha[k + 1, ns] = m
            else:
                u = tail_input[s]
                ns = next_state[s, u]
                m = a + gamma[k, s, u]
                if m > alpha[k + 1, ns]:
                    alpha[k + 1, ns] = m
        top = alpha[k + 1].max()
        for s in range(8):
            alpha[k + 1, s] -= top

    for k in range(n_steps - 1, -1, -1):
        for s in range(8):
            best = -1e30
            if k < K:
                for u in range(2):
                    b = beta[k + 1, next_state[s, u]]
                    if b > -1e29:
                        m = b + gamma[k, s, u]
                        if m > best:
                            best = m
            else:
                u = tail_input[s]
                b = beta[k + 1, next_state[s, u]]
                if b > -1e29:
                    best = b + gamma[k, s, u]
            beta[k, s] = best
        top = beta[k].max()
        for s in range(8):
            if beta[k, s] > -1e29:
                beta[k, s] -= top

    ext = np.empty(K)
    for k in range(K):
        m0 = -1e30
        m1 = -1e30
        for s in range(8):
            a = alpha[k, s]
            if a <= -1e29:
                continue
            for u in range(2):
                b = beta[k + 1, next_state[s, u]]
                if b <= -1e29:
                    continue
                m = a + gamma[k, s, u] + b
                if u == 0:
                    if m > m0:
                        m0 = m
                elif m > m1:
                    m1 = m
        ext[k] = (m0 - m1) - l_sys[k] - l_apriori[k]
    return ext


def turbo_decode(params: QppParams, llrs, max_iterations: int = 8,
                 extrinsic_scale: float = 0.75,
                 crc_check: Callable[[np.ndarray], bool] | None = None):
    """Iterative max-log-MAP decoding of a 3K+12 LLR block.

    ``crc_check`` receives the hard-decided K bits after every iteration and
    stops decoding as soon as it returns True.

    Returns
    -------
    bits : ndarray of uint8, length K
    iterations : int
        Number of iterations actually run.
    """
    K = params.K
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.size != 3 * K + 12:
        raise ValueError(f"turbo_decode expects {3 * K + 12} LLRs, got {llrs.size}")
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    n = K + 4
    d0, d1, d2 = llrs[:n], llrs[n:2 * n], llrs[2 * n:]
    tx1, tz1, tx2, tz2 = _streams_to_tails(d0[K:], d1[K:], d2[K:])
    sys1 = np.concatenate([d0[:K], tx1])
    par1 = np.concatenate([d1[:K], tz1])
    sys2 = np.concatenate([d0[:K][params.perm], tx2])
    par2 = np.concatenate([d2[:K], tz2])

    apriori1 = np.zeros(K)
    bits = np.zeros(K, dtype=np.uint8)
    it = 0
    for it in range(1, max_iterations + 1):
        ext1 = _max_log_map(sys1, par1, apriori1, NEXT_STATE, PARITY, TAIL_INPUT)
        apriori2 = extrinsic_scale * ext1[params.perm]
        ext2 = _max_log_map(sys2, par2, apriori2, NEXT_STATE, PARITY, TAIL_INPUT)
        ext2_deint = np.empty(K)
        ext2_deint[params.perm] = ext2
        apriori1 = extrinsic_scale * ext2_deint
        posterior = d0[:K] + ext1 + ext2_deint
        bits = (posterior < 0).astype(np.uint8)
        if crc_check is not None and crc_check(bits):
            break
    return bits, it
