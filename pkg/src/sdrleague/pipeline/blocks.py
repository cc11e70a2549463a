"""Module types available to waveform files and their runtime behaviour.

Every block receives immutable :class:`Packet` values on named input ports
and returns ``(output_port, packet)`` pairs. Packets on the bit and symbol
side carry one subframe each; sample streams (audio, post-DDC baseband) may
be split arbitrarily, and blocks that consume them buffer as needed.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import bitlevel, channel, frontend, phy, sync
from ..metrics import LinkReport, accumulate_ber, accumulate_bler
from ..numerology import (
    CRC_LENGTH,
    DEFAULT_MCS_TABLE,
    DEFAULT_NUMEROLOGY,
    Numerology,
    coded_bits_per_subframe,
    get_mcs,
    select_code_block,
)

REQUIRED = object()


@dataclass(frozen=True)
class Packet:
    seq: int
    subframe: int
    data: object
    meta: dict = field(default_factory=dict, compare=False)

    def derive(self, data, **extra) -> "Packet":
        return Packet(self.seq, self.subframe, data, {**self.meta, **extra})


@dataclass(frozen=True)
class ParamSpec:
    kind: type
    default: object = REQUIRED
    check: object = None  # callable(value) -> error message or None
    doc: str = ""

    @property
    def required(self) -> bool:
        return self.default is REQUIRED

    def problem(self, value) -> str | None:
        if self.kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if self.kind is str and not isinstance(value, str):
            value = str(value)
        if not isinstance(value, self.kind) or (self.kind is int and isinstance(value, bool)):
            return f"expected {self.kind.__name__}, got {value!r}"
        return self.check(value) if self.check else None

    def coerce(self, value):
        if self.kind is float:
            return float(value)
        if self.kind is str:
            return str(value)
        return value


@dataclass
class RunContext:
    """Shared, read-only run inputs handed to every block."""

    seed: int = 0
    numerology: Numerology = DEFAULT_NUMEROLOGY
    mcs_table: tuple = DEFAULT_MCS_TABLE
    qpp_table: dict = field(default_factory=bitlevel.default_qpp_table)

    def rng_seed(self, name: str, counter: int) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.seed & 0xFFFFFFFF, zlib.crc32(name.encode()), counter])


def _range(lo=None, hi=None, lo_open=False):
    def check(v):
        if lo is not None and (v <= lo if lo_open else v < lo):
            return f"must be {'>' if lo_open else '>='} {lo}"
        if hi is not None and v > hi:
            return f"must be <= {hi}"
        return None
    return check


def _mcs_check(v):
    return None if 0 <= v < len(DEFAULT_MCS_TABLE) else f"unknown MCS index (0..{len(DEFAULT_MCS_TABLE) - 1})"


def _finite(v):
    return None if math.isfinite(v) else "must be finite"


def _nid2(v):
    return None if v in (0, 1, 2) else "must be 0, 1 or 2"


MCS = ParamSpec(int, 0, _mcs_check, "MCS table index")


class Block:
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    params: dict[str, ParamSpec] = {}

    def __init__(self, name: str, params: dict, ctx: RunContext):
        self.name = name
        self.ctx = ctx
        self.num = ctx.numerology
        self.p = params
        self.setup()

    def setup(self) -> None:
        pass

    def tick(self, t: int) -> list:
        return []

    def receive(self, port: str, pkt: Packet) -> list:
        raise NotImplementedError

    def flush(self) -> list:
        return []

    def mcs(self):
        return get_mcs(self.p["mcs"], self.ctx.mcs_table)


class Map(Block):
    """Single input ``in``, single output ``out``, one packet per packet."""

    inputs = ("in",)
    outputs = ("out",)

    def receive(self, port, pkt):
        return [("out", self.apply(pkt))]

    def apply(self, pkt: Packet) -> Packet:
        raise NotImplementedError


# ---------------------------------------------------------------- bit level

class DataSource(Block):
    outputs = ("out",)
    params = {
        "mcs": MCS,
        "fec": ParamSpec(bool, True, doc="payload sized for CRC+turbo (true) or raw coded bits"),
        "prbs_order": ParamSpec(int, bitlevel.prbs.DEFAULT_ORDER,
                                lambda v: None if v in bitlevel.prbs.PRIMITIVE_TAPS else
                                f"must be one of {sorted(bitlevel.prbs.PRIMITIVE_TAPS)}"),
        "seed": ParamSpec(int, -1, doc="PRBS seed; -1 uses the run seed"),
    }

    def setup(self):
        seed = self.p["seed"] if self.p["seed"] >= 0 else self.ctx.seed
        self.prbs = bitlevel.Prbs(seed, self.p["prbs_order"])

    def payload_bits(self, subframe: int) -> int:
        mcs = self.mcs()
        e = coded_bits_per_subframe(self.num, mcs, subframe)
        if not self.p["fec"]:
            return e
        return select_code_block(e, mcs.target_rate, self.ctx.qpp_table) - CRC_LENGTH

    def tick(self, t):
        sf = t % self.num.subframes_per_frame
        return [("out", Packet(t, sf, self.prbs.take(self.payload_bits(sf))))]


class CrcAttach(Map):
    def apply(self, pkt):
        return pkt.derive(bitlevel.crc24_attach(pkt.data))


class CrcCheck(Map):
    def apply(self, pkt):
        payload, ok = bitlevel.crc24_check(pkt.data)
        return pkt.derive(payload, crc_ok=ok)


class TurboEnc(Map):
    def apply(self, pkt):
        K = len(pkt.data)
        if K not in self.ctx.qpp_table:
            raise ValueError(f"no QPP interleaver for K={K}")
        return pkt.derive(bitlevel.turbo_encode(self.ctx.qpp_table[K], pkt.data).concatenated())


class TurboDec(Map):
    params = {
        "max_iterations": ParamSpec(int, 8, _range(1)),
        "extrinsic_scale": ParamSpec(float, 0.75, _range(0.0, 1.0, lo_open=True)),
        "early_stop": ParamSpec(bool, True, doc="stop once the CRC passes"),
        "enabled": ParamSpec(bool, True, doc="false: hard decisions on systematic LLRs only"),
    }

    def apply(self, pkt):
        llrs = np.asarray(pkt.data)
        K = (llrs.size - 12) // 3
        if 3 * K + 12 != llrs.size or K not in self.ctx.qpp_table:
            raise ValueError(f"{llrs.size} LLRs is not 3K+12 for a supported K")
        if not self.p["enabled"]:
            return pkt.derive((llrs[:K] < 0).astype(np.uint8), iterations=0)
        check = (lambda b: bitlevel.crc24_remainder(b) == 0) if self.p["early_stop"] else None
        bits, its = bitlevel.turbo_decode(self.ctx.qpp_table[K], llrs, self.p["max_iterations"],
                                          self.p["extrinsic_scale"], check)
        return pkt.derive(bits, iterations=its)


class RateMatch(Map):
    params = {"mcs": MCS}

    def apply(self, pkt):
        e = coded_bits_per_subframe(self.num, self.mcs(), pkt.subframe)
        return pkt.derive(bitlevel.rate_match(bitlevel.CodedBlock.from_concatenated(pkt.data), e))


class RateDematch(Map):
    params = {"mcs": MCS}

    def apply(self, pkt):
        K = select_code_block(len(pkt.data), self.mcs().target_rate, self.ctx.qpp_table)
        return pkt.derive(bitlevel.rate_dematch(pkt.data, K))


class DataSink(Block):
    """Compares decoded payloads (``in``) with the source stream (``ref``).

    Blocks are matched by sequence number. References that never receive a
    decoded counterpart count as lost: every bit wrong and the block failed.
    Without a CRC verdict a block fails when any bit is wrong.
    """

    inputs = ("in", "ref")

    def setup(self):
        self.report = LinkReport()
        self.refs: dict[int, Packet] = {}
        self.pending: dict[int, Packet] = {}

    def _score(self, ref: Packet, got: Packet):
        ref_bits, got_bits = np.asarray(ref.data), np.asarray(got.data)
        if ref_bits.size != got_bits.size:
            raise ValueError(f"block {ref.seq}: decoded {got_bits.size} bits, expected {ref_bits.size}")
        errors, total = bitlevel.ber_count(ref_bits, got_bits)
        r = accumulate_ber(self.report, errors, total)
        ok = got.meta.get("crc_ok", errors == 0)
        r = accumulate_bler(r, bool(ok), total)
        err, den = got.meta.get("evm", (0.0, 0.0))
        self.report = r.merge(LinkReport(evm_error=err, evm_reference=den))

    def receive(self, port, pkt):
        if port == "ref":
            self.report = self.report.merge(LinkReport(duration_s=self.num.subframe_duration))
            if pkt.seq in self.pending:
                self._score(pkt, self.pending.pop(pkt.seq))
            else:
                self.refs[pkt.seq] = pkt
        elif pkt.seq in self.refs:
            self._score(self.refs.pop(pkt.seq), pkt)
        else:
            self.pending[pkt.seq] = pkt
        return []

    def flush(self):
        for seq in sorted(self.refs):
            n = int(np.asarray(self.refs[seq].data).size)
            if n:
                self.report = accumulate_bler(accumulate_ber(self.report, n, n), False)
        self.refs.clear()
        return []


# ------------------------------------------------------------- symbol level

class Modulator(Map):
    params = {"mcs": MCS}

    def apply(self, pkt):
        return pkt.derive(phy.modulate(pkt.data, self.mcs().modulation_order))


def _dd_evm(symbols, order):
    ref = phy.modulate(phy.demod_hard(symbols, order), order)
    return (float(np.sum(np.abs(symbols - ref) ** 2)), float(np.sum(np.abs(ref) ** 2)))


class DemodHard(Map):
    params = {"mcs": MCS}

    def apply(self, pkt):
        order = self.mcs().modulation_order
        return pkt.derive(phy.demod_hard(pkt.data, order), evm=_dd_evm(np.asarray(pkt.data), order))


class DemodSoft(Map):
    params = {
        "mcs": MCS,
        "noise_variance": ParamSpec(float, 0.0, _range(0.0),
                                    "0 uses the channel's reported variance, else 1"),
    }

    def apply(self, pkt):
        order = self.mcs().modulation_order
        var = self.p["noise_variance"] or pkt.meta.get("noise_variance", 1.0) or 1.0
        symbols = np.asarray(pkt.data)
        return pkt.derive(phy.demod_soft(symbols, order, var), evm=_dd_evm(symbols, order))


class GridMap(Map):
    params = {"nid2": ParamSpec(int, 0, _nid2)}

    def apply(self, pkt):
        return pkt.derive(phy.grid_map(pkt.data, self.num, pkt.subframe, self.p["nid2"]))


class GridDemap(Map):
    def apply(self, pkt):
        return pkt.derive(phy.grid_demap(pkt.data, self.num, pkt.subframe))


class OfdmMod(Map):
    def apply(self, pkt):
        return pkt.derive(phy.ofdm_modulate(pkt.data, self.num))


class OfdmDemod(Map):
    """One aligned subframe in, one grid out; optional PSS scalar correction.

    With ``scalar_eq`` the gain estimated on subframe 0 is applied to every
    subframe of that frame.
    """

    params = {
        "scalar_eq": ParamSpec(bool, False),
        "nid2": ParamSpec(int, 0, _nid2, "used when no sync block reports one"),
    }

    def setup(self):
        self.gain = None

    def apply(self, pkt):
        grid = phy.ofdm_demodulate(pkt.data, self.num, pkt.subframe)[0]
        if self.p["scalar_eq"]:
            if pkt.subframe == 0:
                self.gain = sync.estimate_gain(grid, self.num, pkt.meta.get("nid2", self.p["nid2"]))
            if self.gain is None:
                raise sync.SyncError("scalar correction needs subframe 0 first")
            grid = phy.ResourceGrid(grid.cells / self.gain, grid.subframe_index)
        return pkt.derive(grid)


# ------------------------------------------------------------ sample level

class Duc(Map):
    params = {
        "gain": ParamSpec(float, 0.25, _range(0.0, lo_open=True), "fixed output scale"),
        "cutoff": ParamSpec(float, frontend.DEFAULT_CUTOFF_HZ, _range(0.0, lo_open=True)),
        "taps": ParamSpec(int, frontend.DEFAULT_TAPS,
                          lambda v: None if v >= 11 and v % 2 else "must be odd and >= 11"),
    }

    def setup(self):
        filt = frontend.design_lowpass(self.p["cutoff"], self.num.fs_audio, self.p["taps"])
        self.up = frontend.Upconverter(self.num, filt, self.p["gain"])
        self.last = None

    def apply(self, pkt):
        self.last = pkt
        return pkt.derive(self.up.process(pkt.data))

    def flush(self):
        if self.last is None:
            return []
        return [("out", Packet(self.last.seq + 1, -1, self.up.flush(), dict(self.last.meta)))]


class Ddc(Map):
    params = {
        "cutoff": Duc.params["cutoff"],
        "taps": Duc.params["taps"],
    }

    def setup(self):
        filt = frontend.design_lowpass(self.p["cutoff"], self.num.fs_audio, self.p["taps"])
        self.down = frontend.Downconverter(self.num, filt)
        self.last = None

    def apply(self, pkt):
        self.last = pkt
        return pkt.derive(self.down.process(pkt.data))

    def flush(self):
        if self.last is None:
            return []
        return [("out", Packet(self.last.seq + 1, -1, self.down.flush(), dict(self.last.meta)))]


class ChannelIdeal(Map):
    def apply(self, pkt):
        return pkt.derive(channel.apply_ideal(pkt.data))


class ChannelAwgn(Map):
    params = {
        "snr_db": ParamSpec(float, REQUIRED, _finite, "SNR against measured burst power"),
    }

    def setup(self):
        self.count = 0

    def apply(self, pkt):
        x = np.asarray(pkt.data)
        seed = self.ctx.rng_seed(self.name, self.count)
        self.count += 1
        if x.size == 0:
            return pkt
        snr = self.p["snr_db"]
        power = float(np.mean(np.abs(x) ** 2))
        return pkt.derive(channel.apply_awgn(x, snr, seed),
                          noise_variance=power / 10 ** (snr / 10) or None)


class WavOut(Map):
    """Writes the stream to a WAV file at the end of the run.

    The output port carries the 16-bit quantized samples, i.e. exactly what a
    reader of the file will see.
    """

    params = {"path": ParamSpec(str, REQUIRED)}

    def setup(self):
        self.codes = []

    def apply(self, pkt):
        codes = channel.quantize_pcm16(pkt.data)
        self.codes.append(codes)
        return pkt.derive(codes.astype(np.float64) / channel.PCM_SCALE)

    def flush(self):
        codes = np.concatenate(self.codes) if self.codes else np.zeros(0, dtype="<i2")
        channel.wav_write(codes.astype(np.float64) / channel.PCM_SCALE, self.p["path"])
        return []


class WavIn(Block):
    """Replays a WAV file, one subframe of audio per tick, the rest at flush."""

    outputs = ("out",)
    params = {"path": ParamSpec(str, REQUIRED)}

    def setup(self):
        self.samples = channel.wav_read(Path(self.p["path"]))
        self.block = self.num.subframe_length * self.num.interp_factor
        self.pos = 0

    def tick(self, t):
        chunk = self.samples[self.pos:self.pos + self.block]
        self.pos += chunk.size
        return [("out", Packet(t, -1, chunk))] if chunk.size else []

    def flush(self):
        rest = self.samples[self.pos:]
        self.pos = self.samples.size
        return [("out", Packet(-1, -1, rest))] if rest.size else []


class PssSync(Block):
    """Acquires frame timing from the first PSS and slices aligned subframes.

    Samples are buffered until one full frame plus a PSS symbol is available
    (or the stream ends); the earliest detection that implies a non-negative
    frame start fixes the timing for the rest of the run.
    """

    inputs = ("in",)
    outputs = ("out",)
    params = {
        "threshold": ParamSpec(float, sync.DEFAULT_THRESHOLD, _range(0.0, 1.0, lo_open=True)),
        "max_search_frames": ParamSpec(int, 3, _range(1)),
    }

    def setup(self):
        self.buf = np.zeros(0, dtype=np.complex128)
        self.start = None
        self.nid2 = None
        self.seq = 0
        self.detection = None

    def _acquire(self, final: bool):
        need = self.num.frame_length + self.num.pss_offset + self.num.n_fft
        if self.buf.size < need and not final:
            return
        found = []
        if self.buf.size >= self.num.n_fft:
            found = [d for d in sync.correlate_detect(self.buf, self.num, self.p["threshold"])
                     if sync.frame_start(d, self.num) >= 0]
        if found:
            best = min(found, key=lambda d: (d.offset, -d.metric))
            self.detection = best
            self.start = sync.frame_start(best, self.num)
            self.nid2 = best.nid2
            self.buf = self.buf[self.start:]
        elif final or self.buf.size > self.p["max_search_frames"] * self.num.frame_length:
            raise sync.SyncError("no PSS detected")

    def _emit(self):
        out = []
        n = self.num.subframe_length
        while self.buf.size >= n:
            sf = self.seq % self.num.subframes_per_frame
            meta = {"nid2": self.nid2, "frame_start": self.start}
            out.append(("out", Packet(self.seq, sf, self.buf[:n].copy(), meta)))
            self.buf = self.buf[n:]
            self.seq += 1
        return out

    def receive(self, port, pkt):
        self.buf = np.concatenate([self.buf, np.asarray(pkt.data, dtype=np.complex128)])
        if self.start is None:
            self._acquire(final=False)
        return self._emit() if self.start is not None else []

    def flush(self):
        if self.start is None:
            self._acquire(final=True)
        return self._emit()


REGISTRY: dict[str, type[Block]] = {
    "data_source": DataSource,
    "crc_attach": CrcAttach,
    "turbo_enc": TurboEnc,
    "rate_match": RateMatch,
    "modulator": Modulator,
    "grid_map": GridMap,
    "ofdm_mod": OfdmMod,
    "duc": Duc,
    "channel_ideal": ChannelIdeal,
    "channel_awgn": ChannelAwgn,
    "wav_out": WavOut,
    "wav_in": WavIn,
    "ddc": Ddc,
    "pss_sync": PssSync,
    "ofdm_demod": OfdmDemod,
    "grid_demap": GridDemap,
    "demod_soft": DemodSoft,
    "demod_hard": DemodHard,
    "rate_dematch": RateDematch,
    "turbo_dec": TurboDec,
    "crc_check": CrcCheck,
    "data_sink": DataSink,
}
