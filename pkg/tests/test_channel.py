import wave

import numpy as np
import pytest

from sdrleague.channel import (
    ChannelSpec,
    WavFormatError,
    apply_awgn,
    apply_ideal,
    wav_read,
    wav_write,
)


def unit_complex(rng, n):
    return np.exp(2j * np.pi * rng.random(n))


class TestIdeal:
    def test_identity(self, rng):
        x = rng.standard_normal(10)
        np.testing.assert_array_equal(apply_ideal(x), x)

    def test_empty(self):
        assert apply_ideal(np.array([])).size == 0


class TestAwgn:
    def test_unit_power_zero_db(self, rng):
        x = unit_complex(rng, 100_000)
        noise = apply_awgn(x, 0.0, seed=1) - x
        assert np.mean(np.abs(noise) ** 2) == pytest.approx(1.0, rel=0.02)
        assert np.var(noise.real) == pytest.approx(0.5, rel=0.03)

    def test_empirical_snr(self, rng):
        x = rng.standard_normal(100_000) * 3.0
        y = apply_awgn(x, 10.0, seed=2)
        snr = 10 * np.log10(np.mean(x**2) / np.mean((y - x) ** 2))
        assert snr == pytest.approx(10.0, abs=0.2)

    def test_scale_free(self, rng):
        x = unit_complex(rng, 1000)
        np.testing.assert_allclose(apply_awgn(5 * x, 3.0, 9) - 5 * x, 5 * (apply_awgn(x, 3.0, 9) - x))

    def test_seeded(self, rng):
        x = unit_complex(rng, 1000)
        np.testing.assert_array_equal(apply_awgn(x, 5, 3), apply_awgn(x, 5, 3))

    def test_independent_seeds(self, rng):
        x = np.ones(100_000)
        a = apply_awgn(x, 0, 1) - x
        b = apply_awgn(x, 0, 2) - x
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.01

    def test_infinite_snr_disallowed(self):
        with pytest.raises(ValueError):
            apply_awgn(np.ones(4), float("inf"), 0)

    def test_empty(self):
        with pytest.raises(ValueError):
            apply_awgn(np.array([]), 10, 0)


class TestChannelSpec:
    def test_awgn_needs_snr(self):
        with pytest.raises(ValueError):
            ChannelSpec("awgn")

    def test_wav_needs_path(self):
        with pytest.raises(ValueError):
            ChannelSpec("wav_in")

    def test_ok(self):
        assert ChannelSpec("awgn", snr_db=3).snr_db == 3


class TestWav:
    def test_roundtrip(self, tmp_path, rng):
        x = rng.uniform(-1, 1, 48000)
        wav_write(x, tmp_path / "a.wav")
        assert np.max(np.abs(wav_read(tmp_path / "a.wav") - x)) <= 3.1e-5

    def test_header(self, tmp_path):
        wav_write(np.zeros(10), tmp_path / "h.wav")
        with wave.open(str(tmp_path / "h.wav")) as w:
            assert (w.getnchannels(), w.getsampwidth(), w.getframerate(), w.getcomptype()) == \
                (1, 2, 48000, "NONE")
        raw = (tmp_path / "h.wav").read_bytes()
        assert raw[:4] == b"RIFF" and raw[8:12] == b"WAVE"

    def test_clip_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="clip"):
            wav_write(np.array([0.0, 1.5]), tmp_path / "c.wav")

    def test_wrong_rate(self, tmp_path):
        with wave.open(str(tmp_path / "r.wav"), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(44100)
            w.writeframes(b"\x00\x00" * 10)
        with pytest.raises(WavFormatError, match="44100"):
            wav_read(tmp_path / "r.wav")

    def test_stereo(self, tmp_path):
        with wave.open(str(tmp_path / "s.wav"), "wb") as w:
            w.setnchannels(2)
            w.setsampwidth(2)
            w.setframerate(48000)
            w.writeframes(b"\x00\x00" * 10)
        with pytest.raises(WavFormatError, match="mono"):
            wav_read(tmp_path / "s.wav")

    def test_malformed(self, tmp_path):
        (tmp_path / "bad.wav").write_bytes(b"not a wav file at all")
        with pytest.raises(WavFormatError):
            wav_read(tmp_path / "bad.wav")
