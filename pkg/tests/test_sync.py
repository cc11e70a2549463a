import numpy as np
import pytest

from sdrleague.channel import apply_awgn
from sdrleague.numerology import PSS_SLOT_SYMBOL
from sdrleague.phy import ResourceGrid, grid_map, ofdm_modulate, pss_generate, pss_subcarriers
from sdrleague.sync import (
    SyncError,
    correlate_detect,
    cfo_estimate_cp,
    estimate_gain,
    frame_align,
    frame_start,
    gain_phase_correct,
    normalized_correlation,
    pss_replica,
)

from linkhelpers import receive, transmit


@pytest.fixture(scope="module")
def frame():
    from sdrleague.numerology import DEFAULT_NUMEROLOGY

    return transmit(DEFAULT_NUMEROLOGY, seed=5, n_subframes=10)


class TestReplica:
    @pytest.mark.parametrize("nid2", [0, 1, 2])
    def test_energy_in_pss_bins(self, num, nid2):
        spec = np.fft.fft(pss_replica(nid2, num))
        bins = np.array(num.active_bins())[pss_subcarriers(num)]
        assert np.sum(np.abs(spec[bins]) ** 2) >= 0.99 * np.sum(np.abs(spec) ** 2)

    def test_equals_modulated_pss_symbol(self, num):
        g = grid_map(np.zeros(936), num, 0, nid2=1)
        s = ofdm_modulate(g, num)
        start = num.pss_offset
        np.testing.assert_allclose(s[start:start + 128], pss_replica(1, num), atol=1e-12)

    @pytest.mark.parametrize("nid2", [0, 1, 2])
    def test_central_symmetry(self, num, nid2):
        s = pss_replica(nid2, num)
        np.testing.assert_allclose(s[1:], s[1:][::-1], atol=1e-12)

    def test_invalid(self, num):
        with pytest.raises(ValueError):
            pss_replica(5, num)


class TestCorrelateDetect:
    @pytest.mark.parametrize("nid2", [0, 1, 2])
    def test_embedded_replica(self, num, nid2):
        cap = np.zeros(600, complex)
        cap[100:228] = pss_replica(nid2, num)
        dets = correlate_detect(cap, num)
        assert len(dets) == 1
        assert (dets[0].offset, dets[0].nid2) == (100, nid2)
        assert dets[0].metric == pytest.approx(1.0)

    def test_noise_false_alarm(self, num):
        hits = 0
        for seed in range(100):
            r = np.random.default_rng(seed)
            cap = r.standard_normal(4000) + 1j * r.standard_normal(4000)
            hits += bool(correlate_detect(cap, num, threshold=0.5))
        assert hits <= 1

    def test_scale_invariant(self, num, frame):
        x, _ = frame
        cap = np.concatenate([np.zeros(333), x])
        a = normalized_correlation(cap, pss_replica(0, num))
        b = normalized_correlation(1e-3 * cap, pss_replica(0, num))
        assert np.argmax(a) == np.argmax(b)
        assert a.max() == pytest.approx(b.max(), abs=1e-9)

    def test_metric_range(self, num, rng):
        c = normalized_correlation(rng.standard_normal(1000) + 0j, pss_replica(2, num))
        assert c.min() >= 0 and c.max() <= 1

    def test_sorted_by_metric(self, num, frame):
        x, _ = frame
        cap = np.concatenate([x, 0.5 * x])
        cap = apply_awgn(cap, 5, 3)
        dets = correlate_detect(cap, num)
        assert [d.metric for d in dets] == sorted((d.metric for d in dets), reverse=True)
        assert sorted(d.offset for d in dets)[:2] == [num.pss_offset, num.pss_offset + num.frame_length]

    @pytest.mark.parametrize("nid2", [1, 2])
    def test_reports_nid2(self, num, nid2):
        x, _ = transmit(num, 1, 10, nid2=nid2)
        dets = correlate_detect(apply_awgn(x, 10, 4), num)
        assert dets[0].nid2 == nid2

    def test_short_capture(self, num):
        with pytest.raises(SyncError):
            correlate_detect(np.zeros(50), num)

    def test_bad_threshold(self, num):
        with pytest.raises(ValueError):
            correlate_detect(np.zeros(500), num, threshold=0)


class TestFrameAlign:
    @pytest.mark.parametrize("delay", [0, 1, 777, 4999])
    def test_recovers_delay(self, num, frame, delay):
        x, _ = frame
        cap = np.concatenate([np.zeros(delay), x, np.zeros(300)])
        det = correlate_detect(cap, num)[0]
        assert frame_start(det, num) == delay
        chunks = frame_align(cap, det, num)
        np.testing.assert_array_equal(chunks[3], x[3 * 1920:4 * 1920])

    def test_truncated(self, num, frame):
        x, _ = frame
        cap = x[:15000]
        det = correlate_detect(cap, num)[0]
        with pytest.raises(SyncError):
            frame_align(cap, det, num)

    def test_back_to_back(self, num, frame):
        x, _ = frame
        cap = np.concatenate([np.zeros(50), x, x])
        dets = sorted(correlate_detect(cap, num), key=lambda d: d.offset)
        assert len(dets) == 2
        assert len(frame_align(cap, dets[0], num)) == 20
        second = frame_align(cap, dets[1], num)
        assert len(second) == 10
        np.testing.assert_array_equal(second[0], x[:1920])

    @pytest.mark.parametrize("delay", [0, 123, 4321])
    def test_end_to_end_noiseless(self, num, frame, delay):
        x, payloads = frame
        cap = np.concatenate([np.zeros(delay), x, np.zeros(100)])
        errors, total, det = receive(num, cap, payloads)
        assert frame_start(det, num) == delay
        assert errors == 0 and total > 0


def _pss_grid(num, rng, nid2=0):
    g = grid_map(rng.standard_normal(936) + 1j * rng.standard_normal(936), num, 0, nid2)
    return g


class TestGainPhase:
    def test_scalar_inverse(self, num, rng):
        g = _pss_grid(num, rng)
        scaled = ResourceGrid(g.cells * 2 * np.exp(1j * np.pi / 4), 0)
        np.testing.assert_allclose(gain_phase_correct(scaled, num, 0).cells, g.cells, atol=1e-9)

    def test_unity(self, num, rng):
        assert estimate_gain(_pss_grid(num, rng, 2), num, 2) == pytest.approx(1.0)

    def test_no_energy(self, num):
        with pytest.raises(SyncError, match="no PSS energy"):
            gain_phase_correct(ResourceGrid.empty(num), num, 0)

    def test_error_shrinks_with_snr(self, num):
        errs = []
        for snr in (0, 10, 20):
            e = []
            for seed in range(40):
                r = np.random.default_rng(seed)
                cells = np.zeros((72, 14), complex)
                cells[pss_subcarriers(num), PSS_SLOT_SYMBOL] = pss_generate(0).values
                sigma = np.sqrt(10 ** (-snr / 10) / 2)
                cells += sigma * (r.standard_normal(cells.shape) + 1j * r.standard_normal(cells.shape))
                e.append(abs(estimate_gain(ResourceGrid(cells, 0), num, 0) - 1))
            errs.append(np.mean(e))
        assert errs[0] > errs[1] > errs[2]


class TestCfo:
    def test_no_offset(self, num, frame):
        x, _ = frame
        assert abs(cfo_estimate_cp(x, num)) <= 0.5

    @pytest.mark.parametrize("offset_hz", [9.375, -9.375, 30.0])
    def test_injected(self, num, frame, offset_hz):
        x, _ = frame
        n = np.arange(x.size)
        y = x * np.exp(2j * np.pi * offset_hz * n / num.fs_baseband)
        assert cfo_estimate_cp(y, num) == pytest.approx(offset_hz, rel=0.05)

    def test_wraps_beyond_half_spacing(self, num, frame):
        x, _ = frame
        n = np.arange(x.size)
        y = x * np.exp(2j * np.pi * 60.0 * n / num.fs_baseband)
        est = cfo_estimate_cp(y, num)
        assert abs(est) <= num.subcarrier_spacing / 2
        assert est == pytest.approx(60.0 - num.subcarrier_spacing, rel=0.05)

    def test_too_short(self, num):
        with pytest.raises(SyncError):
            cfo_estimate_cp(np.zeros(100), num)
