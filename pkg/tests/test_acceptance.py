"""Acceptance criteria, each run at its stated tolerance.

Every test prints exactly one PASS/FAIL line (also repeated in the pytest
terminal summary) and then asserts on the same condition.
"""

import itertools
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from sdrleague.analytics import correlation_table, impact, linreg, normal_fit, pearson
from sdrleague.bitlevel import (
    crc24_attach,
    crc24_check,
    default_qpp_table,
    turbo_decode,
    turbo_encode,
)
from sdrleague.champions import (
    ScenarioResult,
    champions_score,
    final_mark,
    individual_mark,
    performance_score,
    qualification_mark,
    run_bracket,
)
from sdrleague.channel import PCM_SCALE, wav_read, wav_write
from sdrleague.frontend import ddc, duc
from sdrleague.metrics import evm
from sdrleague.numerology import DEFAULT_NUMEROLOGY as NUM
from sdrleague.phy import ResourceGrid, ofdm_demodulate, ofdm_modulate
from sdrleague.pipeline import RunConfig, load_golden, run
from sdrleague.sync import correlate_detect, frame_start

from conftest import qfunc, report_criterion
from linkhelpers import receive, transmit
from test_analytics import pearson_oracle, planted_cohort
from test_champions import TABLE_I, TABLE_II, TABLE_III, make_field
from test_cli import write_grades, write_results

QPSK_BITS = 2


def step0_snr(ebn0_db):
    return ebn0_db + 10 * math.log10(QPSK_BITS)


def coded_snr(ebn0_db):
    # payload bits per PDSCH symbol over one frame of the QPSK 1/3 chain
    payload = 9 * (672 - 24) + (624 - 24)
    symbols = 9 * 1008 + 936
    return ebn0_db + 10 * math.log10(payload / symbols)


def test_criterion_1_qualification():
    t0 = time.perf_counter()
    r = run(load_golden("full_awgn"), RunConfig(seed=0, n_subframes=100, snr_db=10.0))
    elapsed = time.perf_counter() - t0
    ok = r.ber < 0.1 and elapsed < 60
    report_criterion(1, ok, f"full chain AWGN 10 dB, 100 subframes: BER={r.ber:.3e} (< 0.1), "
                            f"{elapsed:.1f} s (< 60 s)")
    assert ok


def test_criterion_2_uncoded_theory():
    t0 = time.perf_counter()
    g = load_golden("step0_awgn")
    details, ok = [], True
    for ebn0 in (2.0, 4.0, 6.0):
        r = run(g, RunConfig(seed=0, n_subframes=500, snr_db=step0_snr(ebn0)))
        theory = qfunc(math.sqrt(2 * 10 ** (ebn0 / 10)))
        rel = abs(r.ber - theory) / theory
        checked = theory >= 1e-3
        ok &= r.bits_total >= 100_000 and (not checked or rel <= 0.10)
        details.append(f"{ebn0:g} dB {r.ber:.4e} vs {theory:.4e} ({100 * rel:.1f}%, {r.bits_total} bits)")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    report_criterion(2, ok, "Step-0 QPSK vs Q(sqrt(2Eb/N0)) within 10%: " + "; ".join(details)
                     + f"; {elapsed:.1f} s")
    assert ok


def test_criterion_3_coding_gain():
    ebn0 = 4.0
    coded = run(load_golden("full_awgn"), RunConfig(seed=0, n_subframes=160, snr_db=coded_snr(ebn0)))
    uncoded = run(load_golden("step0_awgn"), RunConfig(seed=0, n_subframes=60, snr_db=step0_snr(ebn0)))
    theory = qfunc(math.sqrt(2 * 10 ** (ebn0 / 10)))
    ok = coded.bits_total >= 100_000 and coded.ber < uncoded.ber and coded.ber < theory
    report_criterion(3, ok, f"Eb/N0 4 dB: coded BER {coded.ber:.3e} ({coded.bits_total} bits) < "
                            f"uncoded {uncoded.ber:.3e} (theory {theory:.4f})")
    assert ok


def test_criterion_4_synchronization():
    frame, payloads = transmit(NUM, seed=21, n_subframes=10)
    rng = np.random.default_rng(4)
    delays = rng.integers(0, 5001, 50)
    exact = clean = 0
    for d in delays:
        cap = np.concatenate([np.zeros(d), frame, np.zeros(64)])
        errors, total, det = receive(NUM, cap, payloads)
        exact += frame_start(det, NUM) == d
        clean += errors == 0 and total > 0

    power = np.mean(np.abs(frame) ** 2)
    sigma = math.sqrt(power / 10 ** (10.0 / 10) / 2)
    hits = 0
    for trial in range(100):
        r = np.random.default_rng(1000 + trial)
        d = int(r.integers(0, 5001))
        cap = np.concatenate([np.zeros(d), frame, np.zeros(64)])
        cap = cap + sigma * (r.standard_normal(cap.size) + 1j * r.standard_normal(cap.size))
        dets = [x for x in correlate_detect(cap, NUM) if frame_start(x, NUM) >= 0]
        hits += bool(dets) and abs(frame_start(min(dets, key=lambda x: x.offset), NUM) - d) <= 1
    ok = exact == 50 and clean == 50 and hits >= 99
    report_criterion(4, ok, f"noiseless delays: {exact}/50 exact offsets, {clean}/50 error-free; "
                            f"10 dB: {hits}/100 within +/-1 sample (need 99)")
    assert ok


def test_criterion_5_scoring():
    failures = []
    for ber, mark in TABLE_I:
        if qualification_mark(ber) != mark:
            failures.append(f"Table I {ber}")
    for medium, ber, snr, dist, score in TABLE_II:
        if performance_score(ScenarioResult("t", medium, ber, snr, dist)) != score:
            failures.append(f"Table II {medium} {snr} {dist}")
    for rank, cs in TABLE_III.items():
        if champions_score(rank) != cs:
            failures.append(f"Table III {rank}")
    if not math.isclose(final_mark(8, 9.5, 0.5, 0.5), 8.75):
        failures.append("final mark")
    if not math.isclose(individual_mark(8.75, [1.0, 0.9, 0.8]), 7.875):
        failures.append("individual mark")
    multisets = set()
    for seed in range(20):
        qual, results = make_field(8, seed)
        out = run_bracket(qual, results)
        multisets.add(tuple(sorted(champions_score(r) for r in out.placements.values())))
    if multisets != {(2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0)}:
        failures.append(f"bracket CS {multisets}")
    ok = not failures
    report_criterion(5, ok, f"Table I ({len(TABLE_I)} cases), Table II ({len(TABLE_II)} rows), "
                            f"Table III (8 rows), marks, 20 brackets CS={{10,8,7,6,5,4,3,2}}"
                            + (f"; mismatches: {failures}" if failures else ""))
    assert ok


def test_criterion_6_fec():
    qpp = default_qpp_table()
    rng = np.random.default_rng(6)
    turbo_bad = [k for k, p in qpp.items()
                 if not np.array_equal(turbo_decode(p, 4.0 * (1.0 - 2.0 * turbo_encode(
                     p, bits := rng.integers(0, 2, k, dtype=np.uint8)).concatenated()))[0], bits)]
    qpp_bad = [k for k, p in qpp.items() if not np.array_equal(np.sort(p.perm), np.arange(k))]

    block = crc24_attach(rng.integers(0, 2, 512, dtype=np.uint8))
    single_missed = 0
    for i in range(block.size):
        bad = block.copy()
        bad[i] ^= 1
        single_missed += crc24_check(bad)[1]
    double_missed = n_double = 0
    for i, j in itertools.combinations(range(block.size), 2):
        bad = block.copy()
        bad[i] ^= 1
        bad[j] ^= 1
        double_missed += crc24_check(bad)[1]
        n_double += 1
    ok = not turbo_bad and not qpp_bad and single_missed == 0 and double_missed == 0
    report_criterion(6, ok, f"turbo noiseless roundtrip {len(qpp) - len(turbo_bad)}/{len(qpp)} K; "
                            f"QPP bijective {len(qpp) - len(qpp_bad)}/{len(qpp)}; CRC missed "
                            f"{single_missed}/{block.size} single, {double_missed}/{n_double} double "
                            f"(512-bit payload)")
    assert ok


def test_criterion_7_transforms_frontend(tmp_path):
    rng = np.random.default_rng(7)
    worst = 0.0
    for sf in range(10):
        g = ResourceGrid(rng.standard_normal((72, 14)) + 1j * rng.standard_normal((72, 14)), sf)
        back = ofdm_demodulate(ofdm_modulate(g, NUM), NUM, sf)[0]
        worst = max(worst, float(np.max(np.abs(back.cells - g.cells))))

    frame, payloads = transmit(NUM, seed=77, n_subframes=10)
    audio = duc(frame, NUM)
    base, delay = ddc(audio, NUM)
    aligned = base[delay:delay + frame.size]
    gain = np.vdot(frame, aligned) / np.vdot(frame, frame)
    loop_evm = evm(frame[200:-200], aligned[200:-200] / gain)
    errors, total, _ = receive(NUM, base, payloads)

    x = rng.uniform(-1, 1, 48000)
    wav_write(x, tmp_path / "rt.wav")
    wav_err = float(np.max(np.abs(wav_read(tmp_path / "rt.wav") - x)))
    ok = worst <= 1e-10 and loop_evm <= -30 and errors == 0 and wav_err <= 1 / PCM_SCALE
    report_criterion(7, ok, f"OFDM roundtrip max error {worst:.2e} (<= 1e-10); DUC->DDC EVM "
                            f"{loop_evm:.1f} dB (<= -30), decoded {errors} errors in {total} bits; "
                            f"WAV roundtrip {wav_err:.2e} (<= 1 LSB)")
    assert ok


def test_criterion_8_analytics():
    rng = np.random.default_rng(8)
    problems = []
    for _ in range(50):
        x, y = rng.standard_normal((2, 20))
        if not math.isclose(pearson(x, y), pearson_oracle(x, y), abs_tol=1e-9):
            problems.append("pearson")
        slope, offset = linreg(x, y)
        if not np.allclose((slope, offset), np.polyfit(x, y, 1)):
            problems.append("linreg")
    if pearson([1, 2, 3, 4], [1, 3, 2, 4]) != pytest.approx(0.8):
        problems.append("pearson example")
    if (impact(5, 5), impact(4, 8), impact(8, 4)) != (0, 2, -2):
        problems.append("impact")
    fit = normal_fit([-1, 1])
    if fit.mean != 0 or not math.isclose(fit.std, math.sqrt(2)):
        problems.append("normal_fit example")

    x = rng.uniform(2, 7, 30)
    slope, offset = linreg(x, 1.2 * x + 1.77 + rng.normal(0, 0.5, 30))
    planted_fit = normal_fit(np.random.default_rng(11).normal(0.02, 0.498, 10_000))
    r = correlation_table(planted_cohort(30, 0.6, 0), [("ex_aver", "lab3")])[0].r
    if abs(slope - 1.2) > 0.2 or abs(offset - 1.77) > 0.8:
        problems.append("planted line")
    if abs(planted_fit.mean - 0.02) > 0.02 or abs(planted_fit.std - 0.498) > 0.02:
        problems.append("planted normal")
    if abs(r - 0.6) > 0.15:
        problems.append("planted correlation")
    ok = not problems
    report_criterion(8, ok, f"oracles on 50 random pairs; planted slope {slope:.2f}/offset {offset:.2f}, "
                            f"normal {planted_fit.mean:.3f}/{planted_fit.std:.3f}, r {r:.3f}"
                            + (f"; failed: {sorted(set(problems))}" if problems else ""))
    assert ok


def _cli(args, cwd):
    proc = subprocess.run([sys.executable, "-m", "sdrleague", *map(str, args)], cwd=cwd,
                          capture_output=True, check=False)
    return proc.returncode, proc.stdout, proc.stderr


def test_criterion_9_determinism(tmp_path):
    results = write_results(tmp_path / "results.csv")
    grades = write_grades(tmp_path / "grades.csv", planted_cohort(30, 0.6, 0))
    invocations = {
        "simulate": ["simulate", "--waveform", "full_awgn", "--subframes", 10, "--snr", 2, "--seed", 5],
        "sweep": ["sweep", "--waveform", "step0_awgn", "--snr-from", 0, "--snr-to", 6,
                  "--snr-step", 3, "--subframes", 5, "--seed", 5],
        "qualify": ["qualify", "--seed", 5],
        "txwav": ["txwav", "--payload-seed", 3, "--frames", 1, "--out", "tx.wav"],
        "rxwav": ["rxwav", "--in", "tx.wav", "--payload-seed", 3],
        "bracket": ["bracket", "--results", results, "--alpha", 0.6, "--beta", 0.4],
        "analyze": ["analyze", "--grades", grades],
    }
    differing = []
    for name, args in invocations.items():
        first = _cli(args, tmp_path)
        wav_first = (tmp_path / "tx.wav").read_bytes() if name == "txwav" else b""
        second = _cli(args, tmp_path)
        wav_second = (tmp_path / "tx.wav").read_bytes() if name == "txwav" else b""
        if first != second or wav_first != wav_second or first[0] != 0:
            differing.append(name)
    ok = not differing
    report_criterion(9, ok, f"{len(invocations) - len(differing)}/{len(invocations)} subcommands "
                            "byte-identical across repeated runs"
                            + (f"; differing or failing: {differing}" if differing else ""))
    assert ok
