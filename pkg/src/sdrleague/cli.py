"""Command-line interface.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from pathlib import Path

from . import analytics, champions
from .channel import WavFormatError, wav_read
from .metrics import CSV_HEADER, format_csv_row
from .numerology import DEFAULT_NUMEROLOGY, NumerologyError
from .pipeline import (
    GOLDEN_WAVEFORMS,
    PipelineRuntimeError,
    PipelineValidationError,
    RunConfig,
    WaveformSyntaxError,
    golden_text,
    parse_waveform,
    run,
)
from .pipeline.grammar import parse_value

log = logging.getLogger("sdrleague")

QUALIFY_SNR_DB = 10.0
QUALIFY_SUBFRAMES = 100
EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def load_waveform(spec: str):
    path = Path(spec)
    if path.is_file():
        text = path.read_text()
    elif spec in GOLDEN_WAVEFORMS:
        text = golden_text(spec)
    else:
        raise UsageError(f"waveform {spec!r}: no such file or bundled waveform "
                         f"({', '.join(GOLDEN_WAVEFORMS)})")
    try:
        return parse_waveform(text)
    except WaveformSyntaxError as exc:
        raise UsageError(f"{spec}: {exc}") from exc


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = parse_value(value.strip())
    return out


def _run(graph, config):
    try:
        return run(graph, config)
    except PipelineValidationError as exc:
        raise UsageError("; ".join(exc.diagnostics)) from exc


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ commands

def cmd_simulate(args) -> int:
    graph = load_waveform(args.waveform)
    config = RunConfig(seed=args.seed, n_subframes=args.subframes, snr_db=args.snr,
                       overrides=parse_overrides(args.set))
    report = _run(graph, config)
    _emit(args, f"{CSV_HEADER}\n{format_csv_row(report)}\n")
    return EXIT_OK


def sweep_points(start: float, stop: float, step: float) -> list[float]:
    if not step > 0:
        raise UsageError("--snr-step must be positive")
    if start > stop:
        raise UsageError("--snr-from must not exceed --snr-to")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(n)]


def cmd_sweep(args) -> int:
    points = sweep_points(args.snr_from, args.snr_to, args.snr_step)
    graph = load_waveform(args.waveform)
    overrides = parse_overrides(args.set)
    reports = [_run(graph, RunConfig(args.seed, args.subframes, snr, overrides)) for snr in points]
    _emit(args, CSV_HEADER + "\n" + "".join(format_csv_row(r) + "\n" for r in reports))
    if args.plot:
        from . import plotting

        plotting.ber_curve(points, [r.ber for r in reports], args.plot,
                           title=f"{Path(args.waveform).stem}: BER vs SNR")
    return EXIT_OK


def cmd_qualify(args) -> int:
    graph = load_waveform(args.waveform)
    config = RunConfig(seed=args.seed, n_subframes=QUALIFY_SUBFRAMES, snr_db=QUALIFY_SNR_DB,
                       overrides=parse_overrides(args.set))
    report = _run(graph, config)
    mark = champions.qualification_mark(report.ber)
    _emit(args, f"snr_db,ber,mark\n{QUALIFY_SNR_DB:g},{report.ber:.6e},{mark:.1f}\n")
    return EXIT_OK


def cmd_txwav(args) -> int:
    graph = load_waveform("tx_wav")
    overrides = {"mcs": args.mcs, "wav.path": str(args.out)}
    n = args.frames * DEFAULT_NUMEROLOGY.subframes_per_frame
    _run(graph, RunConfig(seed=args.payload_seed, n_subframes=n, overrides=overrides))
    samples = wav_read(args.out).size
    sys.stdout.write(f"path,frames,subframes,samples\n{args.out},{args.frames},{n},{samples}\n")
    return EXIT_OK


def cmd_rxwav(args) -> int:
    try:
        audio = wav_read(args.inp)
    except FileNotFoundError as exc:
        raise UsageError(f"{args.inp}: no such file") from exc
    except WavFormatError as exc:
        raise UsageError(str(exc)) from exc
    num = DEFAULT_NUMEROLOGY
    if args.frames is not None:
        n = args.frames * num.subframes_per_frame
    else:
        n = audio.size // (num.subframe_length * num.interp_factor)
    if n < 1:
        raise RuntimeError("capture shorter than one subframe: no PSS detected")
    graph = load_waveform("rx_wav")
    overrides = {"mcs": args.mcs, "wav.path": str(args.inp)}
    report = _run(graph, RunConfig(seed=args.payload_seed, n_subframes=n, overrides=overrides))
    _emit(args, f"{CSV_HEADER}\n{format_csv_row(report)}\n")
    return EXIT_OK


RESULT_FIELDS = ["team_id", "round", "medium", "ber", "snr_db", "distance_m", "throughput_bps"]


def _opt_float(text: str, lineno: int, name: str):
    text = (text or "").strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"line {lineno}: {name}={text!r} is not a number") from None


def read_results(path):
    """Parse the results CSV into (qualification BERs, per-round results)."""
    qualification: dict[str, float] = {}
    results: dict[tuple[str, str], champions.ScenarioResult] = {}
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != RESULT_FIELDS:
            raise UsageError(f"results header must be {','.join(RESULT_FIELDS)}")
        for lineno, row in enumerate(reader, 2):
            team, rnd = row["team_id"].strip(), row["round"].strip()
            ber = _opt_float(row["ber"], lineno, "ber")
            if not team or ber is None:
                raise UsageError(f"line {lineno}: team_id and ber are required")
            if rnd == champions.QUALIFICATION_ROUND:
                qualification[team] = ber
                continue
            if rnd not in champions.PLAYOFF_ROUNDS:
                raise UsageError(f"line {lineno}: unknown round {rnd!r}")
            try:
                results[(team, rnd)] = champions.ScenarioResult(
                    team, row["medium"].strip(), ber,
                    snr_db=_opt_float(row["snr_db"], lineno, "snr_db"),
                    distance_m=_opt_float(row["distance_m"], lineno, "distance_m"),
                    throughput_bps=_opt_float(row["throughput_bps"], lineno, "throughput_bps") or 0.0)
            except ValueError as exc:
                raise UsageError(f"line {lineno}: {exc}") from exc
    return qualification, results


def cmd_bracket(args) -> int:
    qualification, results = read_results(args.results)
    try:
        outcome = champions.run_bracket(qualification, results)
    except champions.ScoringError as exc:
        raise UsageError(str(exc)) from exc
    n = len(qualification)
    buf = io.StringIO()
    buf.write("team_id,placement,ps,cs,final_mark\n")
    for team in sorted(outcome.placements, key=outcome.placements.get):
        ps = max(champions.performance_score(r) for (t, _), r in results.items() if t == team)
        rank = outcome.placements[team]
        cs = champions.champions_score(rank, n)
        fm = champions.final_mark(cs, ps, args.alpha, args.beta)
        buf.write(f"{team},{rank},{ps:g},{cs:g},{fm:g}\n")
    _emit(args, buf.getvalue())
    sys.stderr.write(champions.render_tree(outcome) + "\n")
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        records = analytics.read_grades(args.grades)
        table = analytics.correlation_table(records)
        impacts = analytics.impact_values(records)
        fit = analytics.normal_fit([v for _, v in impacts], args.bins)
    except analytics.AnalyticsError as exc:
        raise UsageError(str(exc)) from exc
    buf = io.StringIO()
    buf.write("a,b,n,r,slope,offset\n")
    for s in table:
        buf.write(f"{s.a},{s.b},{s.n},{s.r:.6f},{s.slope:.6f},{s.offset:.6f}\n")
    fields = ["ex1", "ex2", "ex_aver", "lab1", "lab2", "lab3"]
    buf.write("\nfield," + ",".join(fields) + "\n")
    for a in fields:
        cells = []
        for b in fields:
            x, y = analytics.complete_pairs(records, a, b)
            try:
                cells.append(f"{analytics.pearson(x, y):.6f}")
            except analytics.AnalyticsError:
                cells.append("")
        buf.write(a + "," + ",".join(cells) + "\n")
    buf.write("\nbin_lo,bin_hi,count\n")
    for lo, hi, c in zip(fit.edges[:-1], fit.edges[1:], fit.counts):
        buf.write(f"{lo:.6f},{hi:.6f},{c}\n")
    buf.write(f"\nimpact_mean,impact_std,n\n{fit.mean:.6f},{fit.std:.6f},{len(impacts)}\n")
    _emit(args, buf.getvalue())
    if args.plot:
        from . import plotting

        x, y = analytics.complete_pairs(records, "ex_aver", "lab3")
        trend = next(s for s in table if (s.a, s.b) == ("ex_aver", "lab3"))
        plotting.grades_overview(x, y, trend.slope, trend.offset, [v for _, v in impacts], fit,
                                 args.plot)
    return EXIT_OK


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    common.add_argument("--verbose", "-v", action="store_true")
    common.add_argument("--out", help="write the CSV here instead of stdout")

    parser = argparse.ArgumentParser(prog="sdrleague", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def waveform_cmd(name, func, help_text, default_waveform=None):
        p = sub.add_parser(name, parents=[common], help=help_text)
        if default_waveform:
            p.add_argument("--waveform", default=default_waveform,
                           help=f"waveform file or bundled name (default {default_waveform})")
        else:
            p.add_argument("--waveform", required=True, help="waveform file or bundled name")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="parameter override, 'param' or 'module.param' (repeatable)")
        p.set_defaults(func=func)
        return p

    p = waveform_cmd("simulate", cmd_simulate, "run a waveform once and print its link report")
    p.add_argument("--subframes", type=int, default=100)
    p.add_argument("--snr", type=float, help="SNR in dB for every channel_awgn module")

    p = waveform_cmd("sweep", cmd_sweep, "BER/BLER over a range of SNR values")
    p.add_argument("--snr-from", type=float, required=True)
    p.add_argument("--snr-to", type=float, required=True)
    p.add_argument("--snr-step", type=float, required=True)
    p.add_argument("--subframes", type=int, default=100)
    p.add_argument("--plot", help="also write a BER curve figure (PNG) to this path")

    waveform_cmd("qualify", cmd_qualify, "qualifying round: AWGN 10 dB, 100 subframes",
                 default_waveform="full_awgn")

    p = sub.add_parser("txwav", parents=[common], help="transmit PRBS frames into a WAV file")
    p.add_argument("--payload-seed", type=int, default=0)
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--mcs", type=int, default=0)
    p.set_defaults(func=cmd_txwav)

    p = sub.add_parser("rxwav", parents=[common], help="receive a WAV capture and score it")
    p.add_argument("--in", dest="inp", required=True, help="WAV capture (PCM16 mono 48 kHz)")
    p.add_argument("--payload-seed", type=int, default=0)
    p.add_argument("--mcs", type=int, default=0)
    p.add_argument("--frames", type=int, help="frames sent (default: inferred from file length)")
    p.set_defaults(func=cmd_rxwav)

    p = sub.add_parser("bracket", parents=[common], help="score a playoff from results CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.5)
    p.set_defaults(func=cmd_bracket)

    p = sub.add_parser("analyze", parents=[common], help="grade correlations and impact fit")
    p.add_argument("--grades", required=True)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--plot", help="also write scatter/histogram figure (PNG) to this path")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "txwav" and not args.out:
        parser.error("txwav requires --out <file.wav>")
    if getattr(args, "subframes", 1) < 1:
        parser.error("--subframes must be >= 1")
    try:
        return args.func(args)
    except (UsageError, NumerologyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineRuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
