"""Competition scoring: qualification marks, performance and champions scores,
single-elimination playoffs, final and individual marks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum


class ScoringError(ValueError):
    pass


class Medium(str, Enum):
    AUDIO = "Audio"
    CABLE = "Cable"
    SIMULATION = "Simulation"


AUDIO_DISTANCES = (0.25, 1.0)
QUALIFICATION_ROUND = "qualification"
PLAYOFF_ROUNDS = ("round16", "quarter", "semi", "final")
MATCH_MINUTES = 20
QUALIFICATION_MINUTES = 15

# (lower BER bound inclusive, upper exclusive, mark)
QUALIFICATION_TABLE = (
    (0.0, 0.1, 10.0),
    (0.1, 0.2, 8.0),
    (0.2, 0.3, 4.0),
    (0.3, 0.4, 1.0),
)


@dataclass(frozen=True)
class PsRow:
    medium: Medium
    ber_lo: float
    ber_hi: float
    score: float
    distance_m: float | None = None  # Audio/Cable
    snr_db: float | None = None  # Simulation: highest SNR the row accepts


def _sim_rows():
    return tuple(PsRow(Medium.SIMULATION, 0.0, 0.1, 7.0 - 0.5 * (snr + 1), snr_db=float(snr))
                 for snr in range(-1, 13))


PERFORMANCE_TABLE = (
    PsRow(Medium.AUDIO, 0.0, 0.1, 10.0, distance_m=1.0),
    PsRow(Medium.AUDIO, 0.1, 0.2, 9.5, distance_m=1.0),
    PsRow(Medium.AUDIO, 0.0, 0.1, 9.0, distance_m=0.25),
    PsRow(Medium.AUDIO, 0.1, 0.2, 8.5, distance_m=0.25),
    PsRow(Medium.CABLE, 0.0, 0.1, 8.0, distance_m=1.0),
    PsRow(Medium.CABLE, 0.1, 0.2, 7.5, distance_m=1.0),
) + _sim_rows()

CHAMPIONS_TABLE = {1: 10.0, 2: 8.0, 3: 7.0, 4: 6.0, 5: 5.0, 6: 4.0, 7: 3.0, 8: 2.0}


def _check_ber(ber: float) -> None:
    if not (0.0 <= ber <= 1.0):
        raise ScoringError(f"BER {ber} outside [0, 1]")


def qualification_mark(ber: float) -> float:
    """Qualifying-round mark; bands are lower-inclusive and BER >= 0.4 scores 0."""
    _check_ber(ber)
    for lo, hi, mark in QUALIFICATION_TABLE:
        if lo <= ber < hi:
            return mark
    return 0.0


@dataclass(frozen=True)
class ScenarioResult:
    team_id: str
    medium: Medium
    ber: float
    snr_db: float | None = None
    distance_m: float | None = None
    throughput_bps: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "medium", Medium(self.medium))
        _check_ber(self.ber)
        if self.medium is Medium.SIMULATION and (self.snr_db is None or math.isnan(self.snr_db)):
            raise ScoringError(f"{self.team_id}: Simulation results need snr_db")
        if self.medium is Medium.AUDIO and self.distance_m not in AUDIO_DISTANCES:
            raise ScoringError(f"{self.team_id}: Audio distance must be one of {AUDIO_DISTANCES} m")
        if self.throughput_bps < 0:
            raise ScoringError(f"{self.team_id}: negative throughput")


def _row_matches(row: PsRow, r: ScenarioResult) -> bool:
    if row.medium is not r.medium or not (row.ber_lo <= r.ber < row.ber_hi):
        return False
    if r.medium is Medium.AUDIO:
        # a link demonstrated at the longer distance also covers the shorter one
        return r.distance_m >= row.distance_m
    if r.medium is Medium.SIMULATION:
        return r.snr_db <= row.snr_db
    return True  # cable rows are keyed by the 1 m reference cable only


def performance_score(result: ScenarioResult) -> float:
    """Highest score among the table rows the result satisfies, else 0."""
    return max((row.score for row in PERFORMANCE_TABLE if _row_matches(row, result)), default=0.0)


@dataclass(frozen=True)
class MatchRecord:
    round: str
    team_a: str
    team_b: str
    winner: str
    loser: str
    reason: str  # "PS", "BER", "throughput" or "arbitrary-tiebreak"
    duration_min: int = MATCH_MINUTES


def _ranking_key(r: ScenarioResult):
    return (-performance_score(r), r.ber, -r.throughput_bps)


def run_match(a: ScenarioResult, b: ScenarioResult, round_name: str = "") -> MatchRecord:
    """Decide a playoff match: PS, then lower BER, then higher throughput."""
    if a.team_id == b.team_id:
        raise ScoringError(f"team {a.team_id} cannot play itself")
    pa, pb = performance_score(a), performance_score(b)
    if pa != pb:
        first, reason = pa > pb, "PS"
    elif a.ber != b.ber:
        first, reason = a.ber < b.ber, "BER"
    elif a.throughput_bps != b.throughput_bps:
        first, reason = a.throughput_bps > b.throughput_bps, "throughput"
    else:
        first, reason = a.team_id < b.team_id, "arbitrary-tiebreak"
    win, lose = (a, b) if first else (b, a)
    return MatchRecord(round_name, a.team_id, b.team_id, win.team_id, lose.team_id, reason)


@dataclass
class BracketOutcome:
    placements: dict[str, int]  # team -> rank (1 = champion)
    matches: list[MatchRecord] = field(default_factory=list)
    seeds: list[str] = field(default_factory=list)

    def label(self, team: str) -> str:
        rank = self.placements[team]
        if rank == 1:
            return "Champion"
        if rank == 2:
            return "Finalist"
        if rank <= 4:
            return f"SemiFinalist({rank})"
        if rank <= 8:
            return f"QuarterFinalist({rank})"
        return f"RoundOf16({rank})"


def bracket_order(n: int) -> list[int]:
    """Standard seeding positions (1-based) so that seeds 1 and 2 meet last."""
    order = [1]
    while len(order) < n:
        size = 2 * len(order)
        order = [x for s in order for x in (s, size + 1 - s)]
    return order


def playoff_rounds(n_teams: int) -> tuple[str, ...]:
    depth = int(math.log2(n_teams))
    return PLAYOFF_ROUNDS[len(PLAYOFF_ROUNDS) - depth:]


def run_bracket(qualification: dict[str, float],
                results: dict[tuple[str, str], ScenarioResult]) -> BracketOutcome:
    """Play a single-elimination bracket.

    Parameters
    ----------
    qualification : team id -> qualifying-round BER (seeding, lowest first)
    results : (team id, round name) -> that team's result in that round;
        round names come from :func:`playoff_rounds`.
    """
    n = len(qualification)
    if n not in (2, 4, 8, 16):
        raise ScoringError(f"{n} teams: only fields of 2, 4, 8 or 16 are supported (no byes)")
    for ber in qualification.values():
        _check_ber(ber)
    seeds = sorted(qualification, key=lambda t: (qualification[t], t))
    alive = [seeds[i - 1] for i in bracket_order(n)]
    matches: list[MatchRecord] = []
    placements: dict[str, int] = {}
    for rnd in playoff_rounds(n):
        losers = []
        nxt = []
        for a, b in zip(alive[0::2], alive[1::2]):
            try:
                ra, rb = results[(a, rnd)], results[(b, rnd)]
            except KeyError as exc:
                raise ScoringError(f"missing result for team {exc.args[0][0]} in round {rnd}") from None
            rec = run_match(ra, rb, rnd)
            matches.append(rec)
            nxt.append(rec.winner)
            losers.append(results[(rec.loser, rnd)])
        first_rank = len(alive) // 2 + 1
        for i, r in enumerate(sorted(losers, key=lambda r: (_ranking_key(r), r.team_id))):
            placements[r.team_id] = first_rank + i
        alive = nxt
    placements[alive[0]] = 1
    return BracketOutcome(placements, matches, seeds)


def champions_score(rank: int, n_teams: int = 8) -> float:
    """Table score for a final placement; places 9-16 of a 16-team field score 0."""
    if not 1 <= rank <= n_teams:
        raise ScoringError(f"placement {rank} outside 1..{n_teams}")
    if rank > 8:
        if n_teams <= 8:
            raise ScoringError(f"placement {rank} beyond 8th")
        return 0.0
    return CHAMPIONS_TABLE[rank]


def final_mark(cs: float, ps: float, alpha: float, beta: float) -> float:
    if alpha < 0 or beta < 0:
        raise ScoringError("alpha and beta must be non-negative")
    if not math.isclose(alpha + beta, 1.0):
        warnings.warn(f"alpha + beta = {alpha + beta:g}, not 1", stacklevel=2)
    return alpha * cs + beta * ps


def individual_mark(final: float, peer_assessments) -> float:
    """FinalMark scaled by the team's mean peer assessment, clipped to [0, 10]."""
    peers = list(peer_assessments)
    if not peers:
        raise ScoringError("at least one peer assessment is required")
    if any(not 0.0 <= p <= 1.0 for p in peers):
        raise ScoringError("peer assessments must lie in [0, 1]")
    return min(10.0, max(0.0, final * sum(peers) / len(peers)))


def render_tree(outcome: BracketOutcome) -> str:
    """Plain-text listing of the bracket, round by round."""
    lines = []
    current = None
    for m in outcome.matches:
        if m.round != current:
            current = m.round
            lines.append(f"[{current}]")
        lines.append(f"  {m.team_a} vs {m.team_b} -> {m.winner} ({m.reason})")
    champion = min(outcome.placements, key=outcome.placements.get)
    lines.append(f"Champion: {champion}")
    return "\n".join(lines)
