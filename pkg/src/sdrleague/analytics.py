"""Grade analytics: Pearson correlation, trend lines, impact parameter, normal fit."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

GRADE_FIELDS = ("ex1", "ex2", "lab1", "lab2", "lab3")
DEFAULT_PAIRS = (("ex1", "ex2"), ("ex1", "lab3"), ("ex2", "lab3"), ("ex_aver", "lab3"),
                 ("lab1", "lab3"))


class AnalyticsError(ValueError):
    pass


@dataclass(frozen=True)
class GradeRecord:
    student_id: str
    ex1: float | None = None
    ex2: float | None = None
    lab1: float | None = None
    lab2: float | None = None
    lab3: float | None = None

    def __post_init__(self) -> None:
        for name in GRADE_FIELDS:
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 10.0:
                raise AnalyticsError(f"{self.student_id}: {name}={v} outside [0, 10]")

    @property
    def ex_aver(self) -> float | None:
        if self.ex1 is None or self.ex2 is None:
            return None
        return (self.ex1 + self.ex2) / 2

    def get(self, name: str) -> float | None:
        return getattr(self, name)


def _pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise AnalyticsError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise AnalyticsError("need at least two points")
    return x, y


def pearson(x, y) -> float:
    """Pearson product-moment correlation, clamped into [-1, 1]."""
    x, y = _pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise AnalyticsError("undefined correlation: zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def linreg(x, y) -> tuple[float, float]:
    """Least-squares ``(slope, offset)`` of ``y = slope * x + offset``."""
    x, y = _pair(x, y)
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0:
        raise AnalyticsError("degenerate x: zero variance")
    slope = float(dx @ (y - y.mean())) / sxx
    return slope, float(y.mean() - slope * x.mean())


def impact(lab1: float, lab3: float) -> float:
    """Champions-round grade minus the mean of the LAB1 and LAB3 grades."""
    for v in (lab1, lab3):
        if not 0.0 <= v <= 10.0:
            raise AnalyticsError(f"mark {v} outside [0, 10]")
    return lab3 - (lab1 + lab3) / 2


@dataclass(frozen=True)
class NormalFit:
    mean: float
    std: float
    edges: np.ndarray
    counts: np.ndarray


def normal_fit(values, n_bins: int = 10) -> NormalFit:
    """Sample mean, sample (n-1) std and an equal-width histogram over [min, max]."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise AnalyticsError("need at least two values")
    if n_bins < 1:
        raise AnalyticsError("n_bins must be >= 1")
    counts, edges = np.histogram(v, bins=n_bins, range=(v.min(), v.max()))
    return NormalFit(float(v.mean()), float(v.std(ddof=1)), edges, counts)


def complete_pairs(records, a: str, b: str) -> tuple[np.ndarray, np.ndarray]:
    """Values of ``a`` and ``b`` over students who have both (pairwise deletion)."""
    xs, ys = [], []
    for r in records:
        x, y = r.get(a), r.get(b)
        if x is not None and y is not None:
            xs.append(x)
            ys.append(y)
    return np.array(xs), np.array(ys)


@dataclass(frozen=True)
class PairStats:
    a: str
    b: str
    n: int
    r: float
    slope: float
    offset: float


def correlation_table(records, pairs=DEFAULT_PAIRS) -> list[PairStats]:
    out = []
    for a, b in pairs:
        x, y = complete_pairs(records, a, b)
        if x.size < 2:
            raise AnalyticsError(f"pair {a}-{b}: only {x.size} student(s) with both marks")
        slope, offset = linreg(x, y)
        out.append(PairStats(a, b, int(x.size), pearson(x, y), slope, offset))
    return out


def impact_values(records) -> list[tuple[str, float]]:
    return [(r.student_id, impact(r.lab1, r.lab3)) for r in records
            if r.lab1 is not None and r.lab3 is not None]


def _mark(text: str, field_name: str, lineno: int) -> float | None:
    text = text.strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        raise AnalyticsError(f"line {lineno}: {field_name}={text!r} is not a number") from None


def read_grades(path) -> list[GradeRecord]:
    """Load ``student_id,ex1,ex2,lab1,lab2,lab3`` rows; an empty field is absent."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["student_id", *GRADE_FIELDS]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise AnalyticsError(f"grades header must be {','.join(expected)}")
        records = []
        for lineno, row in enumerate(reader, 2):
            marks = {f: _mark(row[f] or "", f, lineno) for f in GRADE_FIELDS}
            records.append(GradeRecord(row["student_id"].strip(), **marks))
    return records
