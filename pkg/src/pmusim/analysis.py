"""Comparison statistics between platform RMS readings and a reference meter.

For each comparison-set size n, n platform records are drawn at random
(seeded, without replacement), paired with the reference reading nearest in
time, and summarized by mean, ``s`` and the mean percentage difference.
"""

from __future__ import annotations

import csv
import math
import random
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

from .capture import CaptureRecord
from .waveform import WaveformSpec, analytic_rms

DEFAULT_SIZES = (10, 20, 30)
# half of one 50 Hz RMS cycle
DEFAULT_PAIR_TOLERANCE_US = 10_000

REPORT_HEADER = ("waveform", "n", "ref_mean", "platform_mean", "ref_s", "platform_s", "pct_diff")


class InsufficientData(ValueError):
    pass


def mean(values: Sequence[float]) -> float:
    if len(values) == 0:
        raise ValueError("mean of an empty series")
    return math.fsum(values) / len(values)


def std_error(values: Sequence[float]) -> float:
    """``s = sqrt(sum((v - mean)**2) / (n - 1))``, the column labelled s in the reports."""
    n = len(values)
    if n < 2:
        raise ValueError(f"s needs at least 2 values, got {n}")
    m = mean(values)
    return math.sqrt(math.fsum((v - m) ** 2 for v in values) / (n - 1))


def mean_pct_diff(ref_mean: float, platform_mean: float) -> float:
    """``|ref - platform| / ref``, in percent."""
    if ref_mean == 0:
        raise ValueError("reference mean must be non-zero")
    return abs(ref_mean - platform_mean) / abs(ref_mean) * 100.0


def reference_meter(spec: WaveformSpec, timestamps: Iterable[int], bias: float = 0.0) -> list[tuple[int, float]]:
    """Analytic stand-in for the reference PMU: stationary RMS at each timestamp.

    ``bias`` scales every reading by ``1 + bias``.
    """
    value = analytic_rms(spec) * (1.0 + bias)
    return [(int(t), value) for t in timestamps]


@dataclass(frozen=True)
class ReportRow:
    n: int
    ref_mean: float
    platform_mean: float
    ref_s: float
    platform_s: float
    pct_diff: float


@dataclass
class ComparisonReport:
    waveform: str
    rows: list[ReportRow] = field(default_factory=list)

    def row(self, n: int) -> ReportRow:
        for r in self.rows:
            if r.n == n:
                return r
        raise KeyError(n)

    def write_csv(self, out: TextIO, header: bool = True) -> None:
        w = csv.writer(out, lineterminator="\n")
        if header:
            w.writerow(REPORT_HEADER)
        for r in self.rows:
            w.writerow((self.waveform, r.n, f"{r.ref_mean:.7f}", f"{r.platform_mean:.7f}",
                        f"{r.ref_s:.4e}", f"{r.platform_s:.4e}", f"{r.pct_diff:.5f}"))


def pair_by_time(records: Sequence[CaptureRecord], reference: Sequence[tuple[int, float]],
                 tolerance_us: int = DEFAULT_PAIR_TOLERANCE_US) -> list[tuple[float, float]]:
    """(platform RMS, reference) pairs matched by nearest timestamp within tolerance.

    Records with no reference reading within ``tolerance_us`` are dropped.
    """
    ref = sorted(reference)
    ref_t = [t for t, _ in ref]
    pairs = []
    for rec in records:
        i = bisect_left(ref_t, rec.unix_us)
        best = None
        for j in (i - 1, i):
            if 0 <= j < len(ref_t):
                gap = abs(ref_t[j] - rec.unix_us)
                if gap <= tolerance_us and (best is None or gap < best[0]):
                    best = (gap, ref[j][1])
        if best is not None:
            pairs.append((rec.rms_v, best[1]))
    return pairs


def build_report(records: Sequence[CaptureRecord], reference: Sequence[tuple[int, float]],
                 sizes: Sequence[int] = DEFAULT_SIZES, seed: int = 0, waveform: str = "",
                 tolerance_us: int = DEFAULT_PAIR_TOLERANCE_US) -> ComparisonReport:
    if not sizes:
        raise ValueError("at least one comparison-set size is required")
    if min(sizes) < 2:
        raise ValueError(f"comparison sets need n >= 2, got {min(sizes)}")
    pairs = pair_by_time(records, reference, tolerance_us)
    if len(pairs) < max(sizes):
        raise InsufficientData(f"need {max(sizes)} paired records, have {len(pairs)}")
    rng = random.Random(seed)
    report = ComparisonReport(waveform)
    for n in sizes:
        chosen = rng.sample(pairs, n)
        platform = [p for p, _ in chosen]
        ref = [r for _, r in chosen]
        ref_mean, platform_mean = mean(ref), mean(platform)
        report.rows.append(ReportRow(n, ref_mean, platform_mean, std_error(ref), std_error(platform),
                                     mean_pct_diff(ref_mean, platform_mean)))
    return report
