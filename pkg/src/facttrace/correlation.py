"""Log-frequency binning and the per-bin recall correlation.

Facts are bucketed into equal-width bins of log10 frequency; each occupied
bin contributes its empirical probability of correct recall. The Pearson
coefficient is computed over those bin aggregates, not raw points, pairing
bin-center log frequency with per-bin recall probability. Zero frequencies
have no log, so they live in a separate bucket off the axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import stats as _scipy_stats

from .errors import DegenerateInput, InvalidBinCount
from .threshold import LabeledFrequency


@dataclass(frozen=True)
class FrequencyBin:
    lo: float
    hi: float
    center: float
    count: int
    p_correct: float | None


@dataclass(frozen=True)
class BinnedCurve:
    edges: tuple[float, ...]
    bins: tuple[FrequencyBin, ...]
    zero_count: int
    zero_p_correct: float | None

    def occupied(self) -> list[FrequencyBin]:
        return [b for b in self.bins if b.count > 0]

    def to_rows(self) -> list[tuple]:
        return [(b.lo, b.hi, b.count, b.p_correct) for b in self.bins]


def bin_curve(data: list[LabeledFrequency], bins: int = 20) -> BinnedCurve:
    """Bucket points into equal-width log10-frequency bins.

    Interior bins are half-open [lo, hi); the last bin includes its right
    edge. Points with freq == 0 go to the zero bucket only. When every
    positive frequency is identical the range is widened by 0.5 on each
    side so the edges stay strictly increasing.
    """
    if bins < 1:
        raise InvalidBinCount(f"bins must be >= 1, got {bins}")
    zero = [d for d in data if d.freq == 0]
    positive = [d for d in data if d.freq > 0]
    zero_count = len(zero)
    zero_p = sum(d.correct for d in zero) / zero_count if zero_count else None
    if not positive:
        return BinnedCurve(edges=(), bins=(), zero_count=zero_count, zero_p_correct=zero_p)

    logs = [math.log10(d.freq) for d in positive]
    lo = min(logs)
    hi = max(logs)
    if lo == hi:
        lo -= 0.5
        hi += 0.5
    width = hi - lo
    edges = tuple(lo + width * i / bins for i in range(bins + 1))

    counts = [0] * bins
    ones = [0] * bins
    for d, x in zip(positive, logs):
        idx = int((x - lo) / width * bins)
        if idx >= bins:
            idx = bins - 1
        counts[idx] += 1
        ones[idx] += 1 if d.correct else 0

    out_bins = tuple(
        FrequencyBin(
            lo=edges[i],
            hi=edges[i + 1],
            center=(edges[i] + edges[i + 1]) / 2,
            count=counts[i],
            p_correct=ones[i] / counts[i] if counts[i] else None,
        )
        for i in range(bins)
    )
    return BinnedCurve(edges=edges, bins=out_bins, zero_count=zero_count, zero_p_correct=zero_p)


def pearson_log_recall(curve: BinnedCurve) -> tuple[float, float]:
    """Pearson r between bin-center log frequency and per-bin recall
    probability, with a two-sided p-value from the t statistic on k - 2
    degrees of freedom."""
    pts = [(b.center, b.p_correct) for b in curve.occupied()]
    k = len(pts)
    if k < 3:
        raise DegenerateInput(f"need at least 3 occupied bins, got {k}")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    if min(ys) == max(ys):
        raise DegenerateInput("per-bin recall probability is constant")
    if min(xs) == max(xs):
        raise DegenerateInput("bin centers are constant")

    mean_x = sum(xs) / k
    mean_y = sum(ys) / k
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    sxx = sum((x - mean_x) ** 2 for x in xs)
    syy = sum((y - mean_y) ** 2 for y in ys)
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))

    if 1.0 - r * r <= 0.0:
        return r, 0.0
    t = r * math.sqrt((k - 2) / (1.0 - r * r))
    p_value = 2.0 * float(_scipy_stats.t.sf(abs(t), k - 2))
    return r, p_value
