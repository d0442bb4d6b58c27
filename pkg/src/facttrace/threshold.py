"""Frequency-threshold recall prediction.

The rule says a fact is recalled iff its corpus frequency is at least t.
Accuracy as a function of t is a step function that can only change at
observed frequencies, so the fit searches {0} | {observed f} | {max f + 1}
and reports the smallest candidate achieving the maximum accuracy.

False negatives of the fitted rule (correct recall despite frequency below
the threshold) are kept as the SCLFP id set; true negatives below the
threshold (wrong, as the low frequency suggests) are the UWLFP id set.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDataset, InvalidFraction, UnknownId
from .fileio import dump_json
from .rng import Xoshiro256StarStar, sample_without_replacement


@dataclass(frozen=True)
class LabeledFrequency:
    fact_id: int
    freq: int
    correct: bool


@dataclass(frozen=True)
class ClassifierResult:
    threshold: int
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int
    sclfp_ids: tuple[int, ...]
    uwlfp_ids: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "accuracy": self.accuracy,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "sclfp_ids": list(self.sclfp_ids),
            "uwlfp_ids": list(self.uwlfp_ids),
        }


def classify(freq: int, threshold: int) -> int:
    """1 iff freq >= threshold (boundary inclusive)."""
    return 1 if freq >= threshold else 0


def confusion_at(data: list[LabeledFrequency], threshold: int) -> tuple[int, int, int, int]:
    """(tp, fp, tn, fn) of the threshold rule against the labels."""
    tp = fp = tn = fn = 0
    for d in data:
        if d.freq >= threshold:
            if d.correct:
                tp += 1
            else:
                fp += 1
        else:
            if d.correct:
                fn += 1
            else:
                tn += 1
    return tp, fp, tn, fn


def _fit_sorted(f_sorted: np.ndarray, y_sorted: np.ndarray) -> tuple[int, float]:
    """Best threshold over the candidate grid; ties go to the smallest."""
    n = len(f_sorted)
    candidates = np.unique(np.concatenate([[0], f_sorted, [f_sorted[-1] + 1]]))
    below = np.searchsorted(f_sorted, candidates, side="left")
    ones_cum = np.concatenate([[0], np.cumsum(y_sorted)])
    ones_below = ones_cum[below]
    total_ones = int(ones_cum[-1])
    correct = (below - ones_below) + (total_ones - ones_below)
    best = int(np.argmax(correct))
    return int(candidates[best]), int(correct[best]) / n


def optimal_threshold(data: list[LabeledFrequency]) -> ClassifierResult:
    """Fit the accuracy-maximizing threshold and report its confusion
    breakdown plus the low-frequency id partitions."""
    if not data:
        raise EmptyDataset("cannot fit a threshold on an empty dataset")
    freqs = np.array([d.freq for d in data], dtype=np.int64)
    labels = np.array([1 if d.correct else 0 for d in data], dtype=np.int64)
    order = np.argsort(freqs, kind="stable")
    t_star, _ = _fit_sorted(freqs[order], labels[order])
    tp, fp, tn, fn = confusion_at(data, t_star)
    sclfp = tuple(sorted(d.fact_id for d in data if d.freq < t_star and d.correct))
    uwlfp = tuple(sorted(d.fact_id for d in data if d.freq < t_star and not d.correct))
    return ClassifierResult(
        threshold=t_star,
        accuracy=(tp + tn) / len(data),
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        sclfp_ids=sclfp,
        uwlfp_ids=uwlfp,
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def sensitivity_sweep(
    data: list[LabeledFrequency],
    t_star: int,
    span: float = 0.20,
    step: float = 0.01,
) -> list[tuple[int, float]]:
    """Accuracy at thresholds spanning t_star +/- span in `step` increments.

    Thresholds are rounded to the nearest integer and deduplicated, so a
    small t_star yields fewer than the nominal number of points.
    """
    pct_lo = int(round((1.0 - span) * 100))
    pct_step = int(round(step * 100))
    n_points = int(round(2 * span / step)) + 1
    thresholds = sorted(
        {
            _round_half_up(t_star * (pct_lo + k * pct_step) / 100.0)
            for k in range(n_points)
        }
    )
    out = []
    n = len(data)
    for t in thresholds:
        tp, fp, tn, fn = confusion_at(data, t)
        out.append((t, (tp + tn) / n))
    return out


def _nearest_rank(sorted_vals: list, numer: int, denom: int):
    """Nearest-rank percentile at numer/denom via exact integer ceiling."""
    n = len(sorted_vals)
    rank = max(1, -(-(n * numer) // denom))
    return sorted_vals[rank - 1]


@dataclass(frozen=True)
class StatSummary:
    mean: float
    p2_5: float
    p97_5: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "p2_5": self.p2_5, "p97_5": self.p97_5}


@dataclass(frozen=True)
class BootstrapSummary:
    runs: int
    sample_fraction: float
    seed: int
    threshold: StatSummary
    accuracy: StatSummary
    fp: StatSummary
    fn: StatSummary

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "sample_fraction": self.sample_fraction,
            "seed": self.seed,
            "statistics": {
                "threshold": self.threshold.to_dict(),
                "accuracy": self.accuracy.to_dict(),
                "fp": self.fp.to_dict(),
                "fn": self.fn.to_dict(),
            },
        }

    def to_json(self) -> str:
        return dump_json(self.to_dict())


def _summarize(values: list) -> StatSummary:
    ordered = sorted(values)
    return StatSummary(
        mean=sum(values) / len(values),
        p2_5=_nearest_rank(ordered, 1, 40),
        p97_5=_nearest_rank(ordered, 39, 40),
    )


def bootstrap(
    data: list[LabeledFrequency],
    runs: int = 5000,
    sample_fraction: float = 0.9,
    seed: int = 0,
) -> BootstrapSummary:
    """Refit the threshold on seeded subsamples, evaluate on the full data.

    Each run draws floor(N * sample_fraction) points without replacement
    from its own substream (see rng module), fits the threshold on the
    subsample, and records that threshold's accuracy/fp/fn over the full
    dataset. The same seed reproduces the summary bit for bit.
    """
    n = len(data)
    if n < 2:
        raise EmptyDataset("bootstrap needs at least 2 points")
    if runs < 1:
        raise ValueError("runs must be positive")
    if not 0 < sample_fraction <= 1:
        raise InvalidFraction(f"sample_fraction must be in (0, 1], got {sample_fraction}")
    k = int(n * sample_fraction)
    if k < 1:
        raise InvalidFraction(f"sample_fraction {sample_fraction} leaves an empty subsample")

    freqs = np.array([d.freq for d in data], dtype=np.int64)
    labels = np.array([1 if d.correct else 0 for d in data], dtype=np.int64)
    full_order = np.argsort(freqs, kind="stable")
    f_full = freqs[full_order]
    y_full = labels[full_order]
    ones_cum = np.concatenate([[0], np.cumsum(y_full)])
    total_ones = int(ones_cum[-1])

    thresholds: list[int] = []
    accuracies: list[float] = []
    fps: list[int] = []
    fns: list[int] = []
    for run in range(runs):
        rng = Xoshiro256StarStar.substream(seed, run)
        idx = sample_without_replacement(rng, n, k)
        sub_f = freqs[idx]
        sub_y = labels[idx]
        sub_order = np.argsort(sub_f, kind="stable")
        t, _ = _fit_sorted(sub_f[sub_order], sub_y[sub_order])

        below = int(np.searchsorted(f_full, t, side="left"))
        ones_below = int(ones_cum[below])
        tn = below - ones_below
        fn = ones_below
        tp = total_ones - ones_below
        fp = (n - below) - tp
        thresholds.append(t)
        accuracies.append((tp + tn) / n)
        fps.append(fp)
        fns.append(fn)

    return BootstrapSummary(
        runs=runs,
        sample_fraction=sample_fraction,
        seed=seed,
        threshold=_summarize(thresholds),
        accuracy=_summarize(accuracies),
        fp=_summarize(fps),
        fn=_summarize(fns),
    )


def sclfp_relation_distribution(
    result: ClassifierResult,
    relation_of: dict[int, str],
) -> dict[str, int]:
    """Group the below-threshold-but-correct ids by relation label."""
    hist: dict[str, int] = {}
    for fid in result.sclfp_ids:
        if fid not in relation_of:
            raise UnknownId(f"fact_id {fid} has no relation entry")
        rel = relation_of[fid]
        hist[rel] = hist.get(rel, 0) + 1
    return dict(sorted(hist.items()))


def set_overlap(a, b) -> tuple[float | None, float | None]:
    """(jaccard, containment_in_a); None where the denominator is empty."""
    a = set(a)
    b = set(b)
    union = a | b
    jaccard = len(a & b) / len(union) if union else None
    containment = len(a & b) / len(a) if a else None
    return jaccard, containment


def load_labeled_csv(path) -> list[LabeledFrequency]:
    """Read `fact_id,freq,correct` rows; correct accepts 0/1/true/false."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            correct = row["correct"].strip().lower()
            out.append(
                LabeledFrequency(
                    fact_id=int(row["fact_id"]),
                    freq=int(row["freq"]),
                    correct=correct in ("1", "true"),
                )
            )
    return out
