"""Multi-label bipartition measures.

Conventions for empty denominators: example-based measures count a row with
empty true and predicted label sets as fully correct (1); micro and macro
F-measures give 0 when there is nothing to retrieve.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

METRICS = (
    "example_accuracy",
    "example_f1",
    "hamming_loss",
    "micro_f1",
    "macro_f1",
    "subset_accuracy",
)
LOWER_IS_BETTER = {"hamming_loss", "runtime_seconds"}


def _pair(L, Y) -> tuple[np.ndarray, np.ndarray]:
    L = np.asarray(L).astype(bool)
    Y = np.asarray(Y).astype(bool)
    if L.shape != Y.shape or L.ndim != 2:
        raise ValueError(f"label and prediction shapes differ: {L.shape} vs {Y.shape}")
    return L, Y


def hamming_loss(L, Y) -> float:
    L, Y = _pair(L, Y)
    return float(np.mean(L != Y))


def example_accuracy(L, Y) -> float:
    """Mean Jaccard index of true and predicted label sets."""
    L, Y = _pair(L, Y)
    inter = (L & Y).sum(axis=1)
    union = (L | Y).sum(axis=1)
    return float(np.mean(np.where(union == 0, 1.0, inter / np.maximum(union, 1))))


def example_f1(L, Y) -> float:
    L, Y = _pair(L, Y)
    inter = (L & Y).sum(axis=1)
    size = L.sum(axis=1) + Y.sum(axis=1)
    return float(np.mean(np.where(size == 0, 1.0, 2.0 * inter / np.maximum(size, 1))))


def subset_accuracy(L, Y) -> float:
    L, Y = _pair(L, Y)
    return float(np.mean(np.all(L == Y, axis=1)))


class ConfusionAccumulator:
    """Per-label confusion counts plus example-level sums, mergeable across batches."""

    def __init__(self, l: int):
        self.l = l
        self.tp = np.zeros(l, dtype=np.int64)
        self.fp = np.zeros(l, dtype=np.int64)
        self.tn = np.zeros(l, dtype=np.int64)
        self.fn = np.zeros(l, dtype=np.int64)
        self.intersection = 0
        self.union = 0
        self.true_size = 0
        self.pred_size = 0
        self.instances = 0

    def update(self, L, Y) -> "ConfusionAccumulator":
        L, Y = _pair(L, Y)
        if L.shape[1] != self.l:
            raise ValueError(f"expected {self.l} labels, got {L.shape[1]}")
        self.tp += (L & Y).sum(axis=0)
        self.fp += (~L & Y).sum(axis=0)
        self.tn += (~L & ~Y).sum(axis=0)
        self.fn += (L & ~Y).sum(axis=0)
        self.intersection += int((L & Y).sum())
        self.union += int((L | Y).sum())
        self.true_size += int(L.sum())
        self.pred_size += int(Y.sum())
        self.instances += L.shape[0]
        return self

    def merge(self, other: "ConfusionAccumulator") -> "ConfusionAccumulator":
        if other.l != self.l:
            raise ValueError("cannot merge accumulators over different label counts")
        out = ConfusionAccumulator(self.l)
        for name in ("tp", "fp", "tn", "fn"):
            setattr(out, name, getattr(self, name) + getattr(other, name))
        for name in ("intersection", "union", "true_size", "pred_size", "instances"):
            setattr(out, name, getattr(self, name) + getattr(other, name))
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConfusionAccumulator) or other.l != self.l:
            return NotImplemented
        return all(
            np.array_equal(getattr(self, n), getattr(other, n))
            for n in ("tp", "fp", "tn", "fn", "intersection", "union",
                      "true_size", "pred_size", "instances")
        )


def micro_f1(acc: ConfusionAccumulator) -> float:
    tp, fp, fn = acc.tp.sum(), acc.fp.sum(), acc.fn.sum()
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom else 0.0


def macro_f1(acc: ConfusionAccumulator) -> float:
    denom = 2 * acc.tp + acc.fp + acc.fn
    per_label = np.where(denom == 0, 0.0, 2 * acc.tp / np.maximum(denom, 1))
    return float(per_label.mean())


@dataclass
class MetricsReport:
    example_accuracy: float
    example_f1: float
    hamming_loss: float
    micro_f1: float
    macro_f1: float
    subset_accuracy: float
    runtime_seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(**{f.name: d[f.name] for f in fields(cls) if f.name in d})


def evaluate(L, Y, runtime_seconds: float = 0.0) -> MetricsReport:
    """All six measures for one test batch."""
    L, Y = _pair(L, Y)
    acc = ConfusionAccumulator(L.shape[1]).update(L, Y)
    return MetricsReport(
        example_accuracy=example_accuracy(L, Y),
        example_f1=example_f1(L, Y),
        hamming_loss=hamming_loss(L, Y),
        micro_f1=micro_f1(acc),
        macro_f1=macro_f1(acc),
        subset_accuracy=subset_accuracy(L, Y),
        runtime_seconds=runtime_seconds,
    )


def mean_report(reports: list[MetricsReport], runtime_seconds: float = 0.0) -> MetricsReport:
    """Equal-weight average of per-batch reports (runtime given separately)."""
    if not reports:
        return MetricsReport(*(math.nan,) * len(METRICS), runtime_seconds=runtime_seconds)
    values = {m: float(np.mean([getattr(r, m) for r in reports])) for m in METRICS}
    return MetricsReport(**values, runtime_seconds=runtime_seconds)


def mean_std(values) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single value)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return math.nan, math.nan
    std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return float(np.mean(v)), std


def rank(values, lower_is_better: bool = False) -> list[int]:
    """Competition ranks, 1 = best, ties share the minimum rank."""
    v = np.asarray(values, dtype=np.float64)
    key = v if lower_is_better else -v
    return [int(np.sum(key < x)) + 1 for x in key]


def aggregate(reports: list[MetricsReport]) -> tuple[dict, dict]:
    """Per-metric mean and sample std over runs (or batches)."""
    names = METRICS + ("runtime_seconds",)
    stats = {m: mean_std([getattr(r, m) for r in reports]) for m in names}
    return {m: s[0] for m, s in stats.items()}, {m: s[1] for m, s in stats.items()}


def rank_table(means: dict[str, dict[str, float]]) -> dict[str, dict[str, int]]:
    """Rank methods per metric given ``{method: {metric: mean}}``."""
    methods = list(means)
    out: dict[str, dict[str, int]] = {m: {} for m in methods}
    if not methods:
        return out
    for metric in means[methods[0]]:
        ranks = rank([means[m][metric] for m in methods], metric in LOWER_IS_BETTER)
        for m, r in zip(methods, ranks):
            out[m][metric] = r
    return out
