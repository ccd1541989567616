"""Binary-classification metrics, rank-sum testing, timing, and report files."""

import csv
import math
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError, UndefinedRateError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


def confusion(labels, predictions):
    """Standard confusion counts for 0/1 labels and predictions."""
    labels = np.asarray(labels, dtype=np.int64)
    predictions = np.asarray(predictions, dtype=np.int64)
    if labels.shape != predictions.shape or labels.ndim != 1:
        raise ShapeError(
            f"labels shape {labels.shape} and predictions shape {predictions.shape} must match"
        )
    pos = labels == 1
    pred_pos = predictions == 1
    return ConfusionCounts(
        tp=int(np.sum(pos & pred_pos)),
        fp=int(np.sum(~pos & pred_pos)),
        tn=int(np.sum(~pos & ~pred_pos)),
        fn=int(np.sum(pos & ~pred_pos)),
    )


def sensitivity(c):
    """True positive rate tp / (tp + fn)."""
    if c.tp + c.fn == 0:
        raise UndefinedRateError("sensitivity undefined: no positive samples")
    return c.tp / (c.tp + c.fn)


def specificity(c):
    """True negative rate tn / (tn + fp)."""
    if c.tn + c.fp == 0:
        raise UndefinedRateError("specificity undefined: no negative samples")
    return c.tn / (c.tn + c.fp)


@dataclass(frozen=True)
class ThresholdRow:
    threshold: float
    sensitivity: float | None  # None marks an undefined (0/0) rate
    specificity: float | None
    confusion: ConfusionCounts


def threshold_sweep(grades, labels, thresholds):
    """One (sensitivity, specificity, confusion) row per cut-off threshold.

    A sample is called positive when its grade is >= the threshold.
    Undefined rates are reported as None, never silently as zero.
    """
    grades = np.asarray(grades, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    rows = []
    for thr in thresholds:
        preds = (grades >= thr).astype(np.int64)
        c = confusion(labels, preds)
        try:
            sens = sensitivity(c)
        except UndefinedRateError:
            sens = None
        try:
            spec = specificity(c)
        except UndefinedRateError:
            spec = None
        rows.append(ThresholdRow(float(thr), sens, spec, c))
    return rows


@dataclass(frozen=True)
class RocPrResult:
    roc_points: list  # (fpr, tpr), sorted by fpr
    pr_points: list  # (recall, precision), recall ascending
    auc: float


def roc_pr_auc(grades, labels):
    """ROC and precision-recall curves over all distinct-grade thresholds.

    AUC is the trapezoid area under the ROC curve; tied grades advance tp
    and fp together, which matches the half-credit pair-counting convention.
    """
    grades = np.asarray(grades, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if grades.shape != labels.shape or grades.ndim != 1:
        raise ShapeError("grades and labels must be 1-D and the same length")
    npos = int(np.sum(labels == 1))
    nneg = int(np.sum(labels == 0))
    if npos == 0 or nneg == 0:
        raise DomainError("need at least one sample of each class")

    order = np.argsort(-grades, kind="mergesort")
    g = grades[order]
    lab = labels[order]

    roc = [(0.0, 0.0)]
    pr = []
    tp = fp = 0
    i = 0
    n = len(g)
    while i < n:
        j = i
        while j + 1 < n and g[j + 1] == g[i]:
            j += 1
        tp += int(np.sum(lab[i : j + 1] == 1))
        fp += int(np.sum(lab[i : j + 1] == 0))
        roc.append((fp / nneg, tp / npos))
        pr.append((tp / npos, tp / (tp + fp)))
        i = j + 1

    auc = 0.0
    for (x0, y0), (x1, y1) in zip(roc[:-1], roc[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return RocPrResult(roc_points=roc, pr_points=pr, auc=auc)


def confidence_interval(rate, n, p=1.96):
    """Half-width p * sqrt(rate * (1 - rate) / n) of the rate's interval."""
    if not 0.0 <= rate <= 1.0:
        raise DomainError(f"rate must lie in [0, 1], got {rate}")
    if n < 1:
        raise DomainError(f"sample count must be >= 1, got {n}")
    return p * math.sqrt(rate * (1.0 - rate) / n)


# ---------------------------------------------------------------------------
# Wilcoxon rank-sum


def _midranks(values):
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    sv = values[order]
    i = 0
    while i < len(sv):
        j = i
        while j + 1 < len(sv) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_ranksum_p(ranks, n, w):
    """Two-sided permutation p-value P(|W - mu| >= |w - mu|).

    Counts subsets by a subset-sum table over doubled midranks (midranks are
    multiples of 1/2, so doubling makes everything integer and the tail test
    exact).  Enumerates the smaller sample; the complement has the mirrored
    deviation, so the answer is identical.
    """
    N = ranks.size
    k = min(n, N - n)
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    mu2 = k * (N + 1)  # doubled mean rank-sum of a k-subset
    w2 = int(round(2.0 * w))
    if k != n:
        w2 = int(doubled.sum()) - w2
    dev = abs(w2 - mu2)

    smax = int(np.sort(doubled)[-k:].sum())
    dtype = np.int64 if math.comb(N, k) < 2**62 else np.float64
    table = np.zeros((k + 1, smax + 1), dtype=dtype)
    table[0, 0] = 1
    for r in doubled:
        r = int(r)
        for j in range(k, 0, -1):
            table[j, r:] += table[j - 1, : smax + 1 - r]
    dist = table[k]
    sums = np.arange(smax + 1)
    tail = dist[np.abs(sums - mu2) >= dev].sum()
    return float(tail / dist.sum())


def _normal_ranksum_p(pooled, n, m, w):
    N = n + m
    mu = n * (N + 1) / 2.0
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts.astype(np.float64) ** 3 - counts))
    sigma2 = n * m / 12.0 * ((N + 1) - tie_term / (N * (N - 1)))
    if sigma2 <= 0:
        return 1.0
    adj = max(abs(w - mu) - 0.5, 0.0)  # continuity correction
    z = adj / math.sqrt(sigma2)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def wilcoxon_rank_sum(a, b, method="auto"):
    """Two-sided rank-sum p-value for samples a and b.

    ``auto`` uses the exact permutation distribution when min(len(a),
    len(b)) <= 10 and the tie-corrected normal approximation otherwise.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise DomainError("both samples must be non-empty")
    n, m = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    w = float(ranks[:n].sum())
    if method == "auto":
        method = "exact" if min(n, m) <= 10 else "approx"
    if method == "exact":
        return _exact_ranksum_p(ranks, n, w)
    if method == "approx":
        return _normal_ranksum_p(pooled, n, m, w)
    raise DomainError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# timing and multi-run aggregation


@dataclass(frozen=True)
class TimingResult:
    mean_ms: float
    std_ms: float
    per_item_ms: float | None
    repeats: int
    items: int | None


def timing_harness(action, items=None, repeats=1):
    """Wall-clock an action on the monotonic clock; results in milliseconds.

    per_item_ms is absent (None) when no item count is given or it is zero.
    """
    times = []
    for _ in range(int(repeats)):
        t0 = time.perf_counter()
        action()
        times.append((time.perf_counter() - t0) * 1000.0)
    mean = statistics.fmean(times)
    std = statistics.stdev(times) if len(times) > 1 else 0.0
    per_item = mean / items if items else None
    return TimingResult(
        mean_ms=mean, std_ms=std, per_item_ms=per_item, repeats=len(times), items=items
    )


@dataclass(frozen=True)
class RunAggregate:
    mean: float
    std: float  # sample (n-1) standard deviation; 0.0 by convention for one run
    count: int


def aggregate_runs(values):
    """Sample mean and standard deviation of a per-run metric sequence."""
    values = [float(v) for v in values]
    if not values:
        raise DomainError("need at least one run")
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return RunAggregate(mean=mean, std=std, count=len(values))


# ---------------------------------------------------------------------------
# report files


def _fmt(v):
    return "" if v is None else repr(float(v))


def write_threshold_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "sensitivity", "specificity", "tp", "fp", "tn", "fn"])
        for row in rows:
            c = row.confusion
            writer.writerow(
                [repr(row.threshold), _fmt(row.sensitivity), _fmt(row.specificity),
                 c.tp, c.fp, c.tn, c.fn]
            )


def write_roc_csv(path, roc_points):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr"])
        for fpr, tpr in roc_points:
            writer.writerow([repr(float(fpr)), repr(float(tpr))])


def write_pr_csv(path, pr_points):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["recall", "precision"])
        for recall, precision in pr_points:
            writer.writerow([repr(float(recall)), repr(float(precision))])


def write_grades_csv(path, ids, labels, grades):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label", "grade"])
        for i, lab, g in zip(ids, labels, grades):
            writer.writerow([i, int(lab), repr(float(g))])


def read_grades_csv(path):
    ids, labels, grades = [], [], []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["id", "label", "grade"]:
            raise DomainError(f"unexpected grades header in {path}: {header}")
        for row in reader:
            ids.append(row[0])
            labels.append(int(row[1]))
            grades.append(float(row[2]))
    return ids, np.asarray(labels, dtype=np.int64), np.asarray(grades, dtype=np.float64)


def format_summary(auc, rows, class_counts, timings=None, wilcoxon=None, ci_p=1.96):
    """Structured-text evaluation summary: AUC, per-threshold CIs, timings,
    and optional rank-sum p-values against a baseline group."""
    lines = []
    lines.append(f"auc: {auc:.6f}")
    npos, nneg = class_counts
    lines.append(f"test positives: {npos}")
    lines.append(f"test negatives: {nneg}")
    lines.append("")
    lines.append(f"confidence intervals (p={ci_p}):")
    for row in rows:
        sens = "undefined" if row.sensitivity is None else (
            f"{row.sensitivity:.4f} +/- {confidence_interval(row.sensitivity, npos, ci_p):.4f}"
        )
        spec = "undefined" if row.specificity is None else (
            f"{row.specificity:.4f} +/- {confidence_interval(row.specificity, nneg, ci_p):.4f}"
        )
        lines.append(f"  threshold {row.threshold:g}: sensitivity {sens}, specificity {spec}")
    if timings:
        lines.append("")
        lines.append("timings:")
        for name, value in timings.items():
            lines.append(f"  {name}: {value}")
    if wilcoxon:
        lines.append("")
        lines.append("rank-sum p-values vs baseline:")
        for name, p in wilcoxon.items():
            lines.append(f"  {name}: {p:.6g}")
    return "\n".join(lines) + "\n"
